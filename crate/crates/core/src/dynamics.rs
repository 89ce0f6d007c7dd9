//! Time-dependent Pockels-cell retardance.
//!
//! The drive pulse sets the electro-optic retardance through a linear
//! voltage-to-phase map. On top of it the crystal rings mechanically after
//! each trigger, and every trigger leaves a slowly recovering residual
//! retardance. Times are in seconds, voltages in volts, phases in radians.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

fn require<T: Real>(name: &'static str, value: T, ok: bool, expected: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: to_f64(value),
            expected,
        })
    }
}

/// High-voltage pulse: flat top followed by an exponential decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveWaveform<T> {
    pub v_peak: T,
    pub t_flat: T,
    pub tau_decay: T,
    pub jitter_sigma: T,
}

impl<T: Real> DriveWaveform<T> {
    /// 3200 V, 10 ns flat top, 500 ns decay, 1.5 ns jitter.
    pub fn standard() -> Self {
        Self {
            v_peak: lit(3200.0),
            t_flat: lit(10e-9),
            tau_decay: lit(500e-9),
            jitter_sigma: lit(1.5e-9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        require("drive.v_peak", self.v_peak, self.v_peak > T::zero(), "> 0")?;
        require("drive.t_flat", self.t_flat, self.t_flat >= T::zero(), ">= 0")?;
        require("drive.tau_decay", self.tau_decay, self.tau_decay > T::zero(), "> 0")?;
        require(
            "drive.jitter_sigma",
            self.jitter_sigma,
            self.jitter_sigma >= T::zero(),
            ">= 0",
        )
    }

    pub fn voltage(&self, dt: T) -> T {
        drive_voltage(self, dt)
    }
}

pub fn drive_voltage<T: Real>(w: &DriveWaveform<T>, dt: T) -> T {
    if dt < T::zero() {
        T::zero()
    } else if dt <= w.t_flat {
        w.v_peak
    } else {
        w.v_peak * (-(dt - w.t_flat) / w.tau_decay).exp()
    }
}

/// Linear electro-optic map: `v_halfwave` gives a retardance of pi.
pub fn retardance_of_voltage<T: Real>(v: T, v_halfwave: T) -> T {
    T::PI() * v / v_halfwave
}

/// Damped piezoelectric oscillation excited by each trigger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingingModel<T> {
    pub amplitude: T,
    pub omega: T,
    pub tau_damp: T,
    pub phase0: T,
    pub onset_delay: T,
}

impl<T: Real> RingingModel<T> {
    pub fn none() -> Self {
        Self {
            amplitude: T::zero(),
            omega: T::zero(),
            tau_damp: lit(1e-6),
            phase0: T::zero(),
            onset_delay: T::zero(),
        }
    }

    /// Default ringing: 0.3 rad at 1.2 MHz, 0.6 us damping, 60 ns onset.
    /// Keeps the transmitted intensity more than a factor 100 below the
    /// activation peak from 4 us after the trigger onward.
    pub fn standard() -> Self {
        Self {
            amplitude: lit(0.3),
            omega: lit(2.0 * std::f64::consts::PI * 1.2e6),
            tau_damp: lit(0.6e-6),
            phase0: T::zero(),
            onset_delay: lit(60e-9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        require("ringing.amplitude", self.amplitude, self.amplitude >= T::zero(), ">= 0")?;
        require("ringing.tau_damp", self.tau_damp, self.tau_damp > T::zero(), "> 0")?;
        require("ringing.omega", self.omega, true, "finite values")?;
        require("ringing.phase0", self.phase0, true, "finite values")?;
        require("ringing.onset_delay", self.onset_delay, true, "finite values")
    }

    pub fn envelope(&self, dt: T) -> T {
        if dt < self.onset_delay {
            T::zero()
        } else {
            self.amplitude * (-(dt - self.onset_delay) / self.tau_damp).exp()
        }
    }
}

pub fn ringing_retardance<T: Real>(r: &RingingModel<T>, dt: T) -> T {
    if dt < r.onset_delay || r.amplitude == T::zero() {
        return T::zero();
    }
    let s = dt - r.onset_delay;
    r.amplitude * (-s / r.tau_damp).exp() * (r.omega * s + r.phase0).cos()
}

/// Residual retardance each trigger leaves behind, relaxing exponentially.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryModel<T> {
    pub tau_recovery: T,
    pub residual: T,
}

impl<T: Real> RecoveryModel<T> {
    pub fn none() -> Self {
        Self {
            tau_recovery: lit(1e-6),
            residual: T::zero(),
        }
    }

    /// 0.1 rad residual relaxing with a 100 us time constant.
    pub fn standard() -> Self {
        Self {
            tau_recovery: lit(100e-6),
            residual: lit(0.1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        require(
            "recovery.tau_recovery",
            self.tau_recovery,
            self.tau_recovery > T::zero(),
            "> 0",
        )?;
        require("recovery.residual", self.residual, true, "finite values")
    }

    pub fn residual_at(&self, dt: T) -> T {
        if dt < T::zero() || self.residual == T::zero() {
            T::zero()
        } else {
            self.residual * (-dt / self.tau_recovery).exp()
        }
    }
}

/// Pockels cell with its trigger history.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState<T> {
    trigger_times: Vec<T>,
    pub drive: DriveWaveform<T>,
    pub ringing: RingingModel<T>,
    pub recovery: RecoveryModel<T>,
    pub halfwave_voltage: T,
}

impl<T: Real> CellState<T> {
    pub fn new(
        drive: DriveWaveform<T>,
        ringing: RingingModel<T>,
        recovery: RecoveryModel<T>,
        halfwave_voltage: T,
    ) -> Result<Self> {
        drive.validate()?;
        ringing.validate()?;
        recovery.validate()?;
        require(
            "cell.halfwave_voltage",
            halfwave_voltage,
            halfwave_voltage > T::zero(),
            "> 0",
        )?;
        Ok(Self {
            trigger_times: Vec::new(),
            drive,
            ringing,
            recovery,
            halfwave_voltage,
        })
    }

    /// Ideal cell: standard drive at 3200 V half-wave voltage, no ringing,
    /// no residual.
    pub fn ideal() -> Self {
        Self::new(
            DriveWaveform::standard(),
            RingingModel::none(),
            RecoveryModel::none(),
            lit(3200.0),
        )
        .expect("standard parameters are valid")
    }

    pub fn with_triggers(mut self, trigger_times: Vec<T>) -> Result<Self> {
        if let Some(index) = trigger_times
            .windows(2)
            .position(|w| !(w[1] > w[0]))
            .map(|i| i + 1)
        {
            return Err(Error::TriggersNotIncreasing { index });
        }
        if trigger_times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("trigger times"));
        }
        self.trigger_times = trigger_times;
        Ok(self)
    }

    pub fn without_triggers(&self) -> Self {
        Self {
            trigger_times: Vec::new(),
            ..self.clone()
        }
    }

    pub fn trigger_times(&self) -> &[T] {
        &self.trigger_times
    }

    pub fn effective_retardance(&self, t: T) -> T {
        effective_retardance(self, t)
    }
}

/// Retardance seen by a pulse at absolute time `t`: drive of the most
/// recent trigger, plus ringing and recovery residuals of every trigger so
/// far, clamped to `[0, 2 pi]`.
pub fn effective_retardance<T: Real>(c: &CellState<T>, t: T) -> T {
    let past = c.trigger_times.partition_point(|tk| *tk <= t);
    if past == 0 {
        return T::zero();
    }
    let latest = c.trigger_times[past - 1];
    let mut phi = retardance_of_voltage(drive_voltage(&c.drive, t - latest), c.halfwave_voltage);
    for tk in &c.trigger_times[..past] {
        let dt = t - *tk;
        phi = phi + ringing_retardance(&c.ringing, dt) + c.recovery.residual_at(dt);
    }
    phi.max(T::zero()).min(T::TAU())
}

/// Shifts each requested trigger by a Gaussian draw of width
/// `jitter_sigma`, using a ChaCha8 stream seeded with `seed`. The k-th
/// trigger always receives the k-th draw.
pub fn sample_trigger_times<T: Real>(requested: &[T], jitter_sigma: T, seed: u64) -> Result<Vec<T>> {
    if let Some(i) = requested.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::TriggersNotIncreasing { index: i + 1 });
    }
    require("jitter_sigma", jitter_sigma, jitter_sigma >= T::zero(), ">= 0")?;
    if jitter_sigma == T::zero() {
        return Ok(requested.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out: Vec<T> = requested
        .iter()
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            *t + jitter_sigma * lit(z)
        })
        .collect();
    if let Some(i) = out.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::JitterCollision { index: i + 1 });
    }
    Ok(out)
}
