//! Fidelity and transmittivity figures of merit, the characterization
//! protocol built on them, and inverse calibration of device parameters.

use std::fmt;

use crate::dynamics::CellState;
use crate::elements::{build_shutter, Device, ShutterParams};
use crate::engine::{measure_at_frequency, simulate_static, MeasurementProtocol};
use crate::error::{Error, Result};
use crate::polarization::Polarization;
use crate::scalar::{lit, to_f64, Real};

/// Fraction of the transmitted light found in the input polarization.
pub fn fidelity_on<T: Real>(i_par: T, i_perp: T) -> Result<T> {
    if i_par < T::zero() || i_perp < T::zero() {
        return Err(Error::InvalidParameter {
            name: "intensity",
            value: to_f64(i_par.min(i_perp)),
            expected: ">= 0",
        });
    }
    let total = i_par + i_perp;
    if total == T::zero() {
        return Err(Error::UndefinedFidelity);
    }
    Ok(i_par / total)
}

/// Transmitted fraction of the incident intensity.
pub fn transmittivity<T: Real>(i_par: T, i_perp: T, i_in: T) -> Result<T> {
    if !(i_in > T::zero()) {
        return Err(Error::NonPositiveIncident(to_f64(i_in)));
    }
    Ok((i_par + i_perp) / i_in)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterizationRecord<T> {
    pub polarization: Polarization,
    pub f_on: T,
    pub t_on: T,
    pub t_off: T,
}

impl<T: Real> fmt::Display for CharacterizationRecord<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: F_ON={:.4} T_ON={:.4} T_OFF={:.4}",
            self.polarization, self.f_on, self.t_on, self.t_off
        )
    }
}

/// Runs the ON/OFF protocol at `trigger_frequency` for each polarization.
/// Records come back sorted by polarization (+, -, H, V).
pub fn characterize<T: Real>(
    device: &Device<T>,
    cell: &CellState<T>,
    polarizations: &[Polarization],
    trigger_frequency: T,
    protocol: &MeasurementProtocol<T>,
) -> Result<Vec<CharacterizationRecord<T>>> {
    let mut pols = polarizations.to_vec();
    pols.sort();
    pols.dedup();
    measure_at_frequency(device, cell, &pols, trigger_frequency, protocol)
}

pub fn mean_fidelity<T: Real>(records: &[CharacterizationRecord<T>]) -> T {
    mean(records.iter().map(|r| r.f_on))
}

pub fn mean_t_off<T: Real>(records: &[CharacterizationRecord<T>]) -> T {
    mean(records.iter().map(|r| r.t_off))
}

fn mean<T: Real>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / lit(n as f64)
    }
}

/// Arm phase difference giving a diagonal-basis fidelity of `target`:
/// `F = cos^2(dchi / 2)`.
pub fn calibrate_phase_error<T: Real>(target_diagonal_fidelity: T) -> Result<T> {
    let f = target_diagonal_fidelity;
    if !(f > lit(0.5) && f <= T::one()) {
        return Err(Error::InvalidParameter {
            name: "target diagonal fidelity",
            value: to_f64(f),
            expected: "(0.5, 1]",
        });
    }
    Ok(lit::<T>(2.0) * f.sqrt().acos())
}

/// Target figures of merit for calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTargets<T> {
    pub t_on: T,
    /// F_ON for H and V inputs.
    pub f_on_hv: T,
    /// F_ON for +45 / -45 inputs; leaves the arm phase alone when absent.
    pub f_on_diag: Option<T>,
    pub t_off_h: T,
    pub t_off_v: T,
    /// T_OFF for +45 / -45 inputs.
    pub t_off_diag: Option<T>,
}

impl<T: Real> CalibrationTargets<T> {
    /// The 1 kHz measurement table.
    pub fn measured_table() -> Self {
        Self {
            t_on: lit(0.991),
            f_on_hv: lit(0.998),
            f_on_diag: Some(lit(0.956)),
            t_off_h: lit(0.0050),
            t_off_v: lit(0.0020),
            t_off_diag: Some(lit(0.0025)),
        }
    }

    pub fn ideal() -> Self {
        Self {
            t_on: T::one(),
            f_on_hv: T::one(),
            f_on_diag: Some(T::one()),
            t_off_h: T::zero(),
            t_off_v: T::zero(),
            t_off_diag: Some(T::zero()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name, v: T, ok: bool, expected| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value: to_f64(v),
                    expected,
                })
            }
        };
        check("targets.t_on", self.t_on, self.t_on > T::zero() && self.t_on <= T::one(), "(0, 1]")?;
        let half = lit::<T>(0.5);
        check(
            "targets.f_on_hv",
            self.f_on_hv,
            self.f_on_hv > half && self.f_on_hv <= T::one(),
            "(0.5, 1]",
        )?;
        if let Some(f) = self.f_on_diag {
            check("targets.f_on_diag", f, f > half && f <= T::one(), "(0.5, 1]")?;
        }
        let offs = [
            ("targets.t_off_h", Some(self.t_off_h)),
            ("targets.t_off_v", Some(self.t_off_v)),
            ("targets.t_off_diag", self.t_off_diag),
        ];
        for (name, v) in offs {
            if let Some(v) = v {
                check(name, v, v >= T::zero() && v < T::one(), "[0, 1)")?;
            }
        }
        Ok(())
    }

    /// H and V extinction targets actually fitted.
    ///
    /// For any linear device whose ±45 extinctions are equal, T_OFF(±45)
    /// is the mean of T_OFF(H) and T_OFF(V). When a diagonal target is
    /// given, the H and V targets are shifted by a common amount so that
    /// the largest of the three mismatches is as small as possible.
    pub fn fitted_t_off(&self) -> (T, T) {
        match self.t_off_diag {
            None => (self.t_off_h, self.t_off_v),
            Some(d) => {
                let two = lit::<T>(2.0);
                let shift = ((self.t_off_h + self.t_off_v) / two - d) / two;
                (
                    (self.t_off_h - shift).max(T::zero()),
                    (self.t_off_v - shift).max(T::zero()),
                )
            }
        }
    }

    /// Expected value of each characterization cell.
    pub fn expected(&self, pol: Polarization) -> (Option<T>, T, T) {
        match pol {
            Polarization::H => (Some(self.f_on_hv), self.t_on, self.t_off_h),
            Polarization::V => (Some(self.f_on_hv), self.t_on, self.t_off_v),
            Polarization::Plus | Polarization::Minus => (
                self.f_on_diag,
                self.t_on,
                self.t_off_diag
                    .unwrap_or_else(|| (self.t_off_h + self.t_off_v) / lit(2.0)),
            ),
        }
    }
}

/// Share of the total transmission carried by each lossy element.
fn set_transmission<T: Real>(p: &mut ShutterParams<T>, total: T) {
    let each = total.powf(lit(0.25));
    p.displacer_in.transmission = each;
    p.pockels.transmission = each;
    p.displacer_out.transmission = each;
    p.hwp.transmission = each;
}

fn static_transmission<T: Real>(p: &ShutterParams<T>, retardance: T, pol: Polarization) -> Result<T> {
    let device = build_shutter(p)?;
    Ok(simulate_static(&device, retardance, &pol.state()).transmitted)
}

/// Monotone bisection of `f(x) = target` on `[0, hi]`.
fn bisect<T: Real>(f: impl Fn(T) -> Result<T>, target: T, hi: T) -> Result<Option<T>> {
    if target <= f(T::zero())? {
        return Ok(Some(T::zero()));
    }
    if target > f(hi)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (T::zero(), hi);
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some((lo + hi) / lit(2.0)))
}

/// Fits the output half-wave-plate retardance (H/V fidelity), the displacer
/// leakages (H and V extinction) and the element transmissions (T_ON),
/// keeping the arm phase of `base`. Works on the static ON (retardance pi)
/// and OFF (retardance 0) device.
pub fn calibrate_losses_and_leakage<T: Real>(
    targets: &CalibrationTargets<T>,
    base: &ShutterParams<T>,
) -> Result<ShutterParams<T>> {
    targets.validate()?;
    let mut p = base.clone();
    p.hwp.retardance = lit::<T>(2.0) * targets.f_on_hv.sqrt().asin();
    let (off_h, off_v) = targets.fitted_t_off();
    let max_leak = lit::<T>(crate::elements::MAX_LEAKAGE);
    let mut total = targets.t_on;
    set_transmission(&mut p, total);
    let infeasible = |reason: &str, residuals: Vec<(String, f64)>| Error::CalibrationFailed {
        reason: reason.to_string(),
        residuals,
    };

    for _ in 0..12 {
        let lh = bisect(
            |l| {
                let mut q = p.clone();
                q.displacer_in.leakage_h = l;
                q.displacer_out.leakage_h = l;
                static_transmission(&q, T::zero(), Polarization::H)
            },
            off_h,
            max_leak,
        )?
        .ok_or_else(|| infeasible("H extinction target above the leakage range", vec![("t_off(H)".into(), to_f64(off_h))]))?;
        p.displacer_in.leakage_h = lh;
        p.displacer_out.leakage_h = lh;

        let lv = bisect(
            |l| {
                let mut q = p.clone();
                q.displacer_in.leakage_v = l;
                q.displacer_out.leakage_v = l;
                static_transmission(&q, T::zero(), Polarization::V)
            },
            off_v,
            max_leak,
        )?
        .ok_or_else(|| infeasible("V extinction target above the leakage range", vec![("t_off(V)".into(), to_f64(off_v))]))?;
        p.displacer_in.leakage_v = lv;
        p.displacer_out.leakage_v = lv;

        let t_on = (static_transmission(&p, T::PI(), Polarization::H)?
            + static_transmission(&p, T::PI(), Polarization::V)?)
            / lit(2.0);
        let next = total * targets.t_on / t_on;
        if next > T::one() + T::tolerance() {
            return Err(infeasible(
                "T_ON target unreachable with the fitted leakage",
                vec![("t_on".into(), to_f64(t_on / total))],
            ));
        }
        total = next.min(T::one());
        set_transmission(&mut p, total);
    }
    Ok(p)
}

/// Outcome of a full calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration<T> {
    pub params: ShutterParams<T>,
    pub records: Vec<CharacterizationRecord<T>>,
    /// `(cell name, simulated - target)` for every table cell.
    pub residuals: Vec<(String, T)>,
}

impl<T: Real> Calibration<T> {
    pub fn max_abs_residual(&self) -> T {
        self.residuals
            .iter()
            .map(|(_, r)| r.abs())
            .fold(T::zero(), T::max)
    }
}

pub fn residuals<T: Real>(
    records: &[CharacterizationRecord<T>],
    targets: &CalibrationTargets<T>,
) -> Vec<(String, T)> {
    let mut out = Vec::new();
    for r in records {
        let (f, t_on, t_off) = targets.expected(r.polarization);
        if let Some(f) = f {
            out.push((format!("f_on({})", r.polarization), r.f_on - f));
        }
        out.push((format!("t_on({})", r.polarization), r.t_on - t_on));
        out.push((format!("t_off({})", r.polarization), r.t_off - t_off));
    }
    out
}

/// Arm phase first (it only affects the diagonal basis), then leakage,
/// wave-plate retardance and transmissions on the static device. The
/// static targets are then corrected by the residuals of a forward
/// characterization (which sees the cell dynamics) for a few rounds. The
/// result is rejected if any cell misses its target by more than
/// `tolerance`.
pub fn calibrate<T: Real>(
    targets: &CalibrationTargets<T>,
    base: &ShutterParams<T>,
    cell: &CellState<T>,
    trigger_frequency: T,
    protocol: &MeasurementProtocol<T>,
    tolerance: T,
) -> Result<Calibration<T>> {
    const ROUNDS: usize = 4;
    targets.validate()?;
    let mut start = base.clone();
    if let Some(f) = targets.f_on_diag {
        let residual = base.arm_phase_difference() - base.displacer_out.tilt_phase;
        start.displacer_out.tilt_phase = calibrate_phase_error(f)? - residual;
    }
    let (off_h, off_v) = targets.fitted_t_off();
    let mut fit = CalibrationTargets {
        t_off_h: off_h,
        t_off_v: off_v,
        t_off_diag: None,
        ..*targets
    };
    let mut round = 0;
    let calibration = loop {
        let params = calibrate_losses_and_leakage(&fit, &start)?;
        let device = build_shutter(&params)?;
        let records = characterize(&device, cell, &Polarization::ALL, trigger_frequency, protocol)?;
        let residuals = residuals(&records, targets);
        round += 1;
        if round == ROUNDS {
            break Calibration {
                params,
                records,
                residuals,
            };
        }
        let of = |pol| records.iter().find(|r| r.polarization == pol);
        let (h, v) = match (of(Polarization::H), of(Polarization::V)) {
            (Some(h), Some(v)) => (h, v),
            _ => unreachable!("characterize returns every requested polarization"),
        };
        let two = lit::<T>(2.0);
        let t_on = mean(records.iter().map(|r| r.t_on));
        fit.t_on = (fit.t_on * targets.t_on / t_on).min(T::one());
        fit.f_on_hv = (fit.f_on_hv + targets.f_on_hv - (h.f_on + v.f_on) / two).min(T::one());
        fit.t_off_h = (fit.t_off_h + off_h - h.t_off).max(T::zero());
        fit.t_off_v = (fit.t_off_v + off_v - v.t_off).max(T::zero());
    };
    if calibration.max_abs_residual() > tolerance {
        return Err(Error::CalibrationFailed {
            reason: format!("forward characterization misses targets by more than {tolerance}"),
            residuals: calibration
                .residuals
                .iter()
                .map(|(n, r)| (n.clone(), to_f64(*r)))
                .collect(),
        });
    }
    Ok(calibration)
}

/// Analyzer setting (linear angle) maximizing the transmitted intensity of
/// `device` in the static ON state, scanned in `steps` equal angle steps.
pub fn best_linear_analyzer<T: Real>(
    device: &Device<T>,
    input: &crate::polarization::JonesVector<T>,
    steps: usize,
) -> Result<T> {
    let out = simulate_static(device, T::PI(), input);
    let mut best = (T::zero(), -T::one());
    for k in 0..steps {
        let angle = T::PI() * lit(k as f64) / lit(steps as f64);
        let (par, _) = out.analyzer_intensities(&crate::polarization::JonesVector::linear(angle))?;
        if par > best.1 {
            best = (angle, par);
        }
    }
    Ok(best.0)
}
