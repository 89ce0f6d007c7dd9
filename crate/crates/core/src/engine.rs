//! Time-domain pulse-train simulation.
//!
//! Laser pulses are instantaneous events: each one sees the Pockels cell
//! frozen at the retardance it has at the pulse arrival time.

use rayon::prelude::*;

use crate::dynamics::{sample_trigger_times, CellState};
use crate::elements::Device;
use crate::error::{Error, Result};
use crate::metrics::{fidelity_on, transmittivity, CharacterizationRecord};
use crate::polarization::{analyzer_intensities, JonesVector, Polarization};
use crate::scalar::{lit, to_f64, Real};

/// Pulsed laser feeding the shutter.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig<T> {
    pub rep_rate: T,
    /// Metadata only.
    pub wavelength_nm: T,
    /// Metadata only.
    pub bandwidth_nm: T,
    pub polarization: JonesVector<T>,
    pub intensity: T,
}

impl<T: Real> SourceConfig<T> {
    /// 250 kHz, 800 nm, 1.5 nm bandwidth, H polarized, unit intensity.
    pub fn standard() -> Self {
        Self {
            rep_rate: lit(250e3),
            wavelength_nm: lit(800.0),
            bandwidth_nm: lit(1.5),
            polarization: JonesVector::horizontal(),
            intensity: T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rep_rate > T::zero() && self.rep_rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "source.rep_rate",
                value: to_f64(self.rep_rate),
                expected: "> 0",
            });
        }
        if !(self.intensity > T::zero() && self.intensity.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "source.intensity",
                value: to_f64(self.intensity),
                expected: "> 0",
            });
        }
        if !self.polarization.is_normalized() {
            return Err(Error::NotNormalized {
                intensity: to_f64(self.polarization.intensity()),
            });
        }
        Ok(())
    }

    pub fn period(&self) -> T {
        T::one() / self.rep_rate
    }
}

/// Outcome of one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseOutcome<T> {
    pub retardance: T,
    /// Field on the device output rail, one per displacer branch; the first
    /// is the leakage-free path.
    pub outputs: Vec<JonesVector<T>>,
    pub transmitted: T,
    pub blocked: T,
}

impl<T: Real> PulseOutcome<T> {
    /// Output field of the leakage-free path.
    pub fn output(&self) -> &JonesVector<T> {
        &self.outputs[0]
    }

    /// Intensities along and orthogonal to `reference`, summed over branches.
    pub fn analyzer_intensities(&self, reference: &JonesVector<T>) -> Result<(T, T)> {
        self.outputs
            .iter()
            .try_fold((T::zero(), T::zero()), |(p, q), out| {
                let (dp, dq) = analyzer_intensities(out, reference)?;
                Ok((p + dp, q + dq))
            })
    }
}

/// Sends `input` (on rail 0) through `device` with the Pockels retardance
/// the cell has at time `t`.
pub fn simulate_pulse<T: Real>(
    device: &Device<T>,
    cell: &CellState<T>,
    t: T,
    input: &JonesVector<T>,
) -> PulseOutcome<T> {
    let retardance = cell.effective_retardance(t);
    simulate_static(device, retardance, input)
}

/// Same as [`simulate_pulse`] with a fixed Pockels retardance.
pub fn simulate_static<T: Real>(
    device: &Device<T>,
    retardance: T,
    input: &JonesVector<T>,
) -> PulseOutcome<T> {
    let prop = device.propagate(&device.input_state(*input), Some(retardance));
    PulseOutcome {
        retardance,
        outputs: prop.fields_on(device.output_rail()),
        transmitted: prop.total_intensity(),
        blocked: prop.blocked,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSample<T> {
    pub time: T,
    pub retardance: T,
    pub transmitted: T,
    pub blocked: T,
    /// Output intensity along the source polarization.
    pub i_par: T,
    /// Output intensity orthogonal to the source polarization.
    pub i_perp: T,
}

/// Laser pulses at `k / rep_rate` for `k = 0..=floor(duration * rep_rate)`.
pub fn simulate_train<T: Real>(
    source: &SourceConfig<T>,
    device: &Device<T>,
    cell: &CellState<T>,
    duration: T,
) -> Result<Vec<TrainSample<T>>> {
    source.validate()?;
    if !(duration > T::zero() && duration.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "duration",
            value: to_f64(duration),
            expected: "> 0",
        });
    }
    let n = (duration * source.rep_rate)
        .floor()
        .to_usize()
        .ok_or(Error::NonFinite("pulse count"))?;
    let input = source.polarization.scale(source.intensity.sqrt());
    (0..=n)
        .map(|k| {
            let time = lit::<T>(k as f64) / source.rep_rate;
            let out = simulate_pulse(device, cell, time, &input);
            let (i_par, i_perp) = out.analyzer_intensities(&source.polarization)?;
            Ok(TrainSample {
                time,
                retardance: out.retardance,
                transmitted: out.transmitted,
                blocked: out.blocked,
                i_par,
                i_perp,
            })
        })
        .collect()
}

/// Abscissa plus named metric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub abscissa_name: String,
    pub abscissa: Vec<T>,
    pub columns: Vec<(String, Vec<T>)>,
    pub seed: u64,
}

impl<T: Real> SweepResult<T> {
    pub fn column(&self, name: &str) -> Option<&[T]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Transmitted intensity versus time since a single trigger at `t = 0`,
/// sampled every `resolution` up to `window`, for each basis input.
pub fn sweep_time_after_trigger<T: Real>(
    device: &Device<T>,
    cell: &CellState<T>,
    window: T,
    resolution: T,
) -> Result<SweepResult<T>> {
    for (name, v) in [("window", window), ("resolution", resolution)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::InvalidParameter {
                name,
                value: to_f64(v),
                expected: "> 0",
            });
        }
    }
    let n = (window / resolution)
        .floor()
        .to_usize()
        .ok_or(Error::NonFinite("sample count"))?;
    let times: Vec<T> = (0..=n)
        .map(|k| lit::<T>(k as f64) * resolution)
        .collect();
    sweep_time_points(device, cell, &times)
}

/// Transmitted intensity at the given delays after a single trigger at
/// `t = 0`, for each basis input. Delays must be strictly increasing.
pub fn sweep_time_points<T: Real>(
    device: &Device<T>,
    cell: &CellState<T>,
    times: &[T],
) -> Result<SweepResult<T>> {
    if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter {
            name: "times",
            value: to_f64(times[i + 1]),
            expected: "strictly increasing values",
        });
    }
    let cell = cell.without_triggers().with_triggers(vec![T::zero()])?;
    let columns = Polarization::ALL
        .iter()
        .map(|pol| {
            let input = pol.state::<T>();
            let values = times
                .iter()
                .map(|t| simulate_pulse(device, &cell, *t, &input).transmitted)
                .collect();
            (format!("t_{}", column_suffix(*pol)), values)
        })
        .collect();
    Ok(SweepResult {
        abscissa_name: "time_s".into(),
        abscissa: times.to_vec(),
        columns,
        seed: 0,
    })
}

pub(crate) fn column_suffix(pol: Polarization) -> &'static str {
    match pol {
        Polarization::H => "h",
        Polarization::V => "v",
        Polarization::Plus => "plus",
        Polarization::Minus => "minus",
    }
}

/// How a characterization point is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementProtocol<T> {
    pub rep_rate: T,
    /// Triggers discarded before averaging.
    pub warmup_triggers: usize,
    /// Triggers averaged after the warm-up.
    pub averaged_triggers: usize,
    pub seed: u64,
}

impl<T: Real> MeasurementProtocol<T> {
    pub fn standard(rep_rate: T, seed: u64) -> Self {
        Self {
            rep_rate,
            warmup_triggers: 10,
            averaged_triggers: 100,
            seed,
        }
    }
}

/// Accumulated intensities for one polarization at one trigger frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointIntensities<T> {
    pub on_par: T,
    pub on_perp: T,
    pub off_par: T,
    pub off_perp: T,
    pub incident: T,
}

impl<T: Real> PointIntensities<T> {
    pub fn record(&self, polarization: Polarization) -> Result<CharacterizationRecord<T>> {
        Ok(CharacterizationRecord {
            polarization,
            f_on: fidelity_on(self.on_par, self.on_perp)?,
            t_on: transmittivity(self.on_par, self.on_perp, self.incident)?,
            t_off: transmittivity(self.off_par, self.off_perp, self.incident)?,
        })
    }
}

/// Trigger schedule for a frequency point: trigger `k` is placed half a
/// flat-top before laser pulse `round(k R / f)`, so the ON pulse lands in
/// the middle of the flat top; the OFF pulse is the last laser pulse before
/// the next ON pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerSchedule<T> {
    pub cell: CellState<T>,
    /// `(on_time, off_time)` for each averaged trigger.
    pub probes: Vec<(T, T)>,
}

pub fn schedule_triggers<T: Real>(
    cell: &CellState<T>,
    frequency: T,
    protocol: &MeasurementProtocol<T>,
) -> Result<TriggerSchedule<T>> {
    let r = protocol.rep_rate;
    if !(frequency > T::zero() && frequency.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "trigger frequency",
            value: to_f64(frequency),
            expected: "> 0",
        });
    }
    let ratio = r / frequency;
    if !(ratio >= lit(2.0)) {
        return Err(Error::InvalidParameter {
            name: "trigger frequency",
            value: to_f64(frequency),
            expected: "at most half the laser repetition rate",
        });
    }
    if protocol.averaged_triggers == 0 {
        return Err(Error::InvalidParameter {
            name: "averaged_triggers",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let offset = cell.drive.t_flat / lit(2.0);
    let n = protocol.warmup_triggers + protocol.averaged_triggers;
    let pulse_index = |k: usize| (lit::<T>(k as f64) * ratio).round();
    let pulse_time = |j: T| j / r + offset;
    let nominal: Vec<T> = (0..n).map(|k| pulse_index(k) / r).collect();
    let jittered = sample_trigger_times(&nominal, cell.drive.jitter_sigma, protocol.seed)?;
    let probes = (protocol.warmup_triggers..n)
        .map(|k| {
            let on = pulse_time(pulse_index(k));
            let off = pulse_time(pulse_index(k + 1) - T::one());
            (on, off)
        })
        .collect();
    Ok(TriggerSchedule {
        cell: cell.without_triggers().with_triggers(jittered)?,
        probes,
    })
}

/// Runs the ON/OFF protocol for one input polarization.
pub fn measure_point<T: Real>(
    device: &Device<T>,
    schedule: &TriggerSchedule<T>,
    polarization: Polarization,
) -> Result<PointIntensities<T>> {
    let input = polarization.state::<T>();
    let mut acc = PointIntensities {
        on_par: T::zero(),
        on_perp: T::zero(),
        off_par: T::zero(),
        off_perp: T::zero(),
        incident: T::zero(),
    };
    for (on, off) in &schedule.probes {
        let out_on = simulate_pulse(device, &schedule.cell, *on, &input);
        let (p, q) = out_on.analyzer_intensities(&input)?;
        acc.on_par = acc.on_par + p;
        acc.on_perp = acc.on_perp + q;
        let out_off = simulate_pulse(device, &schedule.cell, *off, &input);
        let (p, q) = out_off.analyzer_intensities(&input)?;
        acc.off_par = acc.off_par + p;
        acc.off_perp = acc.off_perp + q;
        acc.incident = acc.incident + input.intensity();
    }
    Ok(acc)
}

/// Characterization records for `polarizations` at one trigger frequency,
/// returned in the order given.
pub fn measure_at_frequency<T: Real>(
    device: &Device<T>,
    cell: &CellState<T>,
    polarizations: &[Polarization],
    frequency: T,
    protocol: &MeasurementProtocol<T>,
) -> Result<Vec<CharacterizationRecord<T>>> {
    let schedule = schedule_triggers(cell, frequency, protocol)?;
    polarizations
        .par_iter()
        .map(|pol| measure_point(device, &schedule, *pol)?.record(*pol))
        .collect()
}

type Pick<T> = fn(&CharacterizationRecord<T>) -> T;

/// Steady-state F_ON, T_ON and T_OFF per basis ({H, V} and {+, -}) versus
/// trigger frequency. Basis values are the means over the two states.
pub fn sweep_trigger_frequency<T: Real>(
    device: &Device<T>,
    cell: &CellState<T>,
    frequencies: &[T],
    protocol: &MeasurementProtocol<T>,
) -> Result<SweepResult<T>> {
    if let Some(i) = frequencies.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter {
            name: "frequencies",
            value: to_f64(frequencies[i + 1]),
            expected: "strictly increasing values",
        });
    }
    let points: Vec<Vec<CharacterizationRecord<T>>> = frequencies
        .par_iter()
        .map(|f| measure_at_frequency(device, cell, &Polarization::ALL, *f, protocol))
        .collect::<Result<_>>()?;

    let basis_mean = |recs: &[CharacterizationRecord<T>], diag: bool, pick: Pick<T>| {
        let sel: Vec<T> = recs
            .iter()
            .filter(|r| r.polarization.is_diagonal_basis() == diag)
            .map(pick)
            .collect();
        sel.iter().fold(T::zero(), |a, b| a + *b) / lit(sel.len() as f64)
    };
    let mut columns = Vec::new();
    for (suffix, diag) in [("hv", false), ("pm", true)] {
        let metrics: [(&str, Pick<T>); 3] =
            [("f_on", |r| r.f_on), ("t_on", |r| r.t_on), ("t_off", |r| r.t_off)];
        for (name, pick) in metrics {
            columns.push((
                format!("{name}_{suffix}"),
                points.iter().map(|p| basis_mean(p, diag, pick)).collect(),
            ));
        }
    }
    Ok(SweepResult {
        abscissa_name: "frequency_hz".into(),
        abscissa: frequencies.to_vec(),
        columns,
        seed: protocol.seed,
    })
}
