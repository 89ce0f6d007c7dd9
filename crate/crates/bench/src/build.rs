//! Turning a parsed document into simulator inputs, and writing fitted
//! shutter parameters back into one.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use shutter_core::dynamics::{CellState, DriveWaveform, RecoveryModel, RingingModel};
use shutter_core::elements::{
    Analyzer, BeamDisplacer, Device, Element, Pinhole, PockelsStatic, ShutterParams, Waveplate,
};
use shutter_core::engine::{MeasurementProtocol, SourceConfig};
use shutter_core::metrics::CalibrationTargets;
use shutter_core::scalar::{lit, Real};
use shutter_core::{Polarization, RailIndex};

use crate::document::{find, Assignment, BenchDocument, ElementDecl, ElementKind, Value};
use crate::units::{from_f64, Unit};

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Core(#[from] shutter_core::Error),
    #[error("{0}")]
    Layout(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Time,
    Frequency,
}

/// Sweep settings; times in seconds, frequencies in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<T> {
    pub mode: SweepMode,
    pub window: T,
    pub resolution: T,
    pub frequencies: Vec<T>,
    pub warmup: usize,
    pub averaged: usize,
}

impl<T: Real> Default for SweepSpec<T> {
    fn default() -> Self {
        Self {
            mode: SweepMode::Frequency,
            window: lit(6e-6),
            resolution: lit(10e-9),
            frequencies: [100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 1e4]
                .into_iter()
                .map(lit)
                .collect(),
            warmup: 10,
            averaged: 100,
        }
    }
}

/// Everything a simulation run needs, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct Bench<T> {
    pub device: Device<T>,
    pub source: SourceConfig<T>,
    /// Cell with no triggers yet.
    pub cell: CellState<T>,
    pub trigger_frequency: T,
    pub sweep: SweepSpec<T>,
    pub targets: Option<CalibrationTargets<T>>,
}

impl<T: Real> Bench<T> {
    pub fn protocol(&self, seed: u64) -> MeasurementProtocol<T> {
        MeasurementProtocol {
            rep_rate: self.source.rep_rate,
            warmup_triggers: self.sweep.warmup,
            averaged_triggers: self.sweep.averaged,
            seed,
        }
    }
}

struct Params<'a>(&'a [Assignment]);

impl Params<'_> {
    fn si<T: Real>(&self, key: &str, default: f64) -> T {
        match find(self.0, key) {
            Some(Value::Quantity(q)) => lit(q.si()),
            _ => lit(default),
        }
    }

    fn ident(&self, key: &str) -> Option<&str> {
        match find(self.0, key) {
            Some(Value::Ident(s)) => Some(s),
            _ => None,
        }
    }

    fn list(&self, key: &str) -> Option<&[BigRational]> {
        match find(self.0, key) {
            Some(Value::List(items)) => Some(items),
            _ => None,
        }
    }

    fn count(&self, key: &str, default: usize) -> usize {
        match find(self.0, key) {
            Some(Value::Quantity(q)) => q.value.to_integer().to_usize().unwrap_or(default),
            _ => default,
        }
    }
}

fn halfwave_voltage(device: &[ElementDecl]) -> f64 {
    device
        .iter()
        .find(|e| e.kind == ElementKind::Pockels)
        .and_then(|e| match find(&e.params, "vhalf") {
            Some(Value::Quantity(q)) => Some(q.si()),
            _ => None,
        })
        .unwrap_or(3200.0)
}

fn element<T: Real>(decl: &ElementDecl) -> Element<T> {
    let p = Params(&decl.params);
    let transmission = p.si("transmission", 1.0);
    match decl.kind {
        ElementKind::Displacer => Element::Displacer(BeamDisplacer {
            chi_o: p.si("chi", 0.0),
            chi_e: p.si("chi_e", 0.0),
            tilt_phase: p.si("tilt", 0.0),
            displacement_mm: p.si::<T>("d", 4e-3) * lit(1e3),
            transmission,
            leakage_h: p.si("leak_h", 0.0),
            leakage_v: p.si("leak_v", 0.0),
        }),
        ElementKind::Pockels => Element::Pockels(PockelsStatic {
            retardance: T::zero(),
            transmission,
        }),
        ElementKind::Hwp => Element::Waveplate(Waveplate {
            retardance: p.si("retardance", std::f64::consts::PI),
            angle: p.si("angle", std::f64::consts::FRAC_PI_4),
            transmission,
        }),
        ElementKind::Pinhole => Element::Pinhole(Pinhole::new(
            p.list("rails")
                .unwrap_or(&[])
                .iter()
                .filter_map(|r| r.to_integer().to_i32())
                .map(|r| r as RailIndex),
        )),
        ElementKind::Analyzer => Element::Analyzer(Analyzer {
            angle: p.si("angle", 0.0),
            transmission,
        }),
    }
}

impl BenchDocument {
    pub fn build<T: Real>(&self) -> Result<Bench<T>, BuildError> {
        let device = Device::new(self.device.iter().map(element).collect())?;

        let s = Params(&self.source);
        let polarization = match s.ident("polarization").unwrap_or("H") {
            "V" => Polarization::V,
            "plus" => Polarization::Plus,
            "minus" => Polarization::Minus,
            _ => Polarization::H,
        };
        let source = SourceConfig {
            rep_rate: s.si("rep_rate", 250e3),
            wavelength_nm: s.si::<T>("wavelength", 800e-9) * lit(1e9),
            bandwidth_nm: s.si::<T>("bandwidth", 1.5e-9) * lit(1e9),
            polarization: polarization.state(),
            intensity: s.si("intensity", 1.0),
        };
        source.validate()?;

        let t = Params(&self.trigger);
        let drive = DriveWaveform {
            v_peak: t.si("vpeak", 3200.0),
            t_flat: t.si("flat", 10e-9),
            tau_decay: t.si("tau", 500e-9),
            jitter_sigma: t.si("jitter", 1.5e-9),
        };
        let ringing = RingingModel {
            amplitude: t.si("ring_amp", 0.0),
            omega: t.si::<T>("ring_freq", 1.2e6) * T::TAU(),
            tau_damp: t.si("ring_tau", 0.6e-6),
            phase0: t.si("ring_phase", 0.0),
            onset_delay: t.si("ring_delay", 60e-9),
        };
        let recovery = RecoveryModel {
            tau_recovery: t.si("recovery_tau", 100e-6),
            residual: t.si("recovery_residual", 0.0),
        };
        let cell = CellState::new(drive, ringing, recovery, lit(halfwave_voltage(&self.device)))?;

        let mut sweep = SweepSpec::default();
        if let Some(params) = &self.sweep {
            let p = Params(params);
            if let Some(mode) = p.ident("mode") {
                sweep.mode = if mode == "time" { SweepMode::Time } else { SweepMode::Frequency };
            }
            sweep.window = p.si("window", 6e-6);
            sweep.resolution = p.si("resolution", 10e-9);
            if let Some(list) = p.list("frequencies") {
                sweep.frequencies = list.iter().map(|f| lit(crate::units::to_f64(f))).collect();
            }
            sweep.warmup = p.count("warmup", 10);
            sweep.averaged = p.count("averaged", 100);
        }

        let targets = match &self.targets {
            None => None,
            Some(params) => {
                let p = Params(params);
                let opt = |key: &str| find(params, key).map(|_| p.si::<T>(key, 0.0));
                let targets = CalibrationTargets {
                    t_on: p.si("t_on", 1.0),
                    f_on_hv: p.si("f_on_hv", 1.0),
                    f_on_diag: opt("f_on_diag"),
                    t_off_h: p.si("t_off_h", 0.0),
                    t_off_v: p.si("t_off_v", 0.0),
                    t_off_diag: opt("t_off_diag"),
                };
                targets.validate()?;
                Some(targets)
            }
        };

        Ok(Bench {
            device,
            trigger_frequency: t.si("freq", 1e3),
            source,
            cell,
            sweep,
            targets,
        })
    }

    /// Replaces the element parameters of a displacer / pockels / displacer
    /// / pinhole / hwp device with `params`. Displacements, the half-wave
    /// voltage, the pinhole and the wave-plate angle are kept.
    pub fn with_shutter_params(&self, params: &ShutterParams<f64>) -> Result<BenchDocument, BuildError> {
        let kinds: Vec<_> = self.device.iter().map(|e| e.kind).collect();
        if kinds
            != [
                ElementKind::Displacer,
                ElementKind::Pockels,
                ElementKind::Displacer,
                ElementKind::Pinhole,
                ElementKind::Hwp,
            ]
        {
            return Err(BuildError::Layout(
                "fitted parameters need a displacer, pockels, displacer, pinhole, hwp device".into(),
            ));
        }
        let number = |v: f64| from_f64(v, 12).unwrap_or_default();
        let rad = |key: &str, v: f64| Assignment::quantity(key, number(v), Unit::Rad);
        let plain = |key: &str, v: f64| Assignment::quantity(key, number(v), Unit::None);
        let keep = |decl: &ElementDecl, key: &str| {
            decl.params.iter().find(|a| a.key == key).cloned()
        };
        let displacer = |decl: &ElementDecl, d: &BeamDisplacer<f64>| {
            let mut out: Vec<Assignment> = Vec::new();
            out.push(keep(decl, "d").unwrap_or_else(|| {
                Assignment::quantity("d", BigRational::from_integer(4.into()), Unit::Mm)
            }));
            out.push(rad("chi", d.chi_o));
            out.push(rad("chi_e", d.chi_e));
            out.push(rad("tilt", d.tilt_phase));
            out.push(plain("transmission", d.transmission));
            out.push(plain("leak_h", d.leakage_h));
            out.push(plain("leak_v", d.leakage_v));
            ElementDecl {
                kind: ElementKind::Displacer,
                params: out,
            }
        };
        let mut pockels: Vec<Assignment> = keep(&self.device[1], "vhalf").into_iter().collect();
        pockels.push(plain("transmission", params.pockels.transmission));
        let device = vec![
            displacer(&self.device[0], &params.displacer_in),
            ElementDecl {
                kind: ElementKind::Pockels,
                params: pockels,
            },
            displacer(&self.device[2], &params.displacer_out),
            self.device[3].clone(),
            ElementDecl {
                kind: ElementKind::Hwp,
                params: vec![
                    keep(&self.device[4], "angle")
                        .filter(|a| match &a.value {
                            Value::Quantity(q) => q.si() == params.hwp.angle,
                            _ => false,
                        })
                        .unwrap_or_else(|| rad("angle", params.hwp.angle)),
                    rad("retardance", params.hwp.retardance),
                    plain("transmission", params.hwp.transmission),
                ],
            },
        ];
        Ok(BenchDocument {
            device,
            ..self.clone()
        })
    }
}
