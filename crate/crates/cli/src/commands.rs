use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use shutter_bench::lexer::{tokenize, Tok};
use shutter_bench::units::{lookup_unit, parse_decimal, to_f64, Dimension};
use shutter_bench::{parse, Bench, BenchDocument, SweepMode};
use shutter_core::engine::{sweep_time_points, sweep_trigger_frequency, SweepResult};
use shutter_core::metrics::{
    calibrate, characterize, mean_fidelity, mean_t_off, residuals, CharacterizationRecord,
};
use shutter_core::{Error as CoreError, Polarization};

use crate::args::{Command, Mode, RunArgs, SweepArgs};
use crate::format::{csv, sig6};
use crate::output::{sidecar, write_atomic, RunManifest};
use crate::Failure;

/// Largest allowed deviation of a calibrated cell from its target.
pub const CALIBRATION_TOLERANCE: f64 = 0.002;

/// Delay after the trigger from which transmission counts as "late".
pub const LATE_AFTER_S: f64 = 4e-6;

pub struct Loaded {
    pub path: PathBuf,
    pub doc: BenchDocument,
    pub bench: Bench<f64>,
}

pub fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read `{}`: {e}", path.display())))?;
    let doc = parse(&text).map_err(|d| Failure::Input(format!("{}:{d}", path.display())))?;
    let bench = doc
        .build()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(Loaded {
        path: path.to_path_buf(),
        doc,
        bench,
    })
}

fn simulation(e: CoreError) -> Failure {
    Failure::Simulation(e.to_string())
}

fn range_bound(text: &str, dim: Dimension) -> Result<f64, Failure> {
    let bad = || Failure::Input(format!("bad range bound `{text}`"));
    let tokens = tokenize(text).map_err(|_| bad())?;
    let [first, last] = tokens.as_slice() else {
        return Err(bad());
    };
    let (Tok::Number { text: number, unit }, Tok::Eof) = (&first.tok, &last.tok) else {
        return Err(bad());
    };
    let x = parse_decimal(number).ok_or_else(bad)?;
    match unit {
        None => Ok(to_f64(&x)),
        Some(symbol) => {
            let (unit, scale) = lookup_unit(symbol)
                .ok_or_else(|| Failure::Input(format!("unknown unit `{symbol}` in range")))?;
            if unit.dimension() != dim {
                return Err(Failure::Input(format!(
                    "range unit `{symbol}` is not {dim}"
                )));
            }
            Ok(to_f64(&(x * scale)) * unit.si_factor())
        }
    }
}

/// `start:stop:steps`; times linear from `start >= 0`, frequencies
/// logarithmic from `start > 0`. SI units when no unit is written.
pub fn parse_range(text: &str, mode: Mode) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(Failure::Input(format!("range `{text}` is not start:stop:steps")));
    };
    let dim = match mode {
        Mode::Time => Dimension::Time,
        Mode::Frequency => Dimension::Frequency,
    };
    let (a, b) = (range_bound(a, dim)?, range_bound(b, dim)?);
    let steps: usize = n
        .trim()
        .parse()
        .map_err(|_| Failure::Input(format!("range step count `{n}` is not an integer")))?;
    let lower_ok = match mode {
        Mode::Time => a >= 0.0,
        Mode::Frequency => a > 0.0,
    };
    if !(lower_ok && b > a && steps >= 2) {
        return Err(Failure::Input(format!(
            "range `{text}` needs 0 {} start < stop and at least 2 steps",
            if mode == Mode::Time { "<=" } else { "<" }
        )));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| {
            let s = k as f64 / last;
            match mode {
                Mode::Time => a + (b - a) * s,
                Mode::Frequency => a * (b / a).powf(s),
            }
        })
        .collect())
}

fn record_json(r: &CharacterizationRecord<f64>) -> Value {
    json!({
        "polarization": r.polarization.label(),
        "f_on": r.f_on,
        "t_on": r.t_on,
        "t_off": r.t_off,
    })
}

pub fn characterization_csv(records: &[CharacterizationRecord<f64>]) -> String {
    csv(
        &["polarization", "f_on", "t_on", "t_off"],
        records.iter().map(|r| {
            vec![
                r.polarization.label().to_string(),
                sig6(r.f_on),
                sig6(r.t_on),
                sig6(r.t_off),
            ]
        }),
    )
}

pub fn sweep_csv(result: &SweepResult<f64>) -> String {
    let mut header = vec![result.abscissa_name.as_str()];
    header.extend(result.columns.iter().map(|(n, _)| n.as_str()));
    csv(
        &header,
        result.abscissa.iter().enumerate().map(|(i, x)| {
            let mut row = vec![sig6(*x)];
            row.extend(result.columns.iter().map(|(_, v)| sig6(v[i])));
            row
        }),
    )
}

/// Output of one command before it is written anywhere.
pub struct Report {
    pub body: String,
    pub summary: Value,
}

pub fn run_characterize(loaded: &Loaded, seed: u64) -> Result<Report, Failure> {
    let b = &loaded.bench;
    let records = characterize(
        &b.device,
        &b.cell,
        &Polarization::ALL,
        b.trigger_frequency,
        &b.protocol(seed),
    )
    .map_err(simulation)?;
    let mut summary = json!({
        "command": "characterize",
        "seed": seed,
        "trigger_frequency_hz": b.trigger_frequency,
        "mean_f_on": mean_fidelity(&records),
        "mean_t_off": mean_t_off(&records),
        "records": records.iter().map(record_json).collect::<Vec<_>>(),
    });
    if let Some(t) = &b.targets {
        let res = residuals(&records, t);
        let worst = res.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
        summary["max_abs_residual"] = json!(worst);
    }
    Ok(Report {
        body: characterization_csv(&records),
        summary,
    })
}

pub fn run_sweep(
    loaded: &Loaded,
    seed: u64,
    mode: Option<Mode>,
    range: Option<&str>,
) -> Result<Report, Failure> {
    let b = &loaded.bench;
    let mode = mode.unwrap_or(match b.sweep.mode {
        SweepMode::Time => Mode::Time,
        SweepMode::Frequency => Mode::Frequency,
    });
    let points = match range {
        Some(spec) => parse_range(spec, mode)?,
        None => match mode {
            Mode::Frequency => b.sweep.frequencies.clone(),
            Mode::Time => {
                let n = (b.sweep.window / b.sweep.resolution).floor() as usize;
                (0..=n).map(|k| k as f64 * b.sweep.resolution).collect()
            }
        },
    };
    match mode {
        Mode::Time => {
            let result = sweep_time_points(&b.device, &b.cell, &points).map_err(simulation)?;
            let contrast: serde_json::Map<String, Value> = result
                .columns
                .iter()
                .map(|(name, values)| {
                    let peak = values.iter().copied().fold(0.0, f64::max);
                    let late = result
                        .abscissa
                        .iter()
                        .zip(values)
                        .filter(|(t, _)| **t >= LATE_AFTER_S)
                        .map(|(_, v)| *v)
                        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
                    (
                        name.clone(),
                        json!({ "peak": peak, "late_max": late, "peak_to_late": late.map(|l| peak / l) }),
                    )
                })
                .collect();
            Ok(Report {
                body: sweep_csv(&result),
                summary: json!({
                    "command": "sweep",
                    "mode": "time",
                    "seed": seed,
                    "points": points.len(),
                    "late_after_s": LATE_AFTER_S,
                    "contrast": contrast,
                }),
            })
        }
        Mode::Frequency => {
            let limit = b.source.rep_rate / 2.0;
            if let Some(f) = points.iter().find(|f| **f > limit) {
                return Err(Failure::Input(format!(
                    "trigger frequency {f} Hz exceeds half the laser repetition rate ({limit} Hz)"
                )));
            }
            let result = sweep_trigger_frequency(&b.device, &b.cell, &points, &b.protocol(seed))
                .map_err(simulation)?;
            Ok(Report {
                body: sweep_csv(&result),
                summary: json!({
                    "command": "sweep",
                    "mode": "frequency",
                    "seed": seed,
                    "points": points.len(),
                    "columns": result.columns.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
                }),
            })
        }
    }
}

pub fn run_calibrate(loaded: &Loaded, seed: u64) -> Result<Report, Failure> {
    let b = &loaded.bench;
    let path = loaded.path.display();
    let targets = b
        .targets
        .ok_or_else(|| Failure::Input(format!("`{path}` has no targets section")))?;
    let base = b.device.shutter_params().ok_or_else(|| {
        Failure::Input(format!(
            "`{path}`: calibration needs a displacer, pockels, displacer, pinhole, hwp device"
        ))
    })?;
    let cal = calibrate(
        &targets,
        &base,
        &b.cell,
        b.trigger_frequency,
        &b.protocol(seed),
        CALIBRATION_TOLERANCE,
    );
    let cal = match cal {
        Ok(c) => c,
        Err(CoreError::CalibrationFailed { reason, residuals }) => {
            let mut msg = format!("calibration failed: {reason}");
            for (name, r) in residuals {
                msg.push_str(&format!("\n  {name:<10} {}", sig6(r)));
            }
            return Err(Failure::Calibration(msg));
        }
        Err(e @ CoreError::InvalidParameter { .. }) => return Err(Failure::Input(e.to_string())),
        Err(e) => return Err(simulation(e)),
    };
    for (name, r) in &cal.residuals {
        eprintln!("residual {name:<10} {}", sig6(*r));
    }
    let doc = loaded
        .doc
        .with_shutter_params(&cal.params)
        .map_err(|e| Failure::Input(e.to_string()))?;
    let p = &cal.params;
    Ok(Report {
        body: doc.serialize(),
        summary: json!({
            "command": "calibrate",
            "seed": seed,
            "tolerance": CALIBRATION_TOLERANCE,
            "max_abs_residual": cal.max_abs_residual(),
            "residuals": cal.residuals.iter().map(|(n, r)| json!({ "cell": n, "residual": r })).collect::<Vec<_>>(),
            "arm_phase_rad": p.arm_phase_difference(),
            "leak_h": p.displacer_in.leakage_h,
            "leak_v": p.displacer_in.leakage_v,
            "hwp_retardance_rad": p.hwp.retardance,
            "transmission_product": p.transmission_product(),
            "records": cal.records.iter().map(record_json).collect::<Vec<_>>(),
        }),
    })
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn write(path: &Path, body: &str) -> Result<(), Failure> {
    write_atomic(path, body.as_bytes())
        .map_err(|e| Failure::Input(format!("cannot write `{}`: {e}", path.display())))
}

fn emit(
    name: &str,
    args: &RunArgs,
    extra: (Option<Mode>, Option<&str>),
    threads: Option<usize>,
    report: Report,
    started: Instant,
) -> Result<(), Failure> {
    let Some(out) = &args.out else {
        print!("{}", report.body);
        eprint!("{}", pretty(&report.summary));
        return Ok(());
    };
    let summary_path = sidecar(out, "summary");
    let manifest_path = sidecar(out, "manifest");
    write(out, &report.body)?;
    write(&summary_path, &pretty(&report.summary))?;
    let manifest = RunManifest {
        command: name.into(),
        bench: args.bench.display().to_string(),
        seed: args.seed,
        mode: extra.0.map(|m| format!("{m:?}").to_lowercase()),
        range: extra.1.map(str::to_string),
        threads,
        outputs: [out, &summary_path]
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write(&manifest_path, &pretty(&manifest))
}

pub fn dispatch(command: &Command, threads: Option<usize>) -> Result<(), Failure> {
    let started = Instant::now();
    match command {
        Command::Validate(a) => {
            load(&a.bench)?;
            println!("{}: ok", a.bench.display());
            Ok(())
        }
        Command::Characterize(a) => {
            let report = run_characterize(&load(&a.bench)?, a.seed)?;
            emit("characterize", a, (None, None), threads, report, started)
        }
        Command::Calibrate(a) => {
            let report = run_calibrate(&load(&a.bench)?, a.seed)?;
            emit("calibrate", a, (None, None), threads, report, started)
        }
        Command::Sweep(SweepArgs { run, mode, range }) => {
            let report = run_sweep(&load(&run.bench)?, run.seed, *mode, range.as_deref())?;
            emit("sweep", run, (*mode, range.as_deref()), threads, report, started)
        }
    }
}
