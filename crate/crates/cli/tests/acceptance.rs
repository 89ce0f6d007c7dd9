//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Run with `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_complex::Complex;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shutter_bench::arbitrary::document;
use shutter_bench::{parse, BenchF64};
use shutter_core::dynamics::{sample_trigger_times, CellState};
use shutter_core::elements::{
    build_shutter, Analyzer, BeamDisplacer, Device, Element, Pinhole, PockelsStatic, ShutterParams, Waveplate,
};
use shutter_core::engine::{
    simulate_static, simulate_train, sweep_time_points, sweep_trigger_frequency, MeasurementProtocol,
};
use shutter_core::metrics::characterize;
use shutter_core::polarization::{global_phase_normalize, JonesVector, RailState};
use shutter_core::Polarization;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(name: &str) -> BenchF64 {
    let text = std::fs::read_to_string(data(name)).unwrap();
    parse(&text).unwrap().build().unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> JonesVector<f64> {
    let mut c = || Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    loop {
        let (h, v) = (c(), c());
        if let Ok(s) = JonesVector::normalized(h, v) {
            return s;
        }
    }
}

fn sim() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shutter-sim"));
    c.env_remove("SHUTTER_SIM_THREADS");
    c
}

fn run_ok(cmd: &mut Command) -> Result<Vec<u8>, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

/// 1: the ideal device is the identity when ON and dark when OFF.
fn ideal_identity() -> Outcome {
    let start = Instant::now();
    let device = build_shutter(&ShutterParams::<f64>::ideal()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut worst_t_on = 0.0f64;
    for _ in 0..1000 {
        let input = random_state(&mut rng);
        let on = simulate_static(&device, PI, &input);
        let d = global_phase_normalize(on.output()).max_component_diff(&global_phase_normalize(&input));
        worst = worst.max(d);
        worst_t_on = worst_t_on.max((on.transmitted / input.intensity() - 1.0).abs());
        let off = simulate_static(&device, 0.0, &input);
        if off.transmitted != 0.0 {
            return Err(format!("OFF transmits {:e}", off.transmitted));
        }
    }
    let records = characterize(
        &device,
        &CellState::ideal(),
        &Polarization::ALL,
        1e3,
        &MeasurementProtocol::standard(250e3, 0),
    )
    .map_err(|e| e.to_string())?;
    let exact = records.iter().all(|r| r.t_on == 1.0 && r.t_off == 0.0 && r.f_on == 1.0);
    let elapsed = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-10 && worst_t_on <= 1e-12 && exact && elapsed < 1.0,
        format!("max state error {worst:.1e}, basis T_ON=1 T_OFF=0 exact: {exact}, {elapsed:.2}s"),
    )
}

const TABLE: [(&str, f64, f64, f64); 4] = [
    ("+", 0.956, 0.991, 0.0025),
    ("-", 0.956, 0.991, 0.0025),
    ("H", 0.998, 0.991, 0.0050),
    ("V", 0.998, 0.991, 0.0020),
];

/// 2: calibrate, then characterize the calibrated bench.
fn table_reproduction() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let calibrated = dir.path().join("calibrated.bench");
    let start = Instant::now();
    run_ok(sim().args(["calibrate", "--bench"]).arg(data("measured_targets.bench")).arg("--out").arg(&calibrated))?;
    let csv = run_ok(sim().args(["characterize", "--seed", "5", "--bench"]).arg(&calibrated))?;
    let elapsed = start.elapsed().as_secs_f64();

    let csv = String::from_utf8(csv).unwrap();
    let mut worst = 0.0f64;
    let mut t_off_sum = 0.0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (_, f_on, t_on, t_off) = TABLE.iter().find(|r| r.0 == f[0]).ok_or("unknown row")?;
        let got: Vec<f64> = f[1..].iter().map(|x| x.parse().unwrap()).collect();
        for (g, want) in got.iter().zip([f_on, t_on, t_off]) {
            worst = worst.max((g - want).abs());
        }
        t_off_sum += got[2];
    }
    let mean_off = t_off_sum / 4.0;
    check(
        worst <= 0.002 && (mean_off - 0.003).abs() <= 0.001 && elapsed < 10.0,
        format!("max cell error {worst:.5}, mean T_OFF {mean_off:.5}, {elapsed:.2}s"),
    )
}

/// 3: arm phase error sets the diagonal fidelity, not the H/V one.
fn phase_error() -> Outcome {
    let delta = 2.0 * 0.956f64.sqrt().acos();
    let device = build_shutter(&ShutterParams::ideal().with_phase_error(delta)).unwrap();
    let r = characterize(
        &device,
        &CellState::ideal(),
        &Polarization::ALL,
        1e3,
        &MeasurementProtocol::standard(250e3, 0),
    )
    .map_err(|e| e.to_string())?;
    let f = |p: Polarization| r.iter().find(|x| x.polarization == p).unwrap().f_on;
    let (fp, fm, fh, fv) = (f(Polarization::Plus), f(Polarization::Minus), f(Polarization::H), f(Polarization::V));
    check(
        (fp - 0.956).abs() <= 1e-3 && (fm - 0.956).abs() <= 1e-3 && (fh - 1.0).abs() <= 1e-10 && (fv - 1.0).abs() <= 1e-10,
        format!("delta {delta:.4} rad: F(+)={fp:.6} F(-)={fm:.6} F(H)={fh} F(V)={fv}"),
    )
}

fn peak_and_late(cols: &[(String, Vec<f64>)], times: &[f64], late_after: f64) -> Vec<(String, f64, f64)> {
    cols.iter()
        .map(|(name, v)| {
            let peak = v.iter().copied().fold(0.0, f64::max);
            let late = v
                .iter()
                .zip(times)
                .filter(|(_, t)| **t >= late_after)
                .map(|(x, _)| *x)
                .fold(0.0, f64::max);
            (name.clone(), peak, late)
        })
        .collect()
}

/// 4: ringing decays two orders below the peak by 4 us; without ringing
/// the tail is a pure exponential.
fn ringing_decay() -> Outcome {
    let times: Vec<f64> = (0..=600).map(|k| k as f64 * 10e-9).collect();
    let bench = load("measured_calibrated.bench");
    let ringing = sweep_time_points(&bench.device, &bench.cell, &times).map_err(|e| e.to_string())?;
    let with = peak_and_late(&ringing.columns, &times, 4e-6);
    let min_ratio = with.iter().map(|(_, p, l)| p / l).fold(f64::INFINITY, f64::min);

    let ideal = build_shutter(&ShutterParams::<f64>::ideal()).unwrap();
    let quiet = sweep_time_points(&ideal, &CellState::ideal(), &times).map_err(|e| e.to_string())?;
    let without = peak_and_late(&quiet.columns, &times, 4e-6);
    let max_rel = without.iter().map(|(_, p, l)| l / p).fold(0.0, f64::max);
    check(
        min_ratio >= 100.0 && max_rel <= 1e-6,
        format!("calibrated ringing peak/late >= {min_ratio:.0}, zero ringing late/peak <= {max_rel:.1e}"),
    )
}

/// 5: performance degrades monotonically with trigger frequency.
fn frequency_monotonicity() -> Outcome {
    let bench = load("measured_calibrated.bench");
    if !(bench.cell.recovery.tau_recovery.is_finite() && bench.cell.recovery.residual > 0.0) {
        return Err("calibrated bench has no recovery".into());
    }
    let freqs = [100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10000.0];
    let r = sweep_trigger_frequency(&bench.device, &bench.cell, &freqs, &bench.protocol(0)).map_err(|e| e.to_string())?;
    let col = |n: &str| r.column(n).unwrap().to_vec();
    const SLACK: f64 = 1e-12;
    let non_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + SLACK);
    let non_decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - SLACK);
    let mono = non_increasing(&col("f_on_hv"))
        && non_increasing(&col("f_on_pm"))
        && non_decreasing(&col("t_off_hv"))
        && non_decreasing(&col("t_off_pm"));
    let mean_1k = (col("f_on_hv")[3] + col("f_on_pm")[3]) / 2.0;
    let drop = col("f_on_pm")[0] - col("f_on_pm")[6];
    check(
        mono && mean_1k >= 0.97,
        format!("monotone over 100 Hz..10 kHz: {mono}, mean F_ON at 1 kHz {mean_1k:.4}, F(+-) drop {drop:.4}"),
    )
}

/// 6: every pulse of a long train conserves energy.
fn conservation() -> Outcome {
    let bench = load("measured_calibrated.bench");
    let rep = bench.source.rep_rate;
    let duration = 9999.0 / rep;
    let requested: Vec<f64> = (0..(duration * bench.trigger_frequency) as usize + 1)
        .map(|k| k as f64 / bench.trigger_frequency + 1e-6)
        .collect();
    let triggers = sample_trigger_times(&requested, bench.cell.drive.jitter_sigma, 11).map_err(|e| e.to_string())?;
    let cell = bench.cell.clone().with_triggers(triggers).map_err(|e| e.to_string())?;
    let product = bench.device.transmission_product();
    let mut worst = 0.0f64;
    let mut pulses = 0;
    for pol in Polarization::ALL {
        let mut source = bench.source.clone();
        source.polarization = pol.state();
        let train = simulate_train(&source, &bench.device, &cell, duration).map_err(|e| e.to_string())?;
        pulses = train.len();
        for s in &train {
            worst = worst.max((s.transmitted + s.blocked - source.intensity * product).abs());
        }
    }
    check(
        pulses == 10_000 && worst <= 1e-12,
        format!("{pulses} pulses x 4 inputs, max imbalance {worst:.1e}"),
    )
}

fn random_device(rng: &mut ChaCha8Rng) -> Device<f64> {
    let n = rng.random_range(1..=8);
    let elements = (0..n)
        .map(|_| match rng.random_range(0..5) {
            0 => Element::Displacer(BeamDisplacer {
                chi_o: rng.random_range(-PI..PI),
                chi_e: rng.random_range(-PI..PI),
                tilt_phase: rng.random_range(-1.0..1.0),
                displacement_mm: 4.0,
                transmission: rng.random_range(0.9..=1.0),
                leakage_h: rng.random_range(0.0..0.05),
                leakage_v: rng.random_range(0.0..0.05),
            }),
            1 => Element::Pockels(PockelsStatic {
                retardance: 0.0,
                transmission: rng.random_range(0.9..=1.0),
            }),
            2 => Element::Waveplate(Waveplate {
                retardance: rng.random_range(0.0..2.0 * PI),
                angle: rng.random_range(0.0..PI),
                transmission: rng.random_range(0.9..=1.0),
            }),
            3 => Element::Pinhole(Pinhole::new((0..4).filter(|_| rng.random_bool(0.5)))),
            _ => Element::Analyzer(Analyzer {
                angle: rng.random_range(0.0..PI),
                transmission: rng.random_range(0.9..=1.0),
            }),
        })
        .collect();
    Device::new(elements).unwrap()
}

/// 7: one composed operator per leakage branch equals sequential
/// propagation.
fn composition_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let device = random_device(&mut rng);
        let retardance = rng.random_range(0.0..2.0 * PI);
        let n_rails = 3 + device.displacer_count();
        let ops = device.composed_operators(n_rails, Some(retardance));
        for _ in 0..100 {
            let mut input = RailState::empty(4.0);
            for r in 0..3 {
                if r == 0 || rng.random_bool(0.5) {
                    input.accumulate(r, &random_state(&mut rng), 0);
                }
            }
            let prop = device.propagate(&input, Some(retardance));
            if prop.branches.len() != ops.len() {
                return Err(format!("{} branches vs {} operators", prop.branches.len(), ops.len()));
            }
            for (op, branch) in ops.iter().zip(&prop.branches) {
                worst = worst.max(op.apply(&input).max_rail_diff(branch));
            }
        }
    }
    check(worst <= 1e-12, format!("20 devices x 100 states, max difference {worst:.1e}"))
}

/// 8: canonical round trips and line-accurate diagnostics.
fn parser() -> Outcome {
    let text = std::fs::read_to_string(data("paper_default.bench")).unwrap();
    let doc = parse(&text).map_err(|e| e.to_string())?;
    let canonical = doc.serialize();
    let fixed = parse(&canonical).map(|d| d == doc && d.serialize() == canonical).unwrap_or(false);

    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 500,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let generated = runner
        .run(&document(), |doc| {
            let back = parse(&doc.serialize()).map_err(|e| proptest::test_runner::TestCaseError::fail(e.to_string()))?;
            proptest::prop_assert_eq!(back, doc);
            Ok(())
        })
        .map_err(|e| e.to_string());

    let reference = parse(&std::fs::read_to_string(data("measured_targets.bench")).unwrap())
        .unwrap()
        .serialize();
    let lines: Vec<&str> = reference.lines().collect();
    let entries: Vec<usize> = (0..lines.len()).filter(|i| lines[*i].contains('=')).collect();
    let mut located = 0;
    let mut misplaced = Vec::new();
    for k in 0..20 {
        let i = entries[k * entries.len() / 20];
        let indent = &lines[i][..lines[i].len() - lines[i].trim_start().len()];
        let body = lines[i].trim_start();
        let broken = match k % 4 {
            0 => format!("{indent}bogus_key=1 {body}"),
            1 => format!("{indent}{body} @"),
            2 => format!("{indent}{body}furlong"),
            _ => format!("{indent}{}", body.replacen('=', " ", 1)),
        };
        let mut copy = lines.clone();
        copy[i] = &broken;
        match parse(&copy.join("\n")) {
            Err(e) if e.line() == i + 1 => located += 1,
            Err(e) => misplaced.push(format!("line {} reported as {}", i + 1, e.line())),
            Ok(_) => misplaced.push(format!("line {} accepted: {broken}", i + 1)),
        }
    }
    check(
        fixed && generated.is_ok() && located == 20,
        format!(
            "default fixed point: {fixed}, 500 generated: {}, corrupted located {located}/20{}",
            generated.as_ref().map(|_| "ok".to_string()).unwrap_or_else(|e| e.clone()),
            misplaced.iter().map(|m| format!("; {m}")).collect::<String>()
        ),
    )
}

/// 9: identical bench and seed give byte-identical CSV.
fn determinism() -> Outcome {
    let bench = data("measured_calibrated.bench");
    let runs: [&[&str]; 3] = [
        &["characterize", "--seed", "42"],
        &["sweep", "--seed", "42", "--mode", "frequency", "--range", "100Hz:10kHz:9"],
        &["sweep", "--seed", "42", "--mode", "time", "--range", "0:6us:601"],
    ];
    let dir = tempfile::TempDir::new().unwrap();
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (rep, threads) in ["1", "3"].iter().enumerate() {
            let out = dir.path().join(format!("run{i}_{rep}.csv"));
            run_ok(sim().args(*args).arg("--bench").arg(&bench).arg("--out").arg(&out).env("SHUTTER_SIM_THREADS", threads))?;
            outputs.push(std::fs::read(&out).unwrap());
        }
        if outputs[0] != outputs[1] {
            return Err(format!("`{}` differs between runs", args.join(" ")));
        }
    }
    Ok("characterize and both sweeps byte-identical across runs and thread counts".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("ideal identity", ideal_identity),
        ("table reproduction", table_reproduction),
        ("phase error", phase_error),
        ("ringing decay", ringing_decay),
        ("frequency monotonicity", frequency_monotonicity),
        ("energy conservation", conservation),
        ("composition oracle", composition_oracle),
        ("bench parser", parser),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
