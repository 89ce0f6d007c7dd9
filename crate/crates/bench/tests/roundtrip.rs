use proptest::prelude::*;
use shutter_bench::arbitrary::document;
use shutter_bench::{parse, DiagnosticKind};

const DEFAULT_BENCH: &str = include_str!("../../../data/paper_default.bench");

#[test]
fn default_bench_round_trips() {
    let doc = parse(DEFAULT_BENCH).unwrap();
    let canonical = doc.serialize();
    assert_eq!(parse(&canonical).unwrap(), doc);
    assert_eq!(parse(&canonical).unwrap().serialize(), canonical);
    assert!(canonical.contains("displacer d=4mm chi=0rad\n"));
    assert!(canonical.contains("hwp angle=45deg\n"));
    assert!(canonical.contains("rep_rate=250000Hz\n"));
}

#[test]
fn default_bench_builds_the_shutter() {
    let bench = parse(DEFAULT_BENCH).unwrap().build::<f64>().unwrap();
    let p = bench.device.shutter_params().expect("five-element layout");
    assert_eq!(p.displacer_in.displacement_mm, 4.0);
    assert_eq!(p.pinhole.allowed_rails.iter().copied().collect::<Vec<_>>(), vec![1]);
    assert!((p.hwp.angle - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    assert_eq!(bench.cell.halfwave_voltage, 3200.0);
    assert_eq!(bench.cell.drive.v_peak, 3200.0);
    assert!((bench.cell.drive.t_flat / 10e-9 - 1.0).abs() < 1e-14);
    assert!((bench.cell.drive.tau_decay / 500e-9 - 1.0).abs() < 1e-14);
    assert_eq!(bench.source.rep_rate, 250e3);
    assert!((bench.source.wavelength_nm - 800.0).abs() < 1e-9);
    assert_eq!(bench.trigger_frequency, 1e3);
    assert!(bench.targets.is_none());
}

#[test]
fn metre_input_serializes_in_millimetres() {
    let doc = parse("device { displacer d=0.004m }\nsource { }\ntrigger { }\n").unwrap();
    assert!(doc.serialize().contains("displacer d=4mm\n"));
}

#[test]
fn infeasible_target_is_a_range_error() {
    let text = "device { pinhole rails=[1] }\nsource { }\ntrigger { }\ntargets {\n t_on=1.2 ; f_on_hv=1 ; t_off_h=0 ; t_off_v=0\n}\n";
    let e = parse(text).unwrap_err();
    assert_eq!((e.line(), e.kind), (5, DiagnosticKind::Range));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn parse_inverts_serialize(doc in document()) {
        let text = doc.serialize();
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, doc);
    }
}
