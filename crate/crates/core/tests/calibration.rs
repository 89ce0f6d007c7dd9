use shutter_core::dynamics::{CellState, DriveWaveform, RecoveryModel, RingingModel};
use shutter_core::elements::ShutterParams;
use shutter_core::engine::MeasurementProtocol;
use shutter_core::metrics::{calibrate, mean_t_off, CalibrationTargets};

fn standard_cell() -> CellState<f64> {
    CellState::new(
        DriveWaveform::standard(),
        RingingModel::standard(),
        RecoveryModel::standard(),
        3200.0,
    )
    .unwrap()
}

#[test]
fn measured_table_is_reproduced() {
    let targets = CalibrationTargets::measured_table();
    let protocol = MeasurementProtocol::standard(250e3, 7);
    let cal = calibrate(
        &targets,
        &ShutterParams::ideal(),
        &standard_cell(),
        1e3,
        &protocol,
        0.002,
    )
    .unwrap();
    for r in &cal.records {
        println!("{r}");
    }
    for (name, r) in &cal.residuals {
        assert!(r.abs() <= 0.002, "{name}: {r}");
    }
    assert!((mean_t_off(&cal.records) - 0.003).abs() <= 0.001);
    let p = &cal.params;
    assert!(p.displacer_in.leakage_h > p.displacer_in.leakage_v);
    assert!((p.transmission_product() - 0.991).abs() < 0.01);
}

#[test]
fn unreachable_targets_fail() {
    let targets = CalibrationTargets {
        t_off_h: 0.2,
        ..CalibrationTargets::measured_table()
    };
    let protocol = MeasurementProtocol::standard(250e3, 7);
    let err = calibrate(&targets, &ShutterParams::ideal(), &standard_cell(), 1e3, &protocol, 0.002);
    assert!(matches!(err, Err(shutter_core::Error::CalibrationFailed { .. })));
}
