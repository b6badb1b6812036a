use teleop_core::dynamics::parse_model;
use teleop_core::identify::{
    least_squares_identify, resample, stack_regressor, synthesize, ExcitationConfig, Multisine, Recording,
};
use teleop_core::presets::{crane_x7, CRANE_X7_JOINT_RANGE};
use teleop_core::{dynamics::render_model, dynamics::write_params_fragment, ChainModel};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn excitation(cfg: &ExcitationConfig) -> (ChainModel, Vec<teleop_core::identify::IdentSample>) {
    let model = crane_x7();
    let ms = Multisine::within(&CRANE_X7_JOINT_RANGE, cfg).unwrap();
    let samples = synthesize(&model, &ms, cfg).unwrap();
    (model, samples)
}

#[test]
fn exact_crane_data_recovers_every_supported_parameter() {
    let (model, samples) = excitation(&ExcitationConfig::default());
    let (y, tau) = stack_regressor(&model, &samples).unwrap();
    let id = least_squares_identify(model.params(), &y, &tau).unwrap();
    let d = &id.diagnostics;
    assert_eq!(d.rank, model.n_params() - 1);
    let flagged: Vec<String> = model
        .params()
        .names()
        .iter()
        .zip(&d.identifiable)
        .filter(|(_, ok)| !**ok)
        .map(|(n, _)| n.to_string())
        .collect();
    assert_eq!(flagged, ["MYR6", "MZ7"]);
    for (i, ok) in d.identifiable.iter().enumerate() {
        if *ok {
            assert!(rel(id.params.values()[i], model.params().values()[i]) < 1e-6);
        }
    }
    // The unresolved pair still reproduces the torque.
    assert!(d.residual_rms < 1e-10);
    assert!(rel(id.params.get("FV1").unwrap(), 0.0510939) < 1e-9);
}

#[test]
fn filtered_pipeline_identifies_a_usable_model() {
    let cfg = ExcitationConfig::default();
    let (model, samples) = excitation(&cfg);
    let rec = Recording::from_samples(&samples, false).unwrap();
    let ds = resample(&rec, cfg.target_hz).unwrap();
    assert_eq!(ds.len(), (cfg.duration * cfg.target_hz) as usize - 1);
    let (y, tau) = stack_regressor(&model, &ds).unwrap();
    let id = least_squares_identify(model.params(), &y, &tau).unwrap();
    assert!(rel(id.params.get("FV1").unwrap(), 0.0510939) < 1e-3);

    let fitted = model.with_params(id.params.clone()).unwrap();
    let (y_all, tau_all) = stack_regressor(&fitted, &samples).unwrap();
    let err = &y_all * fitted.params().values() - &tau_all;
    let rms = (err.norm_squared() / err.len() as f64).sqrt();
    let scale = (tau_all.norm_squared() / tau_all.len() as f64).sqrt();
    assert!(rms < 1e-3 * scale, "{rms} vs {scale}");

    let doc = render_model(&model);
    let head = doc.split("[params]").next().unwrap();
    let reloaded = parse_model(&format!("{head}{}", write_params_fragment(&id.params)), "fragment").unwrap();
    assert_eq!(reloaded.params(), &id.params);
}
