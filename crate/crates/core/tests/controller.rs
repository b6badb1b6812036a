mod common;

use std::sync::Arc;

use common::CascadeOracle;
use teleop_core::controller::{ArmController, ControllerConfig, PeerSnapshot};
use teleop_core::presets::rotor;
use teleop_core::JointVec;

fn scalar(x: f64) -> JointVec {
    JointVec::from_element(1, x)
}

#[test]
fn control_torque_equals_cascade_form() {
    let j = 0.05;
    let model = Arc::new(rotor(j, 0.0));
    let cfg = ControllerConfig { fixed_inertia_diag: vec![j], ..ControllerConfig::default() };
    let dt = cfg.observer.dt;
    let theta0 = 0.2;
    let mut ctl = ArmController::new(model.clone(), cfg.clone(), &scalar(theta0)).unwrap();
    let mut oracle = CascadeOracle::new(cfg.observer.omega_c, dt, theta0);
    let (mut q, mut v) = (scalar(theta0), scalar(0.0));
    let mut tau = scalar(0.0);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut travel: f64 = 0.0;
    for k in 0..5000 {
        let t = k as f64 * dt;
        let ext = 0.2 * (2.3 * t).sin() + if t > 1.0 { 0.1 } else { 0.0 };
        for _ in 0..10 {
            (q, v) = model.integrate_step(&q, &v, &(&tau + scalar(ext)), dt / 10.0).unwrap();
        }
        let state = ctl.observe(&q).unwrap();
        let peer = PeerSnapshot {
            theta: scalar(theta0 + 0.5 * (1.7 * t).sin()),
            velocity: scalar(0.85 * (1.7 * t).cos()),
            tau_ext: scalar(-0.05 * (0.9 * t).cos()),
            time: t,
        };
        let out = ctl.command(&state, &peer).unwrap();
        assert!(!out.saturated[0]);
        let expected = j * oracle.step(out.accel_cmd[0], q[0]);
        worst = worst.max((out.tau_u[0] - expected).abs());
        scale = scale.max(out.tau_u[0].abs());
        tau.copy_from(&out.tau_ref);
        travel = travel.max((q[0] - theta0).abs());
    }
    assert!(scale > 0.1, "{scale}");
    assert!(travel > 0.3, "{travel}");
    assert!(worst < 1e-9, "{worst} (scale {scale})");
}
