use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use approx::assert_relative_eq;

use super::*;
use crate::dynamics::JointMat;

fn scalar(x: f64) -> JointVec {
    JointVec::from_element(1, x)
}

fn inertia(j: f64) -> FrozenInertia {
    FrozenInertia::new(JointMat::from_element(1, 1, j), f64::INFINITY).unwrap()
}

/// Rigid rotor integrated exactly over piecewise-constant torque.
struct Rotor {
    j: f64,
    q: f64,
    v: f64,
}

impl Rotor {
    fn advance(&mut self, torque: f64, dt: f64) {
        let a = torque / self.j;
        self.q += self.v * dt + 0.5 * a * dt * dt;
        self.v += a * dt;
    }
}

/// Scalar observer recurrences written out line by line for one joint.
struct Literal {
    w: f64,
    t: f64,
    theta_prev: f64,
    int_hpf: f64,
    lpf_vob: f64,
    lpf_fob: f64,
    tau_u_lpf: f64,
    temp: f64,
    temp_lpf: f64,
    acc_prev: f64,
    tau_u_prev: f64,
}

impl Literal {
    fn new(w: f64, t: f64, theta0: f64) -> Self {
        Self {
            w,
            t,
            theta_prev: theta0,
            int_hpf: 0.0,
            lpf_vob: 0.0,
            lpf_fob: 0.0,
            tau_u_lpf: 0.0,
            temp: 0.0,
            temp_lpf: 0.0,
            acc_prev: 0.0,
            tau_u_prev: 0.0,
        }
    }

    fn step(&mut self, theta: f64, acc: f64, tau_u: f64, m: f64) -> (f64, f64) {
        let (w, t) = (self.w, self.t);
        self.int_hpf = (2.0 - 2.0 * w * t) / (2.0 + 2.0 * w * t) * self.int_hpf
            + t / (2.0 + 2.0 * w * t) * (acc + self.acc_prev);
        self.lpf_vob = (2.0 - 2.0 * w * t) / (2.0 + 2.0 * w * t) * self.lpf_vob
            + 2.0 * w * t / (2.0 + 2.0 * w * t) * (theta + self.theta_prev);
        let pdiff_vob = 2.0 * w * (theta - self.lpf_vob);
        let vel = self.int_hpf + pdiff_vob;

        let a = (2.0 - w * t) / (2.0 + w * t);
        let b = w * t / (2.0 + w * t);
        self.tau_u_lpf = a * self.tau_u_lpf + b * (tau_u / m + self.tau_u_prev / m);
        self.lpf_fob = a * self.lpf_fob + b * (theta + self.theta_prev);
        let pdiff_fob = w * (theta - self.lpf_fob);
        let temp = self.tau_u_lpf + w * pdiff_fob;
        self.temp_lpf = a * self.temp_lpf + b * (temp + self.temp);
        self.temp = temp;
        let tau_hat = m * (-self.temp_lpf + w * pdiff_fob);

        self.theta_prev = theta;
        self.acc_prev = acc;
        self.tau_u_prev = tau_u;
        (vel, tau_hat)
    }
}

#[test]
fn unit_damping_matches_scalar_recurrences() {
    let cfg = ObserverConfig::default();
    let theta0 = 0.4;
    let mut obs = Observer::zeroed(cfg, &scalar(theta0)).unwrap();
    let mut lit = Literal::new(cfg.omega_c, cfg.dt, theta0);
    for k in 0..3000 {
        let t = k as f64 * cfg.dt;
        let theta = theta0 + 0.3 * (3.0 * t).sin() + 0.01 * (40.0 * t).cos();
        let acc = 2.0 * (7.0 * t).cos();
        let tau_u = 0.5 * (5.0 * t).sin() - 0.2;
        let m = 0.05 + 0.01 * (2.0 * t).sin();
        let out = obs.update(&scalar(theta), &scalar(acc), &scalar(tau_u), &inertia(m)).unwrap();
        let (vel, tau_hat) = lit.step(theta, acc, tau_u, m);
        assert_relative_eq!(out.velocity[0], vel, max_relative = 1e-12, epsilon = 1e-12);
        assert_relative_eq!(out.external_torque[0], tau_hat, max_relative = 1e-12, epsilon = 1e-12);
    }
}

#[test]
fn resting_arm_reads_zero() {
    let cfg = ObserverConfig::default();
    let m = inertia(0.05);
    for (theta0, at_rest) in [(0.0, false), (0.7, true), (0.7, false)] {
        let q = scalar(theta0);
        let mut obs = if at_rest {
            Observer::at_rest(cfg, &q).unwrap()
        } else {
            Observer::zeroed(cfg, &q).unwrap()
        };
        let mut last = None;
        for k in 0..500 {
            let out = obs.update(&q, &scalar(0.0), &scalar(0.0), &m).unwrap();
            if at_rest {
                assert!(out.velocity[0].abs() < 1e-12 && out.external_torque[0].abs() < 1e-12, "tick {k}");
            }
            last = Some(out);
        }
        let last = last.unwrap();
        assert!(last.velocity[0].abs() < 1e-6, "{theta0} {at_rest}: {}", last.velocity[0]);
        assert!(last.external_torque[0].abs() < 1e-6, "{theta0} {at_rest}: {}", last.external_torque[0]);
    }
}

/// Free rotor hit by a torque step at `t_step`; returns `(t, tau_hat)` per tick.
fn step_response(cfg: ObserverConfig, j: f64, t_step: f64, t_end: f64) -> Vec<(f64, f64)> {
    let mut plant = Rotor { j, q: 0.2, v: 0.0 };
    let mut obs = Observer::at_rest(cfg, &scalar(plant.q)).unwrap();
    let m = inertia(j);
    let substeps = 10;
    let h = cfg.dt / substeps as f64;
    let ticks = (t_end / cfg.dt).round() as usize;
    let mut out = Vec::with_capacity(ticks);
    for k in 1..=ticks {
        for s in 0..substeps {
            let t = (k - 1) as f64 * cfg.dt + s as f64 * h;
            let ext = if t >= t_step - 1e-12 { 1.0 } else { 0.0 };
            plant.advance(ext, h);
        }
        let est = obs.update(&scalar(plant.q), &scalar(0.0), &scalar(0.0), &m).unwrap();
        out.push((k as f64 * cfg.dt, est.external_torque[0]));
    }
    out
}

/// Continuous `w^2/(s^2 + 2 zeta w s + w^2)` step response by RK4 at 10 us.
fn continuous_step(w: f64, zeta: f64, t_step: f64, times: &[f64]) -> Vec<f64> {
    let h = 1e-5;
    let f = |x: f64, v: f64, u: f64| (v, w * w * (u - x) - 2.0 * zeta * w * v);
    let (mut x, mut v, mut t) = (0.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target - 1e-12 {
            let u = if t >= t_step - 1e-12 { 1.0 } else { 0.0 };
            let (k1x, k1v) = f(x, v, u);
            let (k2x, k2v) = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v, u);
            let (k3x, k3v) = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v, u);
            let (k4x, k4v) = f(x + h * k3x, v + h * k3v, u);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t += h;
        }
        out.push(x);
    }
    out
}

#[test]
fn torque_step_is_critically_damped() {
    let cfg = ObserverConfig::default();
    let resp = step_response(cfg, 0.05, 0.5, 1.0);
    let after: Vec<f64> = resp.iter().filter(|(t, _)| *t > 0.5).map(|(_, y)| *y).collect();
    for pair in after.windows(2) {
        assert!(pair[1] >= pair[0] - 1e-12, "not monotone: {pair:?}");
    }
    assert!(after.iter().all(|y| *y <= 1.0 + 1e-9));
    assert!((after.last().unwrap() - 1.0).abs() < 1e-6);
    for (_, y) in resp.iter().filter(|(t, _)| *t <= 0.5) {
        assert!(y.abs() < 1e-9);
    }
}

#[test]
fn torque_step_tracks_continuous_response() {
    for zeta in [0.6, 1.0, 2.5] {
        let cfg = ObserverConfig { zeta, ..ObserverConfig::default() };
        let resp = step_response(cfg, 0.05, 0.5, 2.0);
        let times: Vec<f64> = resp.iter().map(|(t, _)| *t).collect();
        let oracle = continuous_step(cfg.omega_c, zeta, 0.5, &times);
        let worst = resp.iter().zip(&oracle).map(|((_, y), o)| (y - o).abs()).fold(0.0, f64::max);
        assert!(worst < 2e-4, "zeta {zeta}: {worst}");
        assert!((resp.last().unwrap().1 - 1.0).abs() < 1e-4, "zeta {zeta}");
    }
}

#[test]
fn low_damping_overshoots() {
    let cfg = ObserverConfig { zeta: 0.3, ..ObserverConfig::default() };
    let resp = step_response(cfg, 0.05, 0.1, 0.6);
    let peak = resp.iter().map(|(_, y)| *y).fold(f64::MIN, f64::max);
    let expected = 1.0 + (-0.3 * std::f64::consts::PI / (1.0f64 - 0.09).sqrt()).exp();
    assert_relative_eq!(peak, expected, max_relative = 0.02);
}

#[test]
fn velocity_estimate_converges_on_exact_model() {
    let cfg = ObserverConfig::default();
    let j = 0.05;
    let m = inertia(j);
    let mut plant = Rotor { j, q: 0.0, v: 0.0 };
    let mut obs = Observer::at_rest(cfg, &scalar(0.0)).unwrap();
    let mut tau_u = 0.0;
    let mut accel_ref = 0.0;
    let mut tau_hat = 0.0;
    let ticks = 2000;
    for k in 1..=ticks {
        for _ in 0..10 {
            plant.advance(tau_u, cfg.dt / 10.0);
        }
        let out = obs.update(&scalar(plant.q), &scalar(accel_ref), &scalar(tau_u), &m).unwrap();
        tau_hat = out.external_torque[0];
        let t = k as f64 * cfg.dt;
        if t > 10.0 / cfg.omega_c {
            let err = (out.velocity[0] - plant.v).abs();
            assert!(err < 1e-5, "t {t}: {err}");
        }
        tau_u = 0.02 * (6.0 * t).sin() + 0.01 * (2.0 * t).cos();
        accel_ref = (tau_u + tau_hat) / j;
    }
    assert!(tau_hat.abs() < 1e-4, "{tau_hat}");
}

#[test]
fn integ_hpf_matches_ode_on_chirp() {
    let w2 = 100.0;
    let dt = 1e-3;
    let f = IntegHpf::new(w2, dt).unwrap();
    let u = |t: f64| (2.0 * std::f64::consts::PI * (0.1 * t + 0.5 * t * t)).sin();
    let h = 1e-5;
    let (mut y_ode, mut t) = (0.0, 0.0);
    let (mut y, mut x_prev) = (0.0, u(0.0));
    let mut worst: f64 = 0.0;
    for k in 1..=5000 {
        let target = k as f64 * dt;
        while t < target - 1e-12 {
            let g = |t: f64, y: f64| -w2 * y + u(t);
            let k1 = g(t, y_ode);
            let k2 = g(t + h / 2.0, y_ode + h / 2.0 * k1);
            let k3 = g(t + h / 2.0, y_ode + h / 2.0 * k2);
            let k4 = g(t + h, y_ode + h * k3);
            y_ode += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        let x = u(target);
        y = f.step(y, x, x_prev);
        x_prev = x;
        worst = worst.max((y - y_ode).abs());
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn pseudo_diff_at_cutoff_halves_power_with_45_degree_lag() {
    let w = 50.0;
    let dt = 1e-3;
    let mut d = PseudoDiff::new(w, dt, &scalar(0.0)).unwrap();
    let (mut ss, mut sc, mut n) = (0.0, 0.0, 0.0);
    let period = 2.0 * std::f64::consts::PI / w;
    for k in 1..=5000 {
        let t = k as f64 * dt;
        let y = d.step(&scalar((w * t).sin()))[0];
        if t > 10.0 * period {
            ss += y * (w * t).sin();
            sc += y * (w * t).cos();
            n += 1.0;
        }
    }
    // Project onto the true derivative w cos(wt): in-phase and quadrature.
    let (in_phase, quad) = (2.0 * sc / n, 2.0 * ss / n);
    let gain = in_phase.hypot(quad) / w;
    let lag = quad.atan2(in_phase);
    assert_relative_eq!(gain, FRAC_1_SQRT_2, max_relative = 0.02);
    assert_relative_eq!(lag, FRAC_PI_4, max_relative = 0.02);
}

#[test]
fn bilinear_cutoff_warping_is_quantified() {
    let (w, dt) = (50.0, 1e-3);
    let f = Lpf1::new(w, dt).unwrap();
    let gain = |omega: f64| {
        let z = Complex64::from_polar(1.0, omega * dt);
        (Complex64::new(f.b, 0.0) * (z + 1.0) / (z - f.a)).norm()
    };
    let (mut lo, mut hi) = (0.5 * w, 1.5 * w);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gain(mid) > FRAC_1_SQRT_2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let warp = 1.0 - lo / w;
    let analytic = 1.0 - (w * dt / 2.0).atan() / (w * dt / 2.0);
    assert_relative_eq!(warp, analytic, max_relative = 1e-6);
    assert_relative_eq!(warp, 2.0829e-4, max_relative = 1e-3);
}

#[test]
fn discrete_poles_are_stable() {
    for zeta in [0.2, 0.7, 1.0, 1.5, 4.0] {
        for omega_c in [5.0, 50.0, 200.0] {
            let cfg = ObserverConfig { omega_c, zeta, dt: 1e-3 };
            let obs = Observer::zeroed(cfg, &JointVec::zeros(2)).unwrap();
            for p in obs.poles() {
                assert!(p.norm() < 1.0, "{cfg:?}: {p}");
            }
        }
    }
}

#[test]
fn invalid_configurations_and_inputs_are_reported() {
    let bad = ObserverConfig { omega_c: 600.0, zeta: 2.0, dt: 1e-3 };
    assert!(Observer::zeroed(bad, &scalar(0.0)).unwrap_err().is_usage());
    let bad = ObserverConfig { zeta: 0.0, ..ObserverConfig::default() };
    assert!(bad.validate().is_err());

    let mut obs = Observer::zeroed(ObserverConfig::default(), &scalar(0.0)).unwrap();
    let m = inertia(1.0);
    let err = obs.update(&scalar(f64::NAN), &scalar(0.0), &scalar(0.0), &m).unwrap_err();
    assert!(matches!(err, Error::NonFinite { ref signal, .. } if signal == "theta"));
    let err = obs.update(&JointVec::zeros(2), &scalar(0.0), &scalar(0.0), &m).unwrap_err();
    assert!(err.is_usage());
}
