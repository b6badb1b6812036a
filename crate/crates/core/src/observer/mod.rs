//! Minimal-order velocity and external-torque observer.
//!
//! With `a_ref` the acceleration reference handed to the plant and `u` the
//! inertia-normalised control torque `M^-1 tau_u`,
//!
//! ```text
//! v_hat   = 1/(s + 2 zeta w) a_ref + 2 zeta w s/(s + 2 zeta w) theta
//! tau_hat = M w^2/(s^2 + 2 zeta w s + w^2) (s^2 theta - u)
//! ```
//!
//! Both are realised without any explicit derivative using first-order
//! bilinear sections at the control period.  For `zeta = 1` the force path is
//! the cascade `(-L(L(u) + w pd) + w pd)` with `L = w/(s + w)` and
//! `pd = w (theta - L theta)`; the same cascade with the two real poles is
//! used for `zeta > 1`, and a single bilinear biquad for `zeta < 1`.
//!
//! The inertia is frozen at the current sample: both the current and the
//! previous `tau_u` are normalised by `M(theta[k])`.

mod filters;

pub use filters::{
    integ_hpf_step, lpf1_step, quantize, IntegHpf, Lpf1, PseudoDiff, ENCODER_RESOLUTION,
};

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::{FrozenInertia, JointVec};
use crate::error::{check_len, Error, Result};

type Complex64 = Complex<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    /// Cut-off angular frequency [rad/s].
    pub omega_c: f64,
    /// Damping of the force-estimation poles.
    pub zeta: f64,
    /// Sampling period [s].
    pub dt: f64,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self { omega_c: 50.0, zeta: 1.0, dt: 1e-3 }
    }
}

impl ObserverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta.is_finite() && self.zeta > 0.0) {
            return Err(Error::config(format!("observer damping {} must be positive", self.zeta)));
        }
        IntegHpf::new(2.0 * self.zeta * self.omega_c, self.dt)?;
        Lpf1::new(self.omega_c, self.dt)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverOutput {
    pub velocity: JointVec,
    pub external_torque: JointVec,
}

#[derive(Clone, Debug)]
enum ForcePath {
    /// Two real poles `p1 * p2 = w^2`, `p1 + p2 = 2 zeta w`.
    Cascade {
        l1: Lpf1,
        l2: Lpf1,
        p1: f64,
        p2: f64,
        u_lpf: JointVec,
        theta_lpf: JointVec,
        temp: JointVec,
        temp_lpf: JointVec,
    },
    /// Direct form I biquad, output in acceleration units.
    Biquad {
        b_theta: [f64; 3],
        b_u: [f64; 3],
        a: [f64; 2],
        theta_hist: [JointVec; 2],
        tau_u_hist: JointVec,
        y_hist: [JointVec; 2],
    },
}

/// Per-arm observer state.  One instance per manipulator.
#[derive(Clone, Debug)]
pub struct Observer {
    cfg: ObserverConfig,
    int_hpf: IntegHpf,
    lpf_vob: Lpf1,
    v_int: JointVec,
    theta_vob: JointVec,
    prev_theta: JointVec,
    prev_accel_ref: JointVec,
    prev_tau_u: JointVec,
    force: ForcePath,
    tick: usize,
}

impl Observer {
    /// All filter states zero, `theta0` as the previous encoder sample.
    pub fn zeroed(cfg: ObserverConfig, theta0: &JointVec) -> Result<Self> {
        cfg.validate()?;
        if theta0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { signal: "theta0".into(), tick: 0 });
        }
        let n = theta0.len();
        let w = cfg.omega_c;
        let zeros = JointVec::zeros(n);
        let force = if cfg.zeta >= 1.0 {
            let root = (cfg.zeta * cfg.zeta - 1.0).sqrt();
            let (p1, p2) = (w * (cfg.zeta + root), w * (cfg.zeta - root));
            ForcePath::Cascade {
                l1: Lpf1::new(p1, cfg.dt)?,
                l2: Lpf1::new(p2, cfg.dt)?,
                p1,
                p2,
                u_lpf: zeros.clone(),
                theta_lpf: zeros.clone(),
                temp: zeros.clone(),
                temp_lpf: zeros.clone(),
            }
        } else {
            let k = 2.0 / cfg.dt;
            let (k2, w2, zw) = (k * k, w * w, 2.0 * cfg.zeta * w * k);
            let d0 = k2 + zw + w2;
            ForcePath::Biquad {
                b_theta: [w2 * k2 / d0, -2.0 * w2 * k2 / d0, w2 * k2 / d0],
                b_u: [w2 / d0, 2.0 * w2 / d0, w2 / d0],
                a: [(2.0 * w2 - 2.0 * k2) / d0, (k2 - zw + w2) / d0],
                theta_hist: [theta0.clone(), theta0.clone()],
                tau_u_hist: zeros.clone(),
                y_hist: [zeros.clone(), zeros.clone()],
            }
        };
        Ok(Self {
            cfg,
            int_hpf: IntegHpf::new(2.0 * cfg.zeta * w, cfg.dt)?,
            lpf_vob: Lpf1::new(2.0 * cfg.zeta * w, cfg.dt)?,
            v_int: zeros.clone(),
            theta_vob: zeros.clone(),
            prev_theta: theta0.clone(),
            prev_accel_ref: zeros.clone(),
            prev_tau_u: zeros,
            force,
            tick: 0,
        })
    }

    /// Starts from rest at `theta0`: the low-pass states already hold
    /// `theta0`, so a stationary arm reads zero velocity and zero torque
    /// from the first sample.
    pub fn at_rest(cfg: ObserverConfig, theta0: &JointVec) -> Result<Self> {
        let mut obs = Self::zeroed(cfg, theta0)?;
        obs.theta_vob.copy_from(theta0);
        if let ForcePath::Cascade { theta_lpf, .. } = &mut obs.force {
            theta_lpf.copy_from(theta0);
        }
        Ok(obs)
    }

    pub fn config(&self) -> &ObserverConfig {
        &self.cfg
    }

    pub fn n_joints(&self) -> usize {
        self.prev_theta.len()
    }

    /// Discrete poles of every section.
    pub fn poles(&self) -> Vec<Complex64> {
        let mut out = vec![
            Complex64::new(self.int_hpf.pole(), 0.0),
            Complex64::new(self.lpf_vob.pole(), 0.0),
        ];
        match &self.force {
            ForcePath::Cascade { l1, l2, .. } => {
                out.push(Complex64::new(l1.pole(), 0.0));
                out.push(Complex64::new(l2.pole(), 0.0));
            }
            ForcePath::Biquad { a, .. } => {
                // z^2 + a0 z + a1 = 0
                let disc = Complex64::new(a[0] * a[0] - 4.0 * a[1], 0.0).sqrt();
                out.push((-a[0] + disc) / 2.0);
                out.push((-a[0] - disc) / 2.0);
            }
        }
        out
    }

    /// One sample.  `accel_ref` and `tau_u` are the acceleration reference
    /// and control torque that were applied over the interval ending now.
    pub fn update(
        &mut self,
        theta: &JointVec,
        accel_ref: &JointVec,
        tau_u: &JointVec,
        inertia: &FrozenInertia,
    ) -> Result<ObserverOutput> {
        let n = self.n_joints();
        check_len("theta", n, theta.len())?;
        check_len("accel_ref", n, accel_ref.len())?;
        check_len("tau_u", n, tau_u.len())?;
        check_len("inertia", n, inertia.dim())?;
        for (signal, v) in [("theta", theta), ("accel_ref", accel_ref), ("tau_u", tau_u)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { signal: signal.into(), tick: self.tick });
            }
        }
        self.tick += 1;

        let w2z = 2.0 * self.cfg.zeta * self.cfg.omega_c;
        self.int_hpf.step_vec(&mut self.v_int, accel_ref, &self.prev_accel_ref);
        self.lpf_vob.step_vec(&mut self.theta_vob, theta, &self.prev_theta);
        let velocity = &self.v_int + (theta - &self.theta_vob) * w2z;

        let accel_hat = match &mut self.force {
            ForcePath::Cascade { l1, l2, p1, p2, u_lpf, theta_lpf, temp, temp_lpf } => {
                let u_now = inertia.solve(tau_u);
                let u_prev = inertia.solve(&self.prev_tau_u);
                l1.step_vec(u_lpf, &u_now, &u_prev);
                l1.step_vec(theta_lpf, theta, &self.prev_theta);
                let pd = (theta - &*theta_lpf) * *p1;
                let temp_now = &*u_lpf + &pd * *p2;
                l2.step_vec(temp_lpf, &temp_now, temp);
                *temp = temp_now;
                pd * *p2 - &*temp_lpf
            }
            ForcePath::Biquad { b_theta, b_u, a, theta_hist, tau_u_hist, y_hist } => {
                let u = [inertia.solve(tau_u), inertia.solve(&self.prev_tau_u), inertia.solve(tau_u_hist)];
                let y = theta * b_theta[0] + &theta_hist[0] * b_theta[1] + &theta_hist[1] * b_theta[2]
                    - (&u[0] * b_u[0] + &u[1] * b_u[1] + &u[2] * b_u[2])
                    - &y_hist[0] * a[0]
                    - &y_hist[1] * a[1];
                theta_hist.swap(0, 1);
                theta_hist[0].copy_from(theta);
                tau_u_hist.copy_from(&self.prev_tau_u);
                y_hist.swap(0, 1);
                y_hist[0].copy_from(&y);
                y
            }
        };

        self.prev_theta.copy_from(theta);
        self.prev_accel_ref.copy_from(accel_ref);
        self.prev_tau_u.copy_from(tau_u);
        Ok(ObserverOutput { velocity, external_torque: inertia.apply(&accel_hat) })
    }
}

#[cfg(test)]
mod tests;
