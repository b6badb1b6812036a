//! 4-channel bilateral control law.
//!
//! Each arm runs the same acceleration-based law against the other arm's
//! latest state:
//!
//! ```text
//! a     = Kp (theta_des - theta) + Kd (v_des - v_hat) + Kf (tau_des + tau_hat)
//! tau_u = M(theta) a - tau_hat
//! tau   = tau_u + h(theta, v_hat)
//! ```
//!
//! with `Kf = (2 M(theta))^-1` of the arm's own inertia, so that in the
//! common/differential coordinates of [`transform_plus_minus`] and
//! [`transform_force`] position is servoed on the difference and force on the
//! sum.  The comparison modes of [`TeleopMode`] only scale terms by zero or
//! swap a model component; the arithmetic path stays the same.

mod modes;

pub use modes::{mode_gains, Side, TeleopMode};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ChainModel, FrozenInertia, JointVec};
use crate::error::{check_len, Error, Result};
use crate::observer::{Observer, ObserverConfig, PseudoDiff};
use crate::presets::CRANE_X7_FIXED_INERTIA;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocitySource {
    #[default]
    Observer,
    PseudoDiff,
}

/// How observer and pseudo-differentiator states are seeded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverInit {
    /// Low-pass states hold the initial pose.
    #[default]
    AtRest,
    /// Every filter state starts at zero.
    Zeroed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Position gain [1/s^2].
    pub kp: f64,
    /// Velocity gain [1/s].
    pub kd: f64,
    /// Scale on the force gain `(2 M)^-1`.
    pub kf: f64,
    /// Subtract the estimated external torque from `tau_u`.
    pub compensate_external: bool,
    /// Keep the Coriolis/centrifugal part of `h`.
    pub compensate_coriolis: bool,
    pub velocity_source: VelocitySource,
    /// Replace `M(theta)` everywhere by `diag(fixed_inertia_diag)`.
    pub use_fixed_inertia: bool,
    pub fixed_inertia_diag: Vec<f64>,
    pub observer: ObserverConfig,
    pub observer_init: ObserverInit,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kp: 800.0,
            kd: 40.0,
            kf: 1.0,
            compensate_external: true,
            compensate_coriolis: true,
            velocity_source: VelocitySource::Observer,
            use_fixed_inertia: false,
            fixed_inertia_diag: CRANE_X7_FIXED_INERTIA.to_vec(),
            observer: ObserverConfig::default(),
            observer_init: ObserverInit::AtRest,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("kp", self.kp), ("kd", self.kd), ("kf", self.kf)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::config(format!("gain {name} = {g} must be non-negative")));
            }
        }
        if self.use_fixed_inertia && self.fixed_inertia_diag.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::config("fixed inertia diagonal must be strictly positive"));
        }
        self.observer.validate()
    }
}

/// What one arm publishes to the other each tick.
#[derive(Clone, Debug, PartialEq)]
pub struct PeerSnapshot {
    pub theta: JointVec,
    pub velocity: JointVec,
    pub tau_ext: JointVec,
    pub time: f64,
}

/// `x_minus = x_l - x_f`, `x_plus = (x_l + x_f) / 2`.
pub fn transform_plus_minus(x_l: &JointVec, x_f: &JointVec) -> Result<(JointVec, JointVec)> {
    check_len("follower vector", x_l.len(), x_f.len())?;
    Ok((x_l - x_f, (x_l + x_f) * 0.5))
}

pub fn inverse_plus_minus(x_minus: &JointVec, x_plus: &JointVec) -> Result<(JointVec, JointVec)> {
    check_len("plus vector", x_minus.len(), x_plus.len())?;
    let half = x_minus * 0.5;
    Ok((x_plus + &half, x_plus - half))
}

/// Dual of [`transform_plus_minus`]: `tau_minus = (tau_l - tau_f) / 2`,
/// `tau_plus = tau_l + tau_f`.
pub fn transform_force(tau_l: &JointVec, tau_f: &JointVec) -> Result<(JointVec, JointVec)> {
    check_len("follower torque", tau_l.len(), tau_f.len())?;
    Ok(((tau_l - tau_f) * 0.5, tau_l + tau_f))
}

pub fn inverse_force(tau_minus: &JointVec, tau_plus: &JointVec) -> Result<(JointVec, JointVec)> {
    check_len("plus torque", tau_minus.len(), tau_plus.len())?;
    let half = tau_plus * 0.5;
    Ok((&half + tau_minus, half - tau_minus))
}

/// The three additive terms of the acceleration reference.
#[derive(Clone, Debug, PartialEq)]
pub struct AccelTerms {
    pub position: JointVec,
    pub velocity: JointVec,
    pub force: JointVec,
}

impl AccelTerms {
    pub fn total(&self) -> JointVec {
        &self.position + &self.velocity + &self.force
    }
}

/// `Kp (theta_des - theta) + Kd (v_des - v) + Kf (tau_des + tau_hat)` with
/// `Kf = kf (2 M)^-1`.
pub fn acceleration_reference(
    cfg: &ControllerConfig,
    peer: &PeerSnapshot,
    theta: &JointVec,
    velocity: &JointVec,
    tau_ext: &JointVec,
    inertia: &FrozenInertia,
) -> AccelTerms {
    let force_sum = &peer.tau_ext + tau_ext;
    AccelTerms {
        position: (&peer.theta - theta) * cfg.kp,
        velocity: (&peer.velocity - velocity) * cfg.kd,
        force: inertia.solve(&force_sum) * (0.5 * cfg.kf),
    }
}

/// Clamps `tau_u` so that `tau_u + h` stays within `±limit`; returns the
/// clamped torque and which joints saturated.
pub fn apply_torque_limit(tau_u: &JointVec, h: &JointVec, limit: &JointVec) -> (JointVec, Vec<bool>) {
    let mut out = tau_u.clone();
    let mut saturated = vec![false; tau_u.len()];
    for i in 0..tau_u.len() {
        if tau_u[i] + h[i] > limit[i] {
            out[i] = limit[i] - h[i];
            saturated[i] = true;
        } else if tau_u[i] + h[i] < -limit[i] {
            out[i] = -limit[i] - h[i];
            saturated[i] = true;
        }
    }
    (out, saturated)
}

/// Estimates produced by the observer stage of a tick.
#[derive(Clone, Debug)]
pub struct ArmState {
    pub theta: JointVec,
    /// Velocity the controller acts on (observer or pseudo-differential).
    pub velocity: JointVec,
    /// Observer velocity, regardless of the source in use.
    pub observer_velocity: JointVec,
    pub external_torque: JointVec,
    pub inertia: FrozenInertia,
}

impl ArmState {
    pub fn snapshot(&self, time: f64) -> PeerSnapshot {
        PeerSnapshot {
            theta: self.theta.clone(),
            velocity: self.velocity.clone(),
            tau_ext: self.external_torque.clone(),
            time,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ControlOutput {
    /// Torque sent to the motor.
    pub tau_ref: JointVec,
    /// Torque before the nonlinear compensation, after limiting.
    pub tau_u: JointVec,
    /// `h(theta, v)` as compensated.
    pub bias: JointVec,
    /// Acceleration reference from the control law, before limiting.
    pub accel_cmd: JointVec,
    /// Acceleration reference fed back to the observer.
    pub accel_ref: JointVec,
    pub terms: AccelTerms,
    pub saturated: Vec<bool>,
}

/// Observer plus control law for one manipulator.
#[derive(Clone, Debug)]
pub struct ArmController {
    model: Arc<ChainModel>,
    cfg: ControllerConfig,
    fixed: Option<FrozenInertia>,
    observer: Observer,
    pseudo: Option<PseudoDiff>,
    accel_ref: JointVec,
    tau_u: JointVec,
    tick: usize,
}

impl ArmController {
    /// `cfg` is the effective configuration (see [`mode_gains`]).
    pub fn new(model: Arc<ChainModel>, cfg: ControllerConfig, theta0: &JointVec) -> Result<Self> {
        cfg.validate()?;
        let n = model.n_joints();
        check_len("initial pose", n, theta0.len())?;
        let fixed = if cfg.use_fixed_inertia {
            check_len("fixed inertia diagonal", n, cfg.fixed_inertia_diag.len())?;
            Some(FrozenInertia::diagonal(&JointVec::from_column_slice(&cfg.fixed_inertia_diag))?)
        } else {
            None
        };
        let ocfg = cfg.observer;
        let (observer, pseudo) = match cfg.observer_init {
            ObserverInit::AtRest => (
                Observer::at_rest(ocfg, theta0)?,
                PseudoDiff::new(ocfg.omega_c, ocfg.dt, theta0)?,
            ),
            ObserverInit::Zeroed => (
                Observer::zeroed(ocfg, theta0)?,
                PseudoDiff::zeroed(ocfg.omega_c, ocfg.dt, theta0)?,
            ),
        };
        let pseudo = (cfg.velocity_source == VelocitySource::PseudoDiff).then_some(pseudo);
        Ok(Self {
            model,
            cfg,
            fixed,
            observer,
            pseudo,
            accel_ref: JointVec::zeros(n),
            tau_u: JointVec::zeros(n),
            tick: 0,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn model(&self) -> &ChainModel {
        &self.model
    }

    fn inertia_at(&self, theta: &JointVec) -> Result<FrozenInertia> {
        match &self.fixed {
            Some(m) => Ok(m.clone()),
            None => self.model.frozen_inertia(theta),
        }
    }

    /// Observer stage: consumes the encoder reading for this tick.
    pub fn observe(&mut self, theta: &JointVec) -> Result<ArmState> {
        let inertia = self.inertia_at(theta)?;
        let est = self.observer.update(theta, &self.accel_ref, &self.tau_u, &inertia)?;
        let velocity = match &mut self.pseudo {
            Some(d) => d.step(theta),
            None => est.velocity.clone(),
        };
        Ok(ArmState {
            theta: theta.clone(),
            velocity,
            observer_velocity: est.velocity,
            external_torque: est.external_torque,
            inertia,
        })
    }

    /// `h(theta, v)`, optionally without the Coriolis/centrifugal part.
    fn bias(&self, theta: &JointVec, velocity: &JointVec) -> Result<JointVec> {
        if self.cfg.compensate_coriolis {
            self.model.bias_forces(theta, velocity)
        } else {
            let friction = self.model.viscous_friction().component_mul(velocity);
            Ok(self.model.gravity_torque(theta)? + friction)
        }
    }

    /// Control stage against the peer's latest snapshot.
    pub fn command(&mut self, state: &ArmState, peer: &PeerSnapshot) -> Result<ControlOutput> {
        let n = self.model.n_joints();
        check_len("peer theta", n, peer.theta.len())?;
        check_len("peer velocity", n, peer.velocity.len())?;
        check_len("peer torque", n, peer.tau_ext.len())?;
        let tick = self.tick;
        self.tick += 1;

        let m = &state.inertia;
        let terms = acceleration_reference(&self.cfg, peer, &state.theta, &state.velocity, &state.external_torque, m);
        let accel_cmd = terms.total();
        let compensation = if self.cfg.compensate_external { 1.0 } else { 0.0 };
        let tau_u = m.apply(&accel_cmd) - &state.external_torque * compensation;

        let bias = self.bias(&state.theta, &state.velocity)?;
        let limit = self.model.torque_limit();
        let (tau_u, saturated) = apply_torque_limit(&tau_u, &bias, limit);
        let mut tau_ref = &tau_u + &bias;
        for (i, s) in saturated.iter().enumerate() {
            if *s {
                tau_ref[i] = limit[i].copysign(tau_ref[i]);
            }
        }
        let accel_ref = m.solve(&(&tau_u + &state.external_torque));

        for (signal, v) in [("tau_ref", &tau_ref), ("accel_ref", &accel_ref)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { signal: signal.into(), tick });
            }
        }
        self.accel_ref.copy_from(&accel_ref);
        self.tau_u.copy_from(&tau_u);
        Ok(ControlOutput { tau_ref, tau_u, bias, accel_cmd, accel_ref, terms, saturated })
    }
}
