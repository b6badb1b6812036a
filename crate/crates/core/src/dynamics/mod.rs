//! Rigid serial-link manipulator model.
//!
//! Joint torque follows `tau = M(q) qdd + C(q, qd) qd + D qd + g(q)` with a
//! purely viscous, diagonal `D`.  All terms are evaluated by recursive
//! Newton-Euler on a modified Denavit-Hartenberg chain, so the torque is
//! linear in the named parameter vector and the regressor can be built by
//! unit-basis evaluation.
//!
//! # Convention
//!
//! Row `j` of the geometry describes the transform from frame `j-1` to frame
//! `j` as `Rx(alpha_j) Tx(d_j) Rz(q_j + theta_offset_j) Tz(r_j)`.  Joint `j`
//! rotates about `z_j`.  Link parameters are expressed in frame `j` with the
//! inertia tensor taken about the frame origin
//! (`[[XX, XY, XZ], [XY, YY, YZ], [XZ, YZ, ZZ]]`).  Regrouped parameters
//! (`XXR2`, `MYR2`, ...) occupy the same slot as their plain counterpart.

mod model_file;
mod params;
mod rnea;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use rnea::{Frames, LinkInertial};

pub use model_file::{load_model, parse_model, render_model, write_params_fragment};
pub use params::{ParamKind, ParamName, ParamVector};

pub type JointVec = DVector<f64>;
pub type JointMat = DMatrix<f64>;

/// Condition number of `M(q)` above which forward dynamics refuses to solve.
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;

/// One row of the modified-DH table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhJoint {
    /// Twist about the previous x axis [rad].
    pub alpha: f64,
    /// Distance along the previous x axis [m].
    pub d: f64,
    /// Offset along the new z axis [m].
    pub r: f64,
    /// Constant added to the joint angle [rad].
    #[serde(default)]
    pub theta_offset: f64,
}

impl DhJoint {
    pub fn new(alpha: f64, d: f64, r: f64) -> Self {
        Self { alpha, d, r, theta_offset: 0.0 }
    }
}

/// Immutable manipulator description.  Cheap to clone relative to a
/// simulation run and safe to share between threads.
#[derive(Clone, Debug)]
pub struct ChainModel {
    name: String,
    joints: Vec<DhJoint>,
    params: ParamVector,
    gravity: Vector3<f64>,
    torque_limit: JointVec,
    condition_cap: f64,
    links: Vec<LinkInertial>,
}

impl ChainModel {
    pub fn new(
        name: impl Into<String>,
        joints: Vec<DhJoint>,
        params: ParamVector,
        gravity: Vector3<f64>,
        torque_limit: JointVec,
    ) -> Result<Self> {
        let n = joints.len();
        if n == 0 {
            return Err(Error::config("a chain needs at least one joint"));
        }
        for (i, j) in joints.iter().enumerate() {
            if ![j.alpha, j.d, j.r, j.theta_offset].iter().all(|v| v.is_finite()) {
                return Err(Error::config(format!("joint {} geometry is not finite", i + 1)));
            }
        }
        check_len("torque limit", n, torque_limit.len())?;
        if let Some(i) = torque_limit.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::config(format!("torque limit of joint {} must be positive", i + 1)));
        }
        if !gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::config("gravity must be finite"));
        }
        for (name, value) in params.iter() {
            if name.joint > n {
                return Err(Error::config(format!(
                    "parameter `{name}` refers to joint {} of a {n}-joint chain",
                    name.joint
                )));
            }
            if name.kind == ParamKind::Fv && value < 0.0 {
                return Err(Error::config(format!("viscous friction `{name}` is negative")));
            }
        }
        let links = rnea::links_from_params(n, &params);
        Ok(Self {
            name: name.into(),
            joints,
            params,
            gravity,
            torque_limit,
            condition_cap: DEFAULT_CONDITION_CAP,
            links,
        })
    }

    pub fn with_condition_cap(mut self, cap: f64) -> Self {
        self.condition_cap = cap;
        self
    }

    /// Same geometry, different parameter values (names and order kept).
    pub fn with_params(&self, params: ParamVector) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.joints.clone(),
            params,
            self.gravity,
            self.torque_limit.clone(),
        )
        .map(|m| m.with_condition_cap(self.condition_cap))
    }

    pub fn with_gravity(&self, gravity: Vector3<f64>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.joints.clone(),
            self.params.clone(),
            gravity,
            self.torque_limit.clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn joints(&self) -> &[DhJoint] {
        &self.joints
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn gravity(&self) -> Vector3<f64> {
        self.gravity
    }

    pub fn torque_limit(&self) -> &JointVec {
        &self.torque_limit
    }

    pub fn condition_cap(&self) -> f64 {
        self.condition_cap
    }

    /// Viscous friction coefficients, the diagonal of `D`.
    pub fn viscous_friction(&self) -> JointVec {
        JointVec::from_iterator(self.n_joints(), self.links.iter().map(|l| l.viscous))
    }

    fn check(&self, what: &'static str, v: &JointVec) -> Result<()> {
        check_len(what, self.n_joints(), v.len())
    }

    fn rnea(&self, q: &JointVec, qd: &JointVec, qdd: &JointVec, gravity: bool) -> JointVec {
        let frames = Frames::new(&self.joints, q);
        let base_acc = if gravity { -self.gravity } else { Vector3::zeros() };
        let motion = rnea::outward(&frames, qd, qdd, base_acc);
        rnea::inward(&frames, &motion, &self.links, qd, qdd)
    }

    /// `tau = M(q) qdd + C(q, qd) qd + D qd + g(q)`.
    pub fn inverse_dynamics(&self, q: &JointVec, qd: &JointVec, qdd: &JointVec) -> Result<JointVec> {
        self.check("q", q)?;
        self.check("qd", qd)?;
        self.check("qdd", qdd)?;
        Ok(self.rnea(q, qd, qdd, true))
    }

    /// Joint-space inertia, one Newton-Euler pass per column with velocity
    /// and gravity removed.
    pub fn mass_matrix(&self, q: &JointVec) -> Result<JointMat> {
        self.check("q", q)?;
        Ok(self.mass_matrix_unchecked(q))
    }

    fn mass_matrix_unchecked(&self, q: &JointVec) -> JointMat {
        let n = self.n_joints();
        let frames = Frames::new(&self.joints, q);
        let zero = JointVec::zeros(n);
        let mut m = JointMat::zeros(n, n);
        let mut unit = JointVec::zeros(n);
        for j in 0..n {
            unit[j] = 1.0;
            let motion = rnea::outward(&frames, &zero, &unit, Vector3::zeros());
            let col = rnea::inward(&frames, &motion, &self.links, &zero, &unit);
            m.set_column(j, &col);
            unit[j] = 0.0;
        }
        // Column j of the Newton-Euler result is exact up to rounding; fold
        // the two triangles together so downstream Cholesky sees an exactly
        // symmetric matrix.
        let mt = m.transpose();
        (m + mt) * 0.5
    }

    /// `h(q, qd) = C(q, qd) qd + D qd + g(q)`.
    pub fn bias_forces(&self, q: &JointVec, qd: &JointVec) -> Result<JointVec> {
        self.check("q", q)?;
        self.check("qd", qd)?;
        Ok(self.rnea(q, qd, &JointVec::zeros(self.n_joints()), true))
    }

    /// `g(q)`.
    pub fn gravity_torque(&self, q: &JointVec) -> Result<JointVec> {
        let zero = JointVec::zeros(self.n_joints());
        self.bias_forces(q, &zero)
    }

    /// Coriolis/centrifugal matrix from Christoffel symbols of `M(q)`, with
    /// `dM/dq` taken by central differences.  The resulting `C` makes
    /// `Mdot - 2C` skew-symmetric.
    pub fn coriolis_matrix(&self, q: &JointVec, qd: &JointVec) -> Result<JointMat> {
        self.check("q", q)?;
        self.check("qd", qd)?;
        let n = self.n_joints();
        let h = 1e-6;
        let dm: Vec<JointMat> = (0..n)
            .map(|k| {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += h;
                qm[k] -= h;
                (self.mass_matrix_unchecked(&qp) - self.mass_matrix_unchecked(&qm)) / (2.0 * h)
            })
            .collect();
        let mut c = JointMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    let christoffel = 0.5 * (dm[k][(i, j)] + dm[j][(i, k)] - dm[i][(j, k)]);
                    acc += christoffel * qd[k];
                }
                c[(i, j)] = acc;
            }
        }
        Ok(c)
    }

    /// Regressor `Y(q, qd, qdd)` with `Y * phi = inverse_dynamics(q, qd, qdd)`;
    /// one column per named parameter, in parameter order.
    pub fn regressor(&self, q: &JointVec, qd: &JointVec, qdd: &JointVec) -> Result<JointMat> {
        self.check("q", q)?;
        self.check("qd", qd)?;
        self.check("qdd", qdd)?;
        let n = self.n_joints();
        let mut y = JointMat::zeros(n, self.n_params());
        self.regressor_into(q, qd, qdd, &mut y, 0);
        Ok(y)
    }

    /// Writes the regressor block into rows `row0..row0 + n` of `out`.
    pub(crate) fn regressor_into(
        &self,
        q: &JointVec,
        qd: &JointVec,
        qdd: &JointVec,
        out: &mut JointMat,
        row0: usize,
    ) {
        let n = self.n_joints();
        let frames = Frames::new(&self.joints, q);
        let motion = rnea::outward(&frames, qd, qdd, -self.gravity);
        let mut col = vec![0.0; n];
        for (p, name) in self.params.names().iter().enumerate() {
            rnea::inward_unit(&frames, &motion, name.joint - 1, name.kind, qd, qdd, &mut col);
            for (i, v) in col.iter().enumerate() {
                out[(row0 + i, p)] = *v;
            }
        }
    }

    /// `M(q)` factorised once, for use over a whole control tick.
    pub fn frozen_inertia(&self, q: &JointVec) -> Result<FrozenInertia> {
        FrozenInertia::new(self.mass_matrix(q)?, self.condition_cap)
    }

    /// Accelerations solving `M(q) qdd = tau - h(q, qd)`.
    pub fn forward_dynamics(&self, q: &JointVec, qd: &JointVec, tau: &JointVec) -> Result<JointVec> {
        self.check("tau", tau)?;
        let h = self.bias_forces(q, qd)?;
        let m = self.mass_matrix_unchecked(q);
        solve_spd(&m, &(tau - h), self.condition_cap)
    }

    /// One semi-implicit Euler step: velocity first, then position with the
    /// updated velocity.
    pub fn integrate_step(
        &self,
        q: &JointVec,
        qd: &JointVec,
        tau: &JointVec,
        dt: f64,
    ) -> Result<(JointVec, JointVec)> {
        if !(dt > 0.0 && dt <= 1e-3) {
            return Err(Error::config(format!("integration step {dt} s outside (0, 1 ms]")));
        }
        let qdd = self.forward_dynamics(q, qd, tau)?;
        let qd_next = qd + qdd * dt;
        let q_next = q + &qd_next * dt;
        Ok((q_next, qd_next))
    }

    /// Base-frame rotation and origin of every link frame.
    pub fn link_poses(&self, q: &JointVec) -> Result<Vec<(nalgebra::Matrix3<f64>, Vector3<f64>)>> {
        self.check("q", q)?;
        Ok(rnea::poses(&Frames::new(&self.joints, q)))
    }

    /// Gravitational potential energy, zero at the base origin.
    pub fn potential_energy(&self, q: &JointVec) -> Result<f64> {
        let poses = self.link_poses(q)?;
        Ok(poses
            .iter()
            .zip(&self.links)
            .map(|((r, p), link)| -self.gravity.dot(&(r * link.first_moment + p * link.mass)))
            .sum())
    }

    /// `0.5 qd^T M(q) qd`, rotor inertia included.
    pub fn kinetic_energy(&self, q: &JointVec, qd: &JointVec) -> Result<f64> {
        self.check("qd", qd)?;
        let m = self.mass_matrix(q)?;
        Ok(0.5 * qd.dot(&(m * qd)))
    }
}

/// Solves `m x = b` for symmetric positive-definite `m`, refusing matrices
/// whose 2-norm condition number exceeds `cap`.
pub fn solve_spd(m: &JointMat, b: &JointVec, cap: f64) -> Result<JointVec> {
    let condition = spd_condition(m);
    if !(condition.is_finite() && condition <= cap) {
        return Err(Error::Singular { condition });
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    Ok(chol.solve(b))
}

/// A symmetric positive-definite inertia with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct FrozenInertia {
    m: JointMat,
    chol: Cholesky<f64, Dyn>,
}

impl FrozenInertia {
    pub fn new(m: JointMat, cap: f64) -> Result<Self> {
        let condition = spd_condition(&m);
        if !(condition.is_finite() && condition <= cap) {
            return Err(Error::Singular { condition });
        }
        let chol = m.clone().cholesky().ok_or(Error::Singular { condition: f64::INFINITY })?;
        Ok(Self { m, chol })
    }

    pub fn diagonal(d: &JointVec) -> Result<Self> {
        if d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::config("diagonal inertia must be strictly positive"));
        }
        Self::new(JointMat::from_diagonal(d), f64::INFINITY)
    }

    pub fn matrix(&self) -> &JointMat {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `M x`.
    pub fn apply(&self, x: &JointVec) -> JointVec {
        &self.m * x
    }

    /// `M^-1 b`.
    pub fn solve(&self, b: &JointVec) -> JointVec {
        self.chol.solve(b)
    }
}

/// 2-norm condition number of a symmetric matrix; infinite when it is not
/// positive definite.
pub fn spd_condition(m: &JointMat) -> f64 {
    if m.nrows() == 1 {
        return if m[(0, 0)] > 0.0 { 1.0 } else { f64::INFINITY };
    }
    let eig = m.clone().symmetric_eigenvalues();
    let min = eig.min();
    let max = eig.max();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
