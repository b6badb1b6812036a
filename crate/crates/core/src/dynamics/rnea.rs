//! Recursive Newton-Euler passes on a modified-DH chain.
//!
//! Frame `j` is reached from frame `j-1` by `Rx(alpha) Tx(d) Rz(theta) Tz(r)`.
//! Every quantity below is expressed in the frame of the link it belongs to.
//! The base is fixed and gravity enters as a fictitious base acceleration.

use nalgebra::{DVector, Matrix3, Vector3};

use super::params::{ParamKind, ParamVector};
use super::DhJoint;

/// Inertial data of one link in its own frame, plus joint-side terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct LinkInertial {
    /// Inertia tensor about the frame origin.
    pub inertia: Matrix3<f64>,
    /// First moment of mass.
    pub first_moment: Vector3<f64>,
    pub mass: f64,
    pub rotor_inertia: f64,
    pub viscous: f64,
}

impl LinkInertial {
    pub fn add(&mut self, kind: ParamKind, value: f64) {
        let j = &mut self.inertia;
        match kind {
            ParamKind::Xx => j[(0, 0)] += value,
            ParamKind::Yy => j[(1, 1)] += value,
            ParamKind::Zz => j[(2, 2)] += value,
            ParamKind::Xy => {
                j[(0, 1)] += value;
                j[(1, 0)] += value;
            }
            ParamKind::Xz => {
                j[(0, 2)] += value;
                j[(2, 0)] += value;
            }
            ParamKind::Yz => {
                j[(1, 2)] += value;
                j[(2, 1)] += value;
            }
            ParamKind::Mx => self.first_moment.x += value,
            ParamKind::My => self.first_moment.y += value,
            ParamKind::Mz => self.first_moment.z += value,
            ParamKind::M => self.mass += value,
            ParamKind::Ia => self.rotor_inertia += value,
            ParamKind::Fv => self.viscous += value,
        }
    }
}

pub(crate) fn links_from_params(n: usize, params: &ParamVector) -> Vec<LinkInertial> {
    let mut links = vec![LinkInertial::default(); n];
    for (name, value) in params.iter() {
        links[name.joint - 1].add(name.kind, value);
    }
    links
}

/// Joint placements for one configuration.
#[derive(Clone, Debug)]
pub(crate) struct Frames {
    /// Rotation of frame j expressed in frame j-1.
    pub rot: Vec<Matrix3<f64>>,
    /// Origin of frame j expressed in frame j-1.
    pub pos: Vec<Vector3<f64>>,
}

impl Frames {
    pub fn new(joints: &[DhJoint], q: &DVector<f64>) -> Self {
        let mut rot = Vec::with_capacity(joints.len());
        let mut pos = Vec::with_capacity(joints.len());
        for (joint, &qi) in joints.iter().zip(q.iter()) {
            let (sa, ca) = joint.alpha.sin_cos();
            let (st, ct) = (qi + joint.theta_offset).sin_cos();
            rot.push(Matrix3::new(
                ct,
                -st,
                0.0,
                ca * st,
                ca * ct,
                -sa,
                sa * st,
                sa * ct,
                ca,
            ));
            pos.push(Vector3::new(joint.d, -joint.r * sa, joint.r * ca));
        }
        Self { rot, pos }
    }
}

/// Per-link motion from the outward pass.
#[derive(Clone, Debug)]
pub(crate) struct LinkMotion {
    pub omega: Vec<Vector3<f64>>,
    pub omega_dot: Vec<Vector3<f64>>,
    pub lin_acc: Vec<Vector3<f64>>,
}

pub(crate) fn outward(
    frames: &Frames,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    base_acc: Vector3<f64>,
) -> LinkMotion {
    let n = frames.rot.len();
    let z = Vector3::z();
    let mut omega = Vec::with_capacity(n);
    let mut omega_dot = Vec::with_capacity(n);
    let mut lin_acc = Vec::with_capacity(n);

    let mut w_prev = Vector3::zeros();
    let mut wd_prev = Vector3::zeros();
    let mut a_prev = base_acc;
    for j in 0..n {
        let rt = frames.rot[j].transpose();
        let p = frames.pos[j];
        let w_in = rt * w_prev;
        let w = w_in + z * qd[j];
        let wd = rt * wd_prev + z * qdd[j] + w_in.cross(&(z * qd[j]));
        let a = rt * (a_prev + wd_prev.cross(&p) + w_prev.cross(&w_prev.cross(&p)));
        omega.push(w);
        omega_dot.push(wd);
        lin_acc.push(a);
        w_prev = w;
        wd_prev = wd;
        a_prev = a;
    }
    LinkMotion { omega, omega_dot, lin_acc }
}

/// Inward pass: joint torques produced by the given link parameters moving
/// with `motion`.  Rotor inertia and friction act on the joint directly.
pub(crate) fn inward(
    frames: &Frames,
    motion: &LinkMotion,
    links: &[LinkInertial],
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
) -> DVector<f64> {
    let n = links.len();
    let mut tau = DVector::zeros(n);
    let mut f_next = Vector3::zeros();
    let mut n_next = Vector3::zeros();
    for j in (0..n).rev() {
        let link = &links[j];
        let w = motion.omega[j];
        let wd = motion.omega_dot[j];
        let a = motion.lin_acc[j];
        let ms = link.first_moment;
        let force = a * link.mass + wd.cross(&ms) + w.cross(&w.cross(&ms));
        let moment = link.inertia * wd + w.cross(&(link.inertia * w)) + ms.cross(&a);

        let (f_child, n_child) = if j + 1 < n {
            let r = frames.rot[j + 1];
            let f = r * f_next;
            (f, r * n_next + frames.pos[j + 1].cross(&f))
        } else {
            (Vector3::zeros(), Vector3::zeros())
        };
        let f_j = force + f_child;
        let n_j = moment + n_child;
        tau[j] = n_j.z + link.rotor_inertia * qdd[j] + link.viscous * qd[j];
        f_next = f_j;
        n_next = n_j;
    }
    tau
}

/// Torque contribution of a single unit parameter on link `link`.  Only
/// joints up to and including `link` are affected.
pub(crate) fn inward_unit(
    frames: &Frames,
    motion: &LinkMotion,
    link: usize,
    kind: ParamKind,
    qd: &DVector<f64>,
    qdd: &DVector<f64>,
    out: &mut [f64],
) {
    let mut unit = LinkInertial::default();
    unit.add(kind, 1.0);
    for v in out.iter_mut() {
        *v = 0.0;
    }
    match kind {
        ParamKind::Ia => {
            out[link] = qdd[link];
            return;
        }
        ParamKind::Fv => {
            out[link] = qd[link];
            return;
        }
        _ => {}
    }
    let w = motion.omega[link];
    let wd = motion.omega_dot[link];
    let a = motion.lin_acc[link];
    let ms = unit.first_moment;
    let mut f = a * unit.mass + wd.cross(&ms) + w.cross(&w.cross(&ms));
    let mut m = unit.inertia * wd + w.cross(&(unit.inertia * w)) + ms.cross(&a);
    out[link] = m.z;
    for j in (0..link).rev() {
        let r = frames.rot[j + 1];
        let f_parent = r * f;
        m = r * m + frames.pos[j + 1].cross(&f_parent);
        f = f_parent;
        out[j] = m.z;
    }
}

/// Base-frame pose of every link frame: rotations and origins.
pub(crate) fn poses(frames: &Frames) -> Vec<(Matrix3<f64>, Vector3<f64>)> {
    let mut out = Vec::with_capacity(frames.rot.len());
    let mut r = Matrix3::identity();
    let mut p = Vector3::zeros();
    for (rj, pj) in frames.rot.iter().zip(&frames.pos) {
        p += r * pj;
        r *= rj;
        out.push((r, p));
    }
    out
}
