//! Test-only oracles that share no code path with the library's dynamics.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use teleop_core::dynamics::{ParamKind, ParamName, ParamVector};
use teleop_core::{ChainModel, DhJoint, JointVec};

/// Physical description of one link: mass, centre of mass in the link
/// frame, central inertia tensor, rotor inertia and viscous friction.
#[derive(Clone, Debug)]
pub struct PhysicalLink {
    pub mass: f64,
    pub com: Vector3<f64>,
    pub central: Matrix3<f64>,
    pub rotor: f64,
    pub friction: f64,
}

#[derive(Clone, Debug)]
pub struct PhysicalChain {
    pub joints: Vec<DhJoint>,
    pub links: Vec<PhysicalLink>,
    pub gravity: Vector3<f64>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_chain(n: usize, seed: u64, friction: bool) -> PhysicalChain {
    let mut r = rng(seed);
    let mut joints = Vec::new();
    let mut links = Vec::new();
    for i in 0..n {
        let alpha = match r.random_range(0..3) {
            0 => std::f64::consts::FRAC_PI_2,
            1 => -std::f64::consts::FRAC_PI_2,
            _ => r.random_range(-1.2..1.2),
        };
        let d = if i == 0 { 0.0 } else { r.random_range(-0.3..0.3) };
        let rr = r.random_range(-0.3..0.3);
        joints.push(DhJoint { alpha, d, r: rr, theta_offset: r.random_range(-0.5..0.5) });

        let a: f64 = r.random_range(0.01..0.05);
        let b: f64 = r.random_range(0.01..0.05);
        let c: f64 = r.random_range((a - b).abs() + 0.002..a + b);
        let rot = Rotation3::from_euler_angles(
            r.random_range(-3.0..3.0),
            r.random_range(-3.0..3.0),
            r.random_range(-3.0..3.0),
        );
        let central = rot.matrix() * Matrix3::from_diagonal(&Vector3::new(a, b, c)) * rot.matrix().transpose();
        links.push(PhysicalLink {
            mass: r.random_range(0.5..2.0),
            com: Vector3::new(
                r.random_range(-0.2..0.2),
                r.random_range(-0.2..0.2),
                r.random_range(-0.2..0.2),
            ),
            central,
            rotor: r.random_range(0.0..0.01),
            friction: if friction { r.random_range(0.0..0.1) } else { 0.0 },
        });
    }
    PhysicalChain { joints, links, gravity: Vector3::new(0.0, 0.0, -9.81) }
}

impl PhysicalChain {
    pub fn n(&self) -> usize {
        self.joints.len()
    }

    /// Standard parameters about each frame origin.
    pub fn to_model(&self) -> ChainModel {
        let mut entries = Vec::new();
        for (i, l) in self.links.iter().enumerate() {
            let j = i + 1;
            let c = l.com;
            let origin = l.central + (Matrix3::identity() * c.dot(&c) - c * c.transpose()) * l.mass;
            let ms = c * l.mass;
            for (kind, v) in [
                (ParamKind::Xx, origin[(0, 0)]),
                (ParamKind::Xy, origin[(0, 1)]),
                (ParamKind::Xz, origin[(0, 2)]),
                (ParamKind::Yy, origin[(1, 1)]),
                (ParamKind::Yz, origin[(1, 2)]),
                (ParamKind::Zz, origin[(2, 2)]),
                (ParamKind::Mx, ms.x),
                (ParamKind::My, ms.y),
                (ParamKind::Mz, ms.z),
                (ParamKind::M, l.mass),
                (ParamKind::Ia, l.rotor),
                (ParamKind::Fv, l.friction),
            ] {
                entries.push((ParamName::new(kind, j), v));
            }
        }
        let n = self.n();
        ChainModel::new(
            "random",
            self.joints.clone(),
            ParamVector::sorted(entries).unwrap(),
            self.gravity,
            JointVec::from_element(n, 1e4),
        )
        .unwrap()
    }

    /// Homogeneous transforms of every link frame, composed from elementary
    /// rotations and translations.
    fn transforms(&self, q: &DVector<f64>) -> Vec<Matrix4<f64>> {
        let mut t = Matrix4::identity();
        let mut out = Vec::new();
        for (j, &qi) in self.joints.iter().zip(q.iter()) {
            let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), j.alpha).to_homogeneous();
            let tx = Matrix4::new_translation(&Vector3::new(j.d, 0.0, 0.0));
            let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), qi + j.theta_offset).to_homogeneous();
            let tz = Matrix4::new_translation(&Vector3::new(0.0, 0.0, j.r));
            t = t * rx * tx * rz * tz;
            out.push(t);
        }
        out
    }

    /// Inertia matrix from geometric Jacobians of each centre of mass.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        let ts = self.transforms(q);
        let axes: Vec<(Vector3<f64>, Vector3<f64>)> = ts
            .iter()
            .map(|t| (t.fixed_view::<3, 1>(0, 2).into(), t.fixed_view::<3, 1>(0, 3).into()))
            .collect();
        let mut m = DMatrix::zeros(n, n);
        for (j, (t, link)) in ts.iter().zip(&self.links).enumerate() {
            let rot: Matrix3<f64> = t.fixed_view::<3, 3>(0, 0).into();
            let origin: Vector3<f64> = t.fixed_view::<3, 1>(0, 3).into();
            let pc = origin + rot * link.com;
            let mut jv = DMatrix::zeros(3, n);
            let mut jw = DMatrix::zeros(3, n);
            for (i, (z, o)) in axes.iter().enumerate().take(j + 1) {
                jv.set_column(i, &z.cross(&(pc - o)));
                jw.set_column(i, z);
            }
            let i_world = rot * link.central * rot.transpose();
            let i_dyn = DMatrix::from_iterator(3, 3, i_world.iter().copied());
            m += jv.transpose() * &jv * link.mass + jw.transpose() * i_dyn * &jw;
        }
        for (i, l) in self.links.iter().enumerate() {
            m[(i, i)] += l.rotor;
        }
        m
    }

    pub fn potential(&self, q: &DVector<f64>) -> f64 {
        self.transforms(q)
            .iter()
            .zip(&self.links)
            .map(|(t, l)| {
                let rot: Matrix3<f64> = t.fixed_view::<3, 3>(0, 0).into();
                let origin: Vector3<f64> = t.fixed_view::<3, 1>(0, 3).into();
                -l.mass * self.gravity.dot(&(origin + rot * l.com))
            })
            .sum()
    }

    /// Euler-Lagrange torque with dM/dq and dV/dq by central differences.
    pub fn lagrange_torque(&self, q: &DVector<f64>, qd: &DVector<f64>, qdd: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let h = 1e-5;
        let dm: Vec<DMatrix<f64>> = (0..n)
            .map(|k| {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += h;
                qm[k] -= h;
                (self.mass_matrix(&qp) - self.mass_matrix(&qm)) / (2.0 * h)
            })
            .collect();
        let mut mdot = DMatrix::zeros(n, n);
        for k in 0..n {
            mdot += &dm[k] * qd[k];
        }
        let mut tau = self.mass_matrix(q) * qdd + mdot * qd;
        for i in 0..n {
            tau[i] -= 0.5 * qd.dot(&(&dm[i] * qd));
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            tau[i] += (self.potential(&qp) - self.potential(&qm)) / (2.0 * h);
            tau[i] += self.links[i].friction * qd[i];
        }
        tau
    }
}

/// Closed-form inertia of a planar two-link arm.
pub fn two_link_mass_matrix(l1: f64, lc: [f64; 2], m: [f64; 2], izz: [f64; 2], q2: f64) -> [[f64; 2]; 2] {
    let c2 = q2.cos();
    let m11 = izz[0] + izz[1] + m[0] * lc[0] * lc[0] + m[1] * (l1 * l1 + lc[1] * lc[1] + 2.0 * l1 * lc[1] * c2);
    let m12 = izz[1] + m[1] * (lc[1] * lc[1] + l1 * lc[1] * c2);
    let m22 = izz[1] + m[1] * lc[1] * lc[1];
    [[m11, m12], [m12, m22]]
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| r.random_range(-scale..scale))
}

pub fn reachable_crane_pose(r: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(8, |i, _| {
        let (lo, hi) = teleop_core::presets::CRANE_X7_JOINT_RANGE[i];
        r.random_range(lo..=hi)
    })
}

/// Classic RK4 on the model's forward dynamics, used as a reference
/// trajectory.
pub fn rk4(model: &ChainModel, q: &DVector<f64>, qd: &DVector<f64>, tau: &DVector<f64>, dt: f64) -> (DVector<f64>, DVector<f64>) {
    let f = |q: &DVector<f64>, qd: &DVector<f64>| model.forward_dynamics(q, qd, tau).unwrap();
    let k1v = qd.clone();
    let k1a = f(q, qd);
    let k2v = qd + &k1a * (dt / 2.0);
    let k2a = f(&(q + &k1v * (dt / 2.0)), &k2v);
    let k3v = qd + &k2a * (dt / 2.0);
    let k3a = f(&(q + &k2v * (dt / 2.0)), &k3v);
    let k4v = qd + &k3a * dt;
    let k4a = f(&(q + &k3v * dt), &k4v);
    let q_next = q + (k1v + &k2v * 2.0 + &k3v * 2.0 + k4v) * (dt / 6.0);
    let qd_next = qd + (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (dt / 6.0);
    (q_next, qd_next)
}

/// Max-norm relative error with a floor of 1 on the reference scale.
pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = b.amax().max(1.0);
    (a - b).amax() / scale
}

/// Polynomial product in `z^-1`.
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0)).collect()
}

/// Direct-form rational filter `B(z^-1) / A(z^-1)` with history seeded
/// from a constant input `x0` and zero output.
pub struct Iir {
    b: Vec<f64>,
    a: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Iir {
    pub fn new(b: Vec<f64>, a: Vec<f64>, x0: f64) -> Self {
        let (nb, na) = (b.len(), a.len());
        Self { b, a, x: vec![x0; nb], y: vec![0.0; na] }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        self.x.rotate_right(1);
        self.x[0] = x;
        let mut acc: f64 = self.b.iter().zip(&self.x).map(|(b, x)| b * x).sum();
        for i in 1..self.a.len() {
            acc -= self.a[i] * self.y[i - 1];
        }
        let y = acc / self.a[0];
        self.y.rotate_right(1);
        self.y[0] = y;
        y
    }
}

/// Single-joint acceleration control written as a cascade: the command is
/// the acceleration `a` plus a PI-like correction on the error between its
/// integral and the measured velocity,
///
/// `u = a + w^2 / (s + 2 w) (a / s - s theta)`,
///
/// discretised with the bilinear map and a one-sample delay on the fed-back
/// command.  `L = w/(s + w)` at period `dt` gives
/// `u (1 - z^-1 L^2) = a - L^2 S^2 theta`, `S` the bilinear derivative.
pub struct CascadeOracle {
    from_a: Iir,
    from_theta: Iir,
}

impl CascadeOracle {
    pub fn new(w: f64, dt: f64, theta0: f64) -> Self {
        let wt = w * dt;
        let b = wt / (2.0 + wt);
        let c = (2.0 - wt) / (2.0 + wt);
        let k = 2.0 / dt;
        let lag = poly_mul(&[1.0, -c], &[1.0, -c]);
        let lead = poly_mul(&[b, b], &[b, b]);
        let den = poly_sub(&lag, &poly_mul(&[0.0, 1.0], &lead));
        let from_a = Iir::new(lag, den.clone(), 0.0);
        let diff = poly_mul(&[b * k, -b * k], &[b * k, -b * k]);
        let from_theta = Iir::new(diff.iter().map(|v| -v).collect(), den, theta0);
        Self { from_a, from_theta }
    }

    pub fn step(&mut self, a: f64, theta: f64) -> f64 {
        self.from_a.step(a) + self.from_theta.step(theta)
    }
}
