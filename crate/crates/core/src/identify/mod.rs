//! Batch least-squares identification of the dynamic parameter vector.
//!
//! Torque is linear in the parameters, `tau = Y(q, qd, qdd) phi`, so stacking
//! regressor blocks over many samples gives an overdetermined linear system.
//! It is solved through a Householder QR of the stack followed by an SVD of
//! the small triangular factor, which exposes the numerical rank and yields
//! the minimum-norm solution when some parameter combinations are not
//! excited.

mod excitation;
mod resample;

pub use excitation::{add_torque_noise, synthesize, ExcitationConfig, Harmonic, Multisine};
pub use resample::{resample, Recording, ZeroPhaseLowpass};

use std::fmt;

use nalgebra::{DMatrix, DVector, QR};

use crate::dynamics::{ChainModel, JointVec, ParamVector};
use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct IdentSample {
    pub t: f64,
    pub theta: JointVec,
    pub velocity: JointVec,
    pub accel: JointVec,
    pub tau: JointVec,
}

/// Row blocks `Y(q_i, qd_i, qdd_i)` and the matching torques.
pub fn stack_regressor(model: &ChainModel, samples: &[IdentSample]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if samples.is_empty() {
        return Err(Error::Usage("identification needs at least one sample".into()));
    }
    let n = model.n_joints();
    let mut y = DMatrix::zeros(n * samples.len(), model.n_params());
    let mut tau = DVector::zeros(n * samples.len());
    for (k, s) in samples.iter().enumerate() {
        check_len("sample theta", n, s.theta.len())?;
        check_len("sample velocity", n, s.velocity.len())?;
        check_len("sample acceleration", n, s.accel.len())?;
        check_len("sample torque", n, s.tau.len())?;
        let finite = [&s.theta, &s.velocity, &s.accel, &s.tau].iter().all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::NonFinite { signal: "identification sample".into(), tick: k });
        }
        model.regressor_into(&s.theta, &s.velocity, &s.accel, &mut y, k * n);
        tau.rows_mut(k * n, n).copy_from(&s.tau);
    }
    Ok((y, tau))
}

/// Factorisation of a regressor stack, reusable for several torque vectors.
pub struct LeastSquares {
    qr: QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    singular_values: DVector<f64>,
    rank: usize,
    rows: usize,
}

impl LeastSquares {
    /// Relative singular-value threshold is `max(rows, cols) * eps`.
    pub fn new(y: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = y.shape();
        if rows < cols {
            return Err(Error::Usage(format!(
                "regressor stack has {rows} rows for {cols} parameters; record more samples"
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { signal: "regressor".into(), tick: 0 });
        }
        let qr = y.clone().qr();
        let r = qr.r();
        let svd = r.svd(true, true);
        let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V"));
        let tol = rows.max(cols) as f64 * f64::EPSILON * svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
        // nalgebra does not promise sorted singular values.
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
        let u = DMatrix::from_fn(cols, cols, |i, j| u[(i, order[j])]);
        let v = DMatrix::from_fn(cols, cols, |i, j| v_t[(order[j], i)]);
        let singular_values = DVector::from_iterator(cols, order.iter().map(|&k| svd.singular_values[k]));
        Ok(Self { qr, u, v, singular_values, rank, rows })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Descending.
    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// Minimum-norm minimiser of `|Y phi - tau|`.
    pub fn solve(&self, tau: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("torque stack", self.rows, tau.len())?;
        let mut qt = tau.clone();
        self.qr.q_tr_mul(&mut qt);
        let cols = self.u.ncols();
        let c = qt.rows(0, cols);
        let mut phi = DVector::zeros(cols);
        for k in 0..self.rank {
            let coef = self.u.column(k).dot(&c) / self.singular_values[k];
            phi.axpy(coef, &self.v.column(k), 1.0);
        }
        Ok(phi)
    }

    /// Diagonal of the pseudo-inverse of `Y^T Y`.
    pub fn covariance_diagonal(&self) -> DVector<f64> {
        let cols = self.v.nrows();
        DVector::from_fn(cols, |i, _| (0..self.rank).map(|k| (self.v[(i, k)] / self.singular_values[k]).powi(2)).sum())
    }

    /// A parameter is identifiable when the unexcited subspace has no
    /// component along its axis.
    pub fn identifiable(&self) -> Vec<bool> {
        let cols = self.v.nrows();
        (0..cols)
            .map(|i| {
                let leak: f64 = (self.rank..cols).map(|k| self.v[(i, k)].powi(2)).sum();
                leak.sqrt() < 1e-6
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Diagnostics {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub residual_rms: f64,
    /// Standard error of each estimate, assuming white residuals.
    pub standard_errors: Vec<f64>,
    pub identifiable: Vec<bool>,
    pub rows: usize,
}

impl Diagnostics {
    pub fn condition(&self) -> f64 {
        match self.rank {
            0 => f64::INFINITY,
            r => self.singular_values[0] / self.singular_values[r - 1],
        }
    }

    pub fn rank_deficient(&self) -> bool {
        self.rank < self.singular_values.len()
    }
}

/// Identified parameters with their diagnostics, ready to print.
#[derive(Clone, Debug)]
pub struct Identification {
    pub params: ParamVector,
    pub diagnostics: Diagnostics,
}

impl fmt::Display for Identification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.diagnostics;
        writeln!(f, "rows            {}", d.rows)?;
        writeln!(f, "parameters      {}", d.singular_values.len())?;
        writeln!(f, "effective rank  {}", d.rank)?;
        writeln!(f, "condition       {:.4e}", d.condition())?;
        writeln!(f, "residual RMS    {:.6e} N*m", d.residual_rms)?;
        writeln!(f)?;
        writeln!(f, "{:<8} {:>16} {:>12}  identifiable", "param", "value", "std error")?;
        for (((name, value), ok), se) in self.params.iter().zip(&d.identifiable).zip(&d.standard_errors) {
            let ok = if *ok { "yes" } else { "no" };
            writeln!(f, "{:<8} {:>16.8e} {:>12.4e}  {ok}", name.to_string(), value, se)?;
        }
        writeln!(f)?;
        writeln!(f, "singular values")?;
        for s in &d.singular_values {
            writeln!(f, "  {s:.6e}")?;
        }
        Ok(())
    }
}

/// Solves `Y phi = tau` in the least-squares sense and names the result
/// after `template`.
pub fn least_squares_identify(template: &ParamVector, y: &DMatrix<f64>, tau: &DVector<f64>) -> Result<Identification> {
    check_len("regressor columns", template.len(), y.ncols())?;
    check_len("torque stack", y.nrows(), tau.len())?;
    let ls = LeastSquares::new(y)?;
    let phi = ls.solve(tau)?;
    let residual = y * &phi - tau;
    let dof = (y.nrows() - ls.rank()).max(1) as f64;
    let variance = residual.norm_squared() / dof;
    let diagnostics = Diagnostics {
        singular_values: ls.singular_values().iter().copied().collect(),
        rank: ls.rank(),
        residual_rms: (residual.norm_squared() / residual.len() as f64).sqrt(),
        standard_errors: ls.covariance_diagonal().iter().map(|c| (variance * c).sqrt()).collect(),
        identifiable: ls.identifiable(),
        rows: y.nrows(),
    };
    if diagnostics.rank_deficient() {
        let missing: Vec<String> = template
            .names()
            .iter()
            .zip(&diagnostics.identifiable)
            .filter(|(_, ok)| !**ok)
            .map(|(n, _)| n.to_string())
            .collect();
        log::warn!(
            "regressor rank {} of {}; minimum-norm values for {}",
            diagnostics.rank,
            template.len(),
            missing.join(", ")
        );
    }
    Ok(Identification { params: template.with_values(phi)?, diagnostics })
}
