//! Bilinear-transform first-order sections.

use std::f64::consts::TAU;

use crate::dynamics::JointVec;
use crate::error::{Error, Result};

/// One encoder count of a 12-bit absolute encoder [rad].
pub const ENCODER_RESOLUTION: f64 = TAU / 4096.0;

fn check_section(omega: f64, dt: f64) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::config(format!("filter frequency {omega} rad/s must be positive")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config(format!("sampling period {dt} s must be positive")));
    }
    if omega * dt >= 2.0 {
        return Err(Error::config(format!(
            "filter frequency {omega} rad/s is too high for a {dt} s period (need omega*T < 2)"
        )));
    }
    Ok(())
}

/// `omega / (s + omega)`:
/// `y[k] = a y[k-1] + b (x[k] + x[k-1])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lpf1 {
    pub a: f64,
    pub b: f64,
}

impl Lpf1 {
    pub fn new(omega: f64, dt: f64) -> Result<Self> {
        check_section(omega, dt)?;
        let wt = omega * dt;
        Ok(Self { a: (2.0 - wt) / (2.0 + wt), b: wt / (2.0 + wt) })
    }

    #[inline]
    pub fn step(&self, y_prev: f64, x: f64, x_prev: f64) -> f64 {
        self.a * y_prev + self.b * (x + x_prev)
    }

    pub(crate) fn step_vec(&self, y: &mut JointVec, x: &JointVec, x_prev: &JointVec) {
        for ((y, x), xp) in y.iter_mut().zip(x.iter()).zip(x_prev.iter()) {
            *y = self.step(*y, *x, *xp);
        }
    }

    pub fn pole(&self) -> f64 {
        self.a
    }
}

/// `1 / (s + omega)`, an integrator rolled off below `omega`:
/// `y[k] = a y[k-1] + c (x[k] + x[k-1])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegHpf {
    pub a: f64,
    pub c: f64,
}

impl IntegHpf {
    pub fn new(omega: f64, dt: f64) -> Result<Self> {
        check_section(omega, dt)?;
        let wt = omega * dt;
        Ok(Self { a: (2.0 - wt) / (2.0 + wt), c: dt / (2.0 + wt) })
    }

    #[inline]
    pub fn step(&self, y_prev: f64, x: f64, x_prev: f64) -> f64 {
        self.a * y_prev + self.c * (x + x_prev)
    }

    pub(crate) fn step_vec(&self, y: &mut JointVec, x: &JointVec, x_prev: &JointVec) {
        for ((y, x), xp) in y.iter_mut().zip(x.iter()).zip(x_prev.iter()) {
            *y = self.step(*y, *x, *xp);
        }
    }

    pub fn pole(&self) -> f64 {
        self.a
    }
}

/// Single step of [`Lpf1`].
pub fn lpf1_step(y_prev: f64, x: f64, x_prev: f64, omega: f64, dt: f64) -> Result<f64> {
    Ok(Lpf1::new(omega, dt)?.step(y_prev, x, x_prev))
}

/// Single step of [`IntegHpf`].
pub fn integ_hpf_step(y_prev: f64, x: f64, x_prev: f64, omega: f64, dt: f64) -> Result<f64> {
    Ok(IntegHpf::new(omega, dt)?.step(y_prev, x, x_prev))
}

/// Band-limited differentiator `omega s / (s + omega)` on joint angles.
#[derive(Clone, Debug)]
pub struct PseudoDiff {
    lpf: Lpf1,
    omega: f64,
    low: JointVec,
    prev: JointVec,
}

impl PseudoDiff {
    /// Starts at rest at `theta0`.
    pub fn new(omega: f64, dt: f64, theta0: &JointVec) -> Result<Self> {
        Ok(Self { lpf: Lpf1::new(omega, dt)?, omega, low: theta0.clone(), prev: theta0.clone() })
    }

    /// Starts with an empty filter state, so the first samples see a step
    /// from zero to `theta0`.
    pub fn zeroed(omega: f64, dt: f64, theta0: &JointVec) -> Result<Self> {
        let mut d = Self::new(omega, dt, theta0)?;
        d.low.fill(0.0);
        Ok(d)
    }

    pub fn step(&mut self, theta: &JointVec) -> JointVec {
        self.lpf.step_vec(&mut self.low, theta, &self.prev);
        self.prev.copy_from(theta);
        (theta - &self.low) * self.omega
    }
}

/// Rounds every angle to the nearest multiple of `resolution`.
pub fn quantize(theta: &JointVec, resolution: f64) -> JointVec {
    theta.map(|q| (q / resolution).round() * resolution)
}
