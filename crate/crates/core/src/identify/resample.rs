use biquad::{Biquad, Coefficients, DirectForm1, ToHertz, Type};

use super::IdentSample;
use crate::dynamics::JointVec;
use crate::error::{Error, Result};

/// Uniformly sampled joint data.  Velocity and acceleration are optional and
/// derived from the filtered angle when missing.
#[derive(Clone, Debug, Default)]
pub struct Recording {
    pub t0: f64,
    pub rate_hz: f64,
    pub theta: Vec<JointVec>,
    pub velocity: Option<Vec<JointVec>>,
    pub accel: Option<Vec<JointVec>>,
    pub tau: Vec<JointVec>,
}

impl Recording {
    /// Angles and torques of `samples`, which must be uniformly spaced.
    pub fn from_samples(samples: &[IdentSample], keep_derivatives: bool) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Usage("a recording needs at least two samples".into()));
        }
        let dt = samples[1].t - samples[0].t;
        if !(dt > 0.0) {
            return Err(Error::Usage("sample times must increase".into()));
        }
        let pick = |f: fn(&IdentSample) -> &JointVec| samples.iter().map(|s| f(s).clone()).collect::<Vec<_>>();
        Ok(Self {
            t0: samples[0].t,
            rate_hz: 1.0 / dt,
            theta: pick(|s| &s.theta),
            velocity: keep_derivatives.then(|| pick(|s| &s.velocity)),
            accel: keep_derivatives.then(|| pick(|s| &s.accel)),
            tau: pick(|s| &s.tau),
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Fourth-order Butterworth low-pass run forward and backward.
#[derive(Clone, Copy, Debug)]
pub struct ZeroPhaseLowpass {
    sections: [Coefficients<f64>; 2],
}

impl ZeroPhaseLowpass {
    pub fn new(rate_hz: f64, cutoff_hz: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && cutoff_hz < 0.5 * rate_hz) {
            return Err(Error::config(format!(
                "cut-off {cutoff_hz} Hz must lie strictly between 0 and half the {rate_hz} Hz sampling rate"
            )));
        }
        // Pole-pair quality factors of a 4th-order Butterworth.
        let q = [0.541_196_100_146_197, 1.306_562_964_876_376_4];
        let make = |q| {
            Coefficients::<f64>::from_params(Type::LowPass, rate_hz.hz(), cutoff_hz.hz(), q)
                .map_err(|e| Error::config(format!("low-pass design failed: {e:?}")))
        };
        Ok(Self { sections: [make(q[0])?, make(q[1])?] })
    }

    fn pass(&self, x: &mut [f64]) {
        let offset = x[0];
        let mut stages = self.sections.map(DirectForm1::<f64>::new);
        for v in x.iter_mut() {
            let mut y = *v - offset;
            for s in stages.iter_mut() {
                y = s.run(y);
            }
            *v = y + offset;
        }
    }

    /// Zero-phase filtering with odd reflection at both ends.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        if x.is_empty() {
            return Vec::new();
        }
        let pad = pad.min(x.len() - 1);
        let (first, last) = (x[0], x[x.len() - 1]);
        let mut ext = Vec::with_capacity(x.len() + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[x.len() - 1 - i]));
        self.pass(&mut ext);
        ext.reverse();
        self.pass(&mut ext);
        ext.reverse();
        ext[pad..pad + x.len()].to_vec()
    }
}

fn channels(rows: &[JointVec]) -> Vec<Vec<f64>> {
    let n = rows[0].len();
    (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Anti-aliasing filter at `0.4 * target_hz`, derivatives by central
/// differences where missing, then decimation to `target_hz`.
pub fn resample(rec: &Recording, target_hz: f64) -> Result<Vec<IdentSample>> {
    if !(target_hz > 0.0 && target_hz < rec.rate_hz) {
        return Err(Error::Usage(format!(
            "target rate {target_hz} Hz must be below the {} Hz source rate",
            rec.rate_hz
        )));
    }
    let ratio_f = rec.rate_hz / target_hz;
    let ratio = ratio_f.round() as usize;
    if (ratio_f - ratio as f64).abs() > 1e-9 * ratio_f {
        return Err(Error::Usage(format!("{} Hz is not an integer multiple of {target_hz} Hz", rec.rate_hz)));
    }
    let len = rec.len();
    if len < 4 * ratio + 2 {
        return Err(Error::Usage(format!("recording of {len} samples is too short to resample by {ratio}")));
    }
    if rec.tau.len() != len
        || rec.velocity.as_ref().is_some_and(|v| v.len() != len)
        || rec.accel.as_ref().is_some_and(|v| v.len() != len)
    {
        return Err(Error::Usage("recording channels differ in length".into()));
    }
    let n = rec.theta[0].len();
    if [&rec.theta, &rec.tau].iter().any(|c| c.iter().any(|r| r.len() != n)) {
        return Err(Error::Usage("recording rows differ in joint count".into()));
    }

    let dt = 1.0 / rec.rate_hz;
    let lpf = ZeroPhaseLowpass::new(rec.rate_hz, 0.4 * target_hz)?;
    let pad = 3 * ratio * 4;
    let filter = |rows: &[JointVec]| -> Vec<Vec<f64>> { channels(rows).iter().map(|c| lpf.filtfilt(c, pad)).collect() };
    let theta = filter(&rec.theta);
    let tau = filter(&rec.tau);
    let velocity = rec.velocity.as_deref().map(filter);
    let accel = rec.accel.as_deref().map(filter);

    let mut out = Vec::with_capacity(len / ratio);
    let mut i = ratio;
    while i + 1 < len {
        let at = |c: &Vec<Vec<f64>>| JointVec::from_iterator(n, c.iter().map(|ch| ch[i]));
        let qd = match &velocity {
            Some(v) => at(v),
            None => JointVec::from_iterator(n, theta.iter().map(|ch| (ch[i + 1] - ch[i - 1]) / (2.0 * dt))),
        };
        let qdd = match &accel {
            Some(a) => at(a),
            None => JointVec::from_iterator(n, theta.iter().map(|ch| (ch[i + 1] - 2.0 * ch[i] + ch[i - 1]) / (dt * dt))),
        };
        out.push(IdentSample { t: rec.t0 + i as f64 * dt, theta: at(&theta), velocity: qd, accel: qdd, tau: at(&tau) });
        i += ratio;
    }
    Ok(out)
}
