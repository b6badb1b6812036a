use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::IdentSample;
use crate::dynamics::{ChainModel, JointVec};
use crate::error::{check_len, Error, Result};

/// Excitation run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcitationConfig {
    /// Length of the run [s].
    pub duration: f64,
    /// Rate of the recorded data [Hz].
    pub sample_hz: f64,
    /// Rate the data is decimated to before fitting [Hz].
    pub target_hz: f64,
    /// Sines per joint.
    pub harmonics: usize,
    pub min_hz: f64,
    pub max_hz: f64,
    /// Fraction of each joint's half range used by the swing.
    pub amplitude_fraction: f64,
    /// Torque noise standard deviation as a fraction of each joint's RMS
    /// torque.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self {
            duration: 60.0,
            sample_hz: 500.0,
            target_hz: 25.0,
            harmonics: 5,
            min_hz: 0.1,
            max_hz: 1.0,
            amplitude_fraction: 0.6,
            noise_fraction: 0.0,
            seed: 0,
        }
    }
}

impl ExcitationConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.duration > 0.0
            && self.sample_hz > 0.0
            && self.target_hz > 0.0
            && self.harmonics > 0
            && self.min_hz > 0.0
            && self.max_hz > self.min_hz
            && (0.0..=1.0).contains(&self.amplitude_fraction)
            && self.noise_fraction >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid excitation settings {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Harmonic {
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase: f64,
}

/// Sum of sines around a centre pose, one set per joint.
#[derive(Clone, Debug, PartialEq)]
pub struct Multisine {
    pub center: Vec<f64>,
    pub joints: Vec<Vec<Harmonic>>,
}

impl Multisine {
    /// Frequencies are spread over `[min_hz, max_hz]` by the golden-ratio
    /// sequence, so no two joints share a frequency or a simple ratio.
    /// Amplitudes fall as `1/f`, which gives every sine the same velocity.
    pub fn within(ranges: &[(f64, f64)], cfg: &ExcitationConfig) -> Result<Self> {
        cfg.validate()?;
        let golden = 0.618_033_988_749_895;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let k = cfg.harmonics;
        let mut center = Vec::with_capacity(ranges.len());
        let mut joints = Vec::with_capacity(ranges.len());
        for (j, &(lo, hi)) in ranges.iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::config(format!("joint {} range is empty", j + 1)));
            }
            center.push(0.5 * (lo + hi));
            let half = 0.5 * (hi - lo);
            let freqs: Vec<f64> = (0..k)
                .map(|h| {
                    let u = ((j * k + h + 1) as f64 * golden).fract();
                    cfg.min_hz + (cfg.max_hz - cfg.min_hz) * u
                })
                .collect();
            let inv_sum: f64 = freqs.iter().map(|f| 1.0 / f).sum();
            joints.push(
                freqs
                    .iter()
                    .map(|&f| Harmonic {
                        amplitude: cfg.amplitude_fraction * half / (f * inv_sum),
                        freq_hz: f,
                        phase: rng.random_range(0.0..TAU),
                    })
                    .collect(),
            );
        }
        Ok(Self { center, joints })
    }

    pub fn n_joints(&self) -> usize {
        self.center.len()
    }

    /// Position, velocity and acceleration at `t`.
    pub fn eval(&self, t: f64) -> (JointVec, JointVec, JointVec) {
        let n = self.n_joints();
        let (mut q, mut qd, mut qdd) = (JointVec::from_column_slice(&self.center), JointVec::zeros(n), JointVec::zeros(n));
        for (j, hs) in self.joints.iter().enumerate() {
            for h in hs {
                let w = TAU * h.freq_hz;
                let (s, c) = (w * t + h.phase).sin_cos();
                q[j] += h.amplitude * s;
                qd[j] += h.amplitude * w * c;
                qdd[j] -= h.amplitude * w * w * s;
            }
        }
        (q, qd, qdd)
    }
}

/// Exact samples of `excitation` through the model's inverse dynamics at
/// `cfg.sample_hz`, with Gaussian torque noise of `cfg.noise_fraction` times
/// each joint's RMS torque.
pub fn synthesize(model: &ChainModel, excitation: &Multisine, cfg: &ExcitationConfig) -> Result<Vec<IdentSample>> {
    cfg.validate()?;
    check_len("excitation joints", model.n_joints(), excitation.n_joints())?;
    let count = (cfg.duration * cfg.sample_hz).round() as usize + 1;
    let mut samples = Vec::with_capacity(count);
    for k in 0..count {
        let t = k as f64 / cfg.sample_hz;
        let (theta, velocity, accel) = excitation.eval(t);
        let tau = model.inverse_dynamics(&theta, &velocity, &accel)?;
        samples.push(IdentSample { t, theta, velocity, accel, tau });
    }
    add_torque_noise(&mut samples, cfg.noise_fraction, cfg.seed)?;
    Ok(samples)
}

/// Adds zero-mean Gaussian noise with per-joint standard deviation
/// `fraction * rms(tau_j)`.
pub fn add_torque_noise(samples: &mut [IdentSample], fraction: f64, seed: u64) -> Result<()> {
    if fraction == 0.0 || samples.is_empty() {
        return Ok(());
    }
    let n = samples[0].tau.len();
    let rms: Vec<f64> = (0..n)
        .map(|j| (samples.iter().map(|s| s.tau[j].powi(2)).sum::<f64>() / samples.len() as f64).sqrt())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let dists = rms
        .iter()
        .map(|r| Normal::new(0.0, fraction * r).map_err(|e| Error::config(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    for s in samples.iter_mut() {
        for (j, d) in dists.iter().enumerate() {
            s.tau[j] += d.sample(&mut rng);
        }
    }
    Ok(())
}
