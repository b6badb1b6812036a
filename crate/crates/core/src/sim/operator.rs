use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::JointVec;
use crate::error::{Error, Result};

/// Impedance of the operator's hand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandImpedance {
    /// [N*m/rad]
    pub stiffness: f64,
    /// [N*m*s/rad]
    pub damping: f64,
    /// [N*m]
    pub max_torque: f64,
}

impl Default for HandImpedance {
    fn default() -> Self {
        Self { stiffness: 40.0, damping: 4.0, max_torque: 3.0 }
    }
}

impl HandImpedance {
    /// Grip that keeps the joints the hand is not moving near their
    /// initial angles.
    pub fn brace() -> Self {
        Self { stiffness: 5.0, damping: 1.0, max_torque: 2.0 }
    }

    fn torque(&self, error: f64, rate_error: f64) -> f64 {
        (self.stiffness * error + self.damping * rate_error).clamp(-self.max_torque, self.max_torque)
    }
}

/// Scripted hand trajectory.  Joints are numbered from 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorProfile {
    /// No hand on the leader.
    None,
    /// Smoothed square wave of `±amplitude_deg` about the initial pose.
    Swing {
        joint: usize,
        amplitude_deg: f64,
        cycles: usize,
        period: f64,
        /// Duration of each raised-cosine edge [s].
        transition: f64,
        /// Time of the first edge [s].
        start: f64,
        #[serde(default)]
        hand: HandImpedance,
        /// Hold on the remaining joints; zero stiffness and damping lets them go.
        #[serde(default = "HandImpedance::brace")]
        brace: HandImpedance,
    },
    /// Piecewise-cubic path through offsets from the initial pose.
    Waypoints {
        joints: Vec<usize>,
        times: Vec<f64>,
        /// One row per waypoint, one value per listed joint.
        offsets_deg: Vec<Vec<f64>>,
        #[serde(default)]
        hand: HandImpedance,
        /// Hold on the remaining joints; zero stiffness and damping lets them go.
        #[serde(default = "HandImpedance::brace")]
        brace: HandImpedance,
    },
}

impl Default for OperatorProfile {
    /// Ten fast ±45 degree swings of the base joint.
    fn default() -> Self {
        OperatorProfile::Swing {
            joint: 1,
            amplitude_deg: 45.0,
            cycles: 10,
            period: 1.0,
            transition: 0.25,
            start: 0.5,
            hand: HandImpedance::default(),
            brace: HandImpedance::brace(),
        }
    }
}

/// Raised-cosine blend from 0 to 1 over `[0, width]` and its derivative.
fn blend(t: f64, width: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= width {
        (1.0, 0.0)
    } else {
        let x = PI * t / width;
        (0.5 * (1.0 - x.cos()), 0.5 * PI / width * x.sin())
    }
}

/// Cubic Hermite segment value and slope.
fn hermite(s: f64, h: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> (f64, f64) {
    let (s2, s3) = (s * s, s * s * s);
    let p = (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * h * m1;
    let dp = ((6.0 * s2 - 6.0 * s) * p0 + (3.0 * s2 - 4.0 * s + 1.0) * h * m0 + (-6.0 * s2 + 6.0 * s) * p1 + (3.0 * s2 - 2.0 * s) * h * m1) / h;
    (p, dp)
}

impl OperatorProfile {
    pub fn validate(&self, n_joints: usize) -> Result<()> {
        let check_joint = |j: usize| {
            if j == 0 || j > n_joints {
                Err(Error::config(format!("operator joint {j} outside 1..={n_joints}")))
            } else {
                Ok(())
            }
        };
        let check_hand = |h: &HandImpedance| {
            if [h.stiffness, h.damping, h.max_torque].iter().all(|v| v.is_finite() && *v >= 0.0) {
                Ok(())
            } else {
                Err(Error::config("hand impedance must be non-negative"))
            }
        };
        match self {
            OperatorProfile::None => Ok(()),
            OperatorProfile::Swing { joint, amplitude_deg, period, transition, start, hand, brace, .. } => {
                check_joint(*joint)?;
                check_hand(hand)?;
                check_hand(brace)?;
                if !(amplitude_deg.is_finite() && *period > 0.0 && *transition > 0.0 && *transition <= 0.5 * period && *start >= 0.0) {
                    return Err(Error::config("swing needs period > 0, 0 < transition <= period/2 and start >= 0"));
                }
                Ok(())
            }
            OperatorProfile::Waypoints { joints, times, offsets_deg, hand, brace } => {
                for j in joints {
                    check_joint(*j)?;
                }
                check_hand(hand)?;
                check_hand(brace)?;
                if times.len() < 2 || times.len() != offsets_deg.len() {
                    return Err(Error::config("waypoints need at least two times and one offset row per time"));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::config("waypoint times must increase"));
                }
                if offsets_deg.iter().any(|r| r.len() != joints.len()) {
                    return Err(Error::config("every waypoint row needs one offset per listed joint"));
                }
                Ok(())
            }
        }
    }

    /// Hand target offset from the initial pose and its rate, per joint.
    pub fn target(&self, t: f64, n: usize) -> (JointVec, JointVec) {
        let (mut q, mut qd) = (JointVec::zeros(n), JointVec::zeros(n));
        match self {
            OperatorProfile::None => {}
            OperatorProfile::Swing { joint, amplitude_deg, cycles, period, transition, start, .. } => {
                let a = amplitude_deg.to_radians();
                let half = 0.5 * period;
                // Edges: 0 -> +a, then alternate every half period, back to 0.
                let edges = 2 * cycles;
                let (mut level, mut rate) = (0.0, 0.0);
                for e in 0..=edges {
                    let t0 = start + e as f64 * half;
                    if t < t0 {
                        break;
                    }
                    let (from, to) = match e {
                        0 => (0.0, a),
                        e if e == edges => (if e % 2 == 1 { a } else { -a }, 0.0),
                        e if e % 2 == 1 => (a, -a),
                        _ => (-a, a),
                    };
                    let (b, db) = blend(t - t0, *transition);
                    level = from + (to - from) * b;
                    rate = (to - from) * db;
                }
                q[joint - 1] = level;
                qd[joint - 1] = rate;
            }
            OperatorProfile::Waypoints { joints, times, offsets_deg, .. } => {
                let last = times.len() - 1;
                let seg = times.partition_point(|x| *x <= t).clamp(1, last) - 1;
                for (c, j) in joints.iter().enumerate() {
                    let p = |i: usize| offsets_deg[i][c].to_radians();
                    let slope = |i: usize| {
                        if i == 0 || i == last {
                            0.0
                        } else {
                            (p(i + 1) - p(i - 1)) / (times[i + 1] - times[i - 1])
                        }
                    };
                    let (v, dv) = if t <= times[0] {
                        (p(0), 0.0)
                    } else if t >= times[last] {
                        (p(last), 0.0)
                    } else {
                        let h = times[seg + 1] - times[seg];
                        hermite((t - times[seg]) / h, h, p(seg), p(seg + 1), slope(seg), slope(seg + 1))
                    };
                    q[j - 1] = v;
                    qd[j - 1] = dv;
                }
            }
        }
        (q, qd)
    }

    fn hand(&self) -> Option<(&HandImpedance, &HandImpedance, Vec<usize>)> {
        match self {
            OperatorProfile::None => None,
            OperatorProfile::Swing { joint, hand, brace, .. } => Some((hand, brace, vec![*joint])),
            OperatorProfile::Waypoints { joints, hand, brace, .. } => Some((hand, brace, joints.clone())),
        }
    }

    /// Time after which the hand target is constant.
    pub fn end_time(&self) -> f64 {
        match self {
            OperatorProfile::None => 0.0,
            OperatorProfile::Swing { cycles, period, transition, start, .. } => start + *cycles as f64 * period + transition,
            OperatorProfile::Waypoints { times, .. } => *times.last().unwrap_or(&0.0),
        }
    }
}

/// Hand torque on the leader: a clamped spring-damper towards the target
/// on the driven joints and towards the initial pose on the others.
pub fn operator_step(profile: &OperatorProfile, origin: &JointVec, t: f64, theta: &JointVec, velocity: &JointVec) -> JointVec {
    let n = theta.len();
    let mut tau = JointVec::zeros(n);
    let Some((hand, brace, joints)) = profile.hand() else {
        return tau;
    };
    let (offset, rate) = profile.target(t, n);
    for i in 0..n {
        let grip = if joints.contains(&(i + 1)) { hand } else { brace };
        tau[i] = grip.torque(origin[i] + offset[i] - theta[i], rate[i] - velocity[i]);
    }
    tau
}
