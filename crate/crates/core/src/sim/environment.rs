use serde::{Deserialize, Serialize};

use crate::dynamics::JointVec;
use crate::error::{check_len, Error, Result};
use crate::presets::CRANE_X7_JOINT_RANGE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallSide {
    /// Blocks motion above the wall position.
    Upper,
    /// Blocks motion below the wall position.
    Lower,
}

/// One-sided spring-damper stop on a single follower joint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    /// Joint number, from 1.
    pub joint: usize,
    /// Wall position as an offset from the initial pose [deg].
    pub offset_deg: f64,
    /// [N*m/rad]
    pub stiffness: f64,
    /// [N*m*s/rad]
    pub damping: f64,
    pub side: WallSide,
}

impl Wall {
    pub fn validate(&self, n_joints: usize) -> Result<()> {
        if self.joint == 0 || self.joint > n_joints {
            return Err(Error::config(format!("wall joint {} outside 1..={n_joints}", self.joint)));
        }
        if !(self.stiffness >= 0.0 && self.damping >= 0.0 && self.offset_deg.is_finite()) {
            return Err(Error::config("wall stiffness and damping must be non-negative"));
        }
        Ok(())
    }
}

/// Contact torque on the follower.  Zero outside the wall; inside, a spring
/// and damper that can push the arm out but never pull it in.
pub fn environment_step(wall: Option<&Wall>, origin: &JointVec, theta: &JointVec, velocity: &JointVec) -> JointVec {
    let mut tau = JointVec::zeros(theta.len());
    let Some(w) = wall else {
        return tau;
    };
    let i = w.joint - 1;
    let pos = origin[i] + w.offset_deg.to_radians();
    let (depth, sign) = match w.side {
        WallSide::Upper => (theta[i] - pos, 1.0),
        WallSide::Lower => (pos - theta[i], -1.0),
    };
    if depth > 0.0 {
        let push = w.stiffness * depth + w.damping * sign * velocity[i];
        tau[i] = -sign * push.max(0.0);
    }
    tau
}

/// Mechanical end stops on every joint of both arms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointStops {
    /// `[lower, upper]` per joint [rad].
    pub range: Vec<[f64; 2]>,
    /// [N*m/rad]
    pub stiffness: f64,
    /// [N*m*s/rad]
    pub damping: f64,
}

impl Default for JointStops {
    fn default() -> Self {
        Self { range: CRANE_X7_JOINT_RANGE.iter().map(|(lo, hi)| [*lo, *hi]).collect(), stiffness: 500.0, damping: 5.0 }
    }
}

impl JointStops {
    pub fn validate(&self, n_joints: usize) -> Result<()> {
        check_len("joint stop range", n_joints, self.range.len())?;
        if self.range.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(Error::config("every joint stop needs lower < upper"));
        }
        if !(self.stiffness >= 0.0 && self.damping >= 0.0 && self.stiffness.is_finite() && self.damping.is_finite()) {
            return Err(Error::config("joint stop stiffness and damping must be non-negative"));
        }
        Ok(())
    }

    /// Same non-adhesive contact as [`environment_step`], at both ends of
    /// every joint.
    pub fn torque(&self, theta: &JointVec, velocity: &JointVec) -> JointVec {
        JointVec::from_iterator(
            theta.len(),
            self.range.iter().zip(theta.iter().zip(velocity.iter())).map(|([lo, hi], (q, v))| {
                if *q > *hi {
                    -(self.stiffness * (q - hi) + self.damping * v).max(0.0)
                } else if *q < *lo {
                    (self.stiffness * (lo - q) - self.damping * v).max(0.0)
                } else {
                    0.0
                }
            }),
        )
    }
}
