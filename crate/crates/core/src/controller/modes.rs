use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ControllerConfig, VelocitySource};
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Leader,
    Follower,
}

/// Control structures compared against each other.  Every mode runs the same
/// law; they differ only in which terms are scaled to zero and which model
/// pieces are simplified.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TeleopMode {
    /// Follower servos to the leader; the leader is only gravity and friction
    /// compensated.
    Unilateral,
    /// Both arms servo to each other's position and velocity.
    SymmetricPosition,
    /// Follower servos to the leader, the leader reflects the follower's
    /// torque.
    ForceFeedback,
    /// 4-channel with constant diagonal inertia.
    FourChFixedInertia,
    /// 4-channel without Coriolis/centrifugal compensation.
    FourChNoCoriolis,
    /// 4-channel with pseudo-differentiated velocity.
    FourChPseudoDiff,
    #[default]
    FourChProposed,
}

impl TeleopMode {
    pub const ALL: [TeleopMode; 7] = [
        TeleopMode::Unilateral,
        TeleopMode::SymmetricPosition,
        TeleopMode::ForceFeedback,
        TeleopMode::FourChFixedInertia,
        TeleopMode::FourChNoCoriolis,
        TeleopMode::FourChPseudoDiff,
        TeleopMode::FourChProposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TeleopMode::Unilateral => "unilateral",
            TeleopMode::SymmetricPosition => "symmetric-position",
            TeleopMode::ForceFeedback => "force-feedback",
            TeleopMode::FourChFixedInertia => "four-ch-fixed-inertia",
            TeleopMode::FourChNoCoriolis => "four-ch-no-coriolis",
            TeleopMode::FourChPseudoDiff => "four-ch-pseudo-diff",
            TeleopMode::FourChProposed => "four-ch-proposed",
        }
    }

    /// Short human-readable label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            TeleopMode::Unilateral => "Unilateral",
            TeleopMode::SymmetricPosition => "Symmetric position",
            TeleopMode::ForceFeedback => "Force feedback",
            TeleopMode::FourChFixedInertia => "4ch fixed inertia",
            TeleopMode::FourChNoCoriolis => "4ch no Coriolis",
            TeleopMode::FourChPseudoDiff => "4ch pseudo-diff",
            TeleopMode::FourChProposed => "4ch proposed",
        }
    }
}

impl fmt::Display for TeleopMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TeleopMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        TeleopMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = TeleopMode::ALL.iter().map(|m| m.name()).collect();
                Error::config(format!("unknown mode `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Effective configuration of one side under `mode`.  Disabled terms keep
/// their place in the arithmetic with a zero gain.
pub fn mode_gains(mode: TeleopMode, base: &ControllerConfig, side: Side) -> ControllerConfig {
    let mut cfg = base.clone();
    let (position, force, compensate) = match (mode, side) {
        (TeleopMode::Unilateral, Side::Leader) => (0.0, 0.0, false),
        (TeleopMode::Unilateral | TeleopMode::SymmetricPosition, _) => (1.0, 0.0, false),
        (TeleopMode::ForceFeedback, Side::Leader) => (0.0, 1.0, base.compensate_external),
        (TeleopMode::ForceFeedback, Side::Follower) => (1.0, 0.0, false),
        _ => (1.0, 1.0, base.compensate_external),
    };
    cfg.kp *= position;
    cfg.kd *= position;
    cfg.kf *= force;
    cfg.compensate_external = compensate;
    match mode {
        TeleopMode::FourChFixedInertia => cfg.use_fixed_inertia = true,
        TeleopMode::FourChNoCoriolis => cfg.compensate_coriolis = false,
        TeleopMode::FourChPseudoDiff => cfg.velocity_source = VelocitySource::PseudoDiff,
        _ => {}
    }
    cfg
}
