//! Twin-arm 4-channel bilateral teleoperation: identified rigid-link
//! dynamics, a combined velocity and external-torque observer, the
//! variable-inertia bilateral control law with its comparison modes,
//! least-squares parameter identification and a deterministic 1 kHz
//! simulator.

pub mod controller;
pub mod dynamics;
pub mod error;
pub mod identify;
pub mod metrics;
pub mod observer;
pub mod presets;
pub mod sim;

pub use dynamics::{ChainModel, DhJoint, JointMat, JointVec, ParamVector};
pub use error::{Error, Result};
