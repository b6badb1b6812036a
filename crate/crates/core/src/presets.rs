//! Built-in models.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

use crate::dynamics::{ChainModel, DhJoint, JointVec, ParamKind, ParamName, ParamVector};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Identified base parameters of the 7-DOF arm plus a lumped gripper
/// inertia for joint 8, in canonical order.
pub const CRANE_X7_PARAMS: [(&str, f64); 38] = [
    ("MX2", -0.0095784),
    ("MYR2", -0.2140494),
    ("MX3", 0.0164795),
    ("MYR3", -0.0015841),
    ("MX4", 0.0112601),
    ("MYR4", -0.1269891),
    ("MX5", 0.0011854),
    ("MYR5", 0.0006837),
    ("MX6", -0.0049209),
    ("MYR6", -0.0051238),
    ("MX7", 0.0003040),
    ("MZ7", 0.0002715),
    ("ZZR1", 0.0040049),
    ("XXR2", 0.0447190),
    ("ZZR2", 0.0695762),
    ("XXR3", 0.0018078),
    ("ZZR3", 0.0010000),
    ("XXR4", 0.0204158),
    ("ZZR4", 0.0160292),
    ("XXR5", -0.0006468),
    ("ZZR5", 0.0001000),
    ("XXR6", 0.0008617),
    ("ZZR6", 0.0011530),
    ("XXR7", -0.0007504),
    ("ZZ7", 0.0001000),
    ("IA3", 0.0056659),
    ("IA4", 0.0159844),
    ("IA5", 0.0044899),
    ("IA6", 0.0054869),
    ("IA7", 0.0042852),
    ("IA8", 0.006891),
    ("FV1", 0.0510939),
    ("FV2", 0.0888340),
    ("FV3", 0.0214482),
    ("FV4", 0.0761949),
    ("FV5", 0.0290511),
    ("FV6", 0.0400000),
    ("FV7", 0.0299360),
];

/// Resting pose used by the default scenarios: upper arm raised, elbow and
/// wrist bent [rad].
pub const CRANE_X7_HOME: [f64; 8] = [0.0, -0.5, 0.0, -1.6, 0.0, -0.8, 0.0, 0.3];

/// Diagonal inertia used by the fixed-inertia comparison mode [kg m^2].
pub const CRANE_X7_FIXED_INERTIA: [f64; 8] =
    [0.012258, 0.112990, 0.012028, 0.040000, 0.005676, 0.006600, 0.006281, 0.006891];

/// Reachable joint range [rad].  The elbow bends one way only; the
/// identified inertia stays positive definite inside this box but not on the
/// whole torus.
pub const CRANE_X7_JOINT_RANGE: [(f64, f64); 8] = [
    (-2.97, 2.97),
    (-1.57, 1.57),
    (-2.97, 2.97),
    (-2.77, 0.0),
    (-2.97, 2.97),
    (-2.09, 2.09),
    (-2.97, 2.97),
    (-0.1, 1.0),
];

/// Seven-axis arm with an eight-joint gripper axis: shoulder yaw, shoulder
/// pitch, upper-arm roll, elbow pitch, forearm roll, wrist pitch, wrist roll,
/// gripper.  Upper arm and forearm are 0.25 m.  Joint 8 only carries rotor
/// inertia and is dynamically decoupled from the arm.
pub fn crane_x7() -> ChainModel {
    let joints = vec![
        DhJoint::new(0.0, 0.0, 0.0),
        DhJoint::new(-FRAC_PI_2, 0.0, 0.0),
        DhJoint::new(FRAC_PI_2, 0.0, 0.25),
        DhJoint::new(-FRAC_PI_2, 0.0, 0.0),
        DhJoint::new(FRAC_PI_2, 0.0, 0.25),
        DhJoint::new(-FRAC_PI_2, 0.0, 0.0),
        DhJoint::new(FRAC_PI_2, 0.0, 0.0),
        DhJoint::new(-FRAC_PI_2, 0.0, 0.05),
    ];
    let params = ParamVector::parse(&CRANE_X7_PARAMS).expect("preset parameters are valid");
    let limit = JointVec::from_vec(vec![4.0, 8.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0]);
    ChainModel::new(
        "crane-x7",
        joints,
        params,
        Vector3::new(0.0, 0.0, -STANDARD_GRAVITY),
        limit,
    )
    .expect("preset model is valid")
}

/// Point mass `mass` on a massless rod of `length`, hanging from a
/// horizontal axis.  `q = 0` hangs straight down, `q = pi/2` is horizontal.
pub fn pendulum(mass: f64, length: f64, rotor_inertia: f64, friction: f64) -> ChainModel {
    let ml = mass * length;
    let params = ParamVector::new(vec![
        (ParamName::new(ParamKind::Xx, 1), ml * length),
        (ParamName::new(ParamKind::Zz, 1), ml * length),
        (ParamName::new(ParamKind::My, 1), -ml),
        (ParamName::new(ParamKind::M, 1), mass),
        (ParamName::new(ParamKind::Ia, 1), rotor_inertia),
        (ParamName::new(ParamKind::Fv, 1), friction),
    ])
    .expect("valid pendulum parameters");
    ChainModel::new(
        "pendulum",
        vec![DhJoint::new(FRAC_PI_2, 0.0, 0.0)],
        params,
        Vector3::new(0.0, 0.0, -STANDARD_GRAVITY),
        JointVec::from_element(1, 1e3),
    )
    .expect("valid pendulum")
}

/// Two links in the horizontal plane (gravity has no effect on either
/// joint).  Link `i` has length `l[i]`, mass `m[i]` with its centre at
/// `lc[i]` along the link and central inertia `izz[i]` about the joint axis.
pub fn planar_two_link(l: [f64; 2], lc: [f64; 2], m: [f64; 2], izz: [f64; 2]) -> ChainModel {
    let mut entries = Vec::new();
    for i in 0..2 {
        let j = i + 1;
        let about_origin = izz[i] + m[i] * lc[i] * lc[i];
        entries.push((ParamName::new(ParamKind::Xx, j), izz[i] / 2.0));
        entries.push((ParamName::new(ParamKind::Yy, j), izz[i] / 2.0 + m[i] * lc[i] * lc[i]));
        entries.push((ParamName::new(ParamKind::Zz, j), about_origin));
        entries.push((ParamName::new(ParamKind::Mx, j), m[i] * lc[i]));
        entries.push((ParamName::new(ParamKind::M, j), m[i]));
    }
    ChainModel::new(
        "planar-2",
        vec![DhJoint::new(0.0, 0.0, 0.0), DhJoint::new(0.0, l[0], 0.0)],
        ParamVector::new(entries).expect("valid planar parameters"),
        Vector3::new(0.0, 0.0, -STANDARD_GRAVITY),
        JointVec::from_element(2, 1e3),
    )
    .expect("valid planar arm")
}

/// Single rotary joint about a vertical axis with pure rotor inertia and
/// optional friction; no gravity load.  The simplest plant for observer and
/// controller checks.
pub fn rotor(inertia: f64, friction: f64) -> ChainModel {
    let params = ParamVector::new(vec![
        (ParamName::new(ParamKind::Ia, 1), inertia),
        (ParamName::new(ParamKind::Fv, 1), friction),
    ])
    .expect("valid rotor parameters");
    ChainModel::new(
        "rotor",
        vec![DhJoint::new(0.0, 0.0, 0.0)],
        params,
        Vector3::new(0.0, 0.0, -STANDARD_GRAVITY),
        JointVec::from_element(1, 1e3),
    )
    .expect("valid rotor")
}
