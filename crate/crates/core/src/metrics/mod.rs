//! Tracking-quality metrics of a teleoperation log.
//!
//! * angle MAE: mean over ticks and joints of `|q_l - q_f|` [deg]
//! * velocity MAE: the same on the true velocities [deg/s]
//! * torque MAE: mean of `|tau_hat_l + tau_hat_f|`, i.e. the leader torque
//!   compared with the sign-reversed follower torque [N*m]

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::controller::TeleopMode;
use crate::error::{Error, Result};
use crate::sim::{ArmRow, SessionStats, TelemetryLog};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Mae {
    pub angle_deg: f64,
    pub velocity_deg_s: f64,
    pub torque_nm: f64,
}

/// Observer errors of one arm over a log.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EstimateErrors {
    pub velocity_rms: f64,
    pub torque_rms: f64,
}

pub fn compute_mae(log: &TelemetryLog) -> Result<Mae> {
    if log.rows.is_empty() || log.n_joints == 0 {
        return Err(Error::Usage("cannot compute metrics of an empty log".into()));
    }
    let count = (log.rows.len() * log.n_joints) as f64;
    let (mut a, mut v, mut t) = (0.0, 0.0, 0.0);
    for r in &log.rows {
        a += (&r.leader.q - &r.follower.q).abs().sum();
        v += (&r.leader.qd - &r.follower.qd).abs().sum();
        t += (&r.leader.tau_exthat + &r.follower.tau_exthat).abs().sum();
    }
    Ok(Mae { angle_deg: (a / count).to_degrees(), velocity_deg_s: (v / count).to_degrees(), torque_nm: t / count })
}

pub fn estimate_errors(log: &TelemetryLog, arm: impl Fn(&crate::sim::Row) -> &ArmRow) -> Result<EstimateErrors> {
    if log.rows.is_empty() {
        return Err(Error::Usage("cannot compute metrics of an empty log".into()));
    }
    let count = (log.rows.len() * log.n_joints) as f64;
    let (mut v, mut t) = (0.0, 0.0);
    for r in &log.rows {
        let a = arm(r);
        v += (&a.qdhat - &a.qd).norm_squared();
        t += (&a.tau_exthat - &a.tau_ext).norm_squared();
    }
    Ok(EstimateErrors { velocity_rms: (v / count).sqrt(), torque_rms: (t / count).sqrt() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeMetrics {
    pub mode: TeleopMode,
    pub mae: Mae,
    pub leader: EstimateErrors,
    pub follower: EstimateErrors,
    pub saturation: [usize; 2],
}

impl ModeMetrics {
    pub fn from_log(mode: TeleopMode, log: &TelemetryLog, stats: Option<&SessionStats>) -> Result<Self> {
        let saturation = match stats {
            Some(s) => s.saturation_events,
            None => {
                let count = |arm: fn(&crate::sim::Row) -> &ArmRow| {
                    log.rows.iter().map(|r| arm(r).saturated.iter().filter(|s| **s).count()).sum()
                };
                [count(|r| &r.leader), count(|r| &r.follower)]
            }
        };
        Ok(Self {
            mode,
            mae: compute_mae(log)?,
            leader: estimate_errors(log, |r| &r.leader)?,
            follower: estimate_errors(log, |r| &r.follower)?,
            saturation,
        })
    }
}

/// One row per mode, in the order the sessions were added.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rows: Vec<ModeMetrics>,
}

impl MetricsReport {
    pub fn get(&self, mode: TeleopMode) -> Option<&ModeMetrics> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "mode,angle_mae_deg,velocity_mae_deg_s,torque_mae_nm,leader_velocity_rms,leader_torque_rms,\
             follower_velocity_rms,follower_torque_rms,leader_saturation,follower_saturation\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
                r.mode,
                r.mae.angle_deg,
                r.mae.velocity_deg_s,
                r.mae.torque_nm,
                r.leader.velocity_rms,
                r.leader.torque_rms,
                r.follower.velocity_rms,
                r.follower.torque_rms,
                r.saturation[0],
                r.saturation[1]
            );
        }
        out
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mean absolute error between leader and follower")?;
        writeln!(f, "(torque: |tau_hat_l + tau_hat_f|, leader sign reversed)")?;
        writeln!(f)?;
        writeln!(f, "{:<20} {:>10} {:>14} {:>11}", "mode", "angle deg", "velocity deg/s", "torque N*m")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<20} {:>10.4} {:>14.4} {:>11.4}",
                r.mode.label(),
                r.mae.angle_deg,
                r.mae.velocity_deg_s,
                r.mae.torque_nm
            )?;
        }
        writeln!(f)?;
        writeln!(f, "{:<20} {:>12} {:>12} {:>12} {:>12} {:>9}", "observer RMS", "l vel rad/s", "l tau N*m", "f vel rad/s", "f tau N*m", "sat l/f")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<20} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>4}/{:<4}",
                r.mode.label(),
                r.leader.velocity_rms,
                r.leader.torque_rms,
                r.follower.velocity_rms,
                r.follower.torque_rms,
                r.saturation[0],
                r.saturation[1]
            )?;
        }
        Ok(())
    }
}
