//! Twin-arm teleoperation simulator.
//!
//! Both arms run the full observer and controller at 1 kHz.  The plant is
//! integrated with ten 0.1 ms semi-implicit Euler substeps per tick while
//! the motor torque is held.  The operator's hand acts on the leader and an
//! optional wall on the follower.  The lockstep session is single-threaded
//! and bit-reproducible; [`concurrent_session`] runs the same pipeline as
//! three periodic threads.

mod concurrent;
mod environment;
mod operator;
mod telemetry;

pub use concurrent::{concurrent_session, ConcurrentOptions, Mailbox, MailboxReader, Stamped};
pub use environment::{environment_step, JointStops, Wall, WallSide};
pub use operator::{operator_step, HandImpedance, OperatorProfile};
pub use telemetry::{ArmRow, Row, TelemetryLog};

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::{mode_gains, ArmController, ControlOutput, ControllerConfig, Side, TeleopMode};
use crate::dynamics::{ChainModel, JointVec};
use crate::error::{check_len, Error, Result};
use crate::observer::{quantize, ENCODER_RESOLUTION};
use crate::presets::CRANE_X7_HOME;

pub const CONTROL_PERIOD: f64 = 1e-3;
pub const SUBSTEPS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// [s]
    pub duration: f64,
    pub seed: u64,
    /// Round encoder readings to 12-bit counts.
    pub quantize_encoders: bool,
    /// Standard deviation of white encoder noise [rad].
    pub encoder_noise: f64,
    /// Pose both arms start from at rest [rad].
    pub initial_pose: Vec<f64>,
    pub mode: TeleopMode,
    pub controller: ControllerConfig,
    pub operator: OperatorProfile,
    pub environment: Option<Wall>,
    /// End stops on both arms; `None` leaves the joints unbounded.
    pub stops: Option<JointStops>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            duration: 12.0,
            seed: 0,
            quantize_encoders: false,
            encoder_noise: 0.0,
            initial_pose: CRANE_X7_HOME.to_vec(),
            mode: TeleopMode::FourChProposed,
            controller: ControllerConfig::default(),
            operator: OperatorProfile::default(),
            environment: None,
            stops: Some(JointStops::default()),
        }
    }
}

impl Scenario {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_owned(), message: e.to_string() })?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse { path: origin.clone(), message: e.to_string() })?;
        Self::parse(&text, &origin)
    }

    pub fn ticks(&self) -> usize {
        (self.duration / CONTROL_PERIOD).round() as usize
    }

    pub fn validate(&self, n_joints: usize) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config(format!("duration {} s must be positive", self.duration)));
        }
        if ((self.duration / CONTROL_PERIOD) - self.ticks() as f64).abs() > 1e-6 {
            return Err(Error::config("duration must be a whole number of milliseconds"));
        }
        if !(self.encoder_noise >= 0.0 && self.encoder_noise.is_finite()) {
            return Err(Error::config("encoder noise must be non-negative"));
        }

        check_len("initial pose", n_joints, self.initial_pose.len())?;
        if self.initial_pose.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("initial pose must be finite"));
        }
        if (self.controller.observer.dt - CONTROL_PERIOD).abs() > 1e-15 {
            return Err(Error::config("the simulator runs the controller at 1 ms"));
        }
        self.operator.validate(n_joints)?;
        if let Some(w) = &self.environment {
            w.validate(n_joints)?;
        }
        if let Some(st) = &self.stops {
            st.validate(n_joints)?;
        }
        self.controller.validate()
    }
}

/// Everything a session needs.  `plants` are integrated, `models` are what
/// the controllers believe.
#[derive(Clone, Debug)]
pub struct Session {
    pub plants: [Arc<ChainModel>; 2],
    pub models: [Arc<ChainModel>; 2],
    pub configs: [ControllerConfig; 2],
    pub scenario: Scenario,
}

impl Session {
    /// Perfect-model session with explicit per-arm configurations.
    pub fn new(
        model_l: Arc<ChainModel>,
        model_f: Arc<ChainModel>,
        cfg_l: ControllerConfig,
        cfg_f: ControllerConfig,
        scenario: Scenario,
    ) -> Result<Self> {
        if model_l.n_joints() != model_f.n_joints() {
            return Err(Error::config("leader and follower need the same number of joints"));
        }
        scenario.validate(model_l.n_joints())?;
        cfg_l.validate()?;
        cfg_f.validate()?;
        Ok(Self {
            plants: [model_l.clone(), model_f.clone()],
            models: [model_l, model_f],
            configs: [cfg_l, cfg_f],
            scenario,
        })
    }

    /// Both arms on `model`, gains from the scenario's controller section
    /// shaped by `mode`.
    pub fn for_mode(model: Arc<ChainModel>, scenario: &Scenario, mode: TeleopMode) -> Result<Self> {
        let base = &scenario.controller;
        Self::new(
            model.clone(),
            model,
            mode_gains(mode, base, Side::Leader),
            mode_gains(mode, base, Side::Follower),
            Scenario { mode, ..scenario.clone() },
        )
    }

    /// Same controllers, different simulated hardware.
    pub fn with_plants(mut self, plant_l: Arc<ChainModel>, plant_f: Arc<ChainModel>) -> Result<Self> {
        let n = self.models[0].n_joints();
        check_len("leader plant joints", n, plant_l.n_joints())?;
        check_len("follower plant joints", n, plant_f.n_joints())?;
        self.plants = [plant_l, plant_f];
        Ok(self)
    }

    fn controllers(&self) -> Result<[ArmController; 2]> {
        let q0 = JointVec::from_column_slice(&self.scenario.initial_pose);
        Ok([
            ArmController::new(self.models[0].clone(), self.configs[0].clone(), &q0)?,
            ArmController::new(self.models[1].clone(), self.configs[1].clone(), &q0)?,
        ])
    }
}

/// Counters collected alongside the log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SessionStats {
    pub ticks: usize,
    /// Joint-ticks where the torque limit was active, per arm.
    pub saturation_events: [usize; 2],
    /// Work done by the wall on the follower [J].
    pub wall_work: f64,
    /// Largest net work of a single contact episode [J].
    pub max_episode_work: f64,
    pub contact_episodes: usize,
    /// Control ticks that missed their deadline, per arm.
    pub missed_ticks: [usize; 2],
    /// Ticks on which the peer snapshot was more than five ticks old.
    pub stale_snapshots: [usize; 2],
}

#[derive(Clone, Debug)]
pub struct SessionOutput {
    pub log: TelemetryLog,
    pub stats: SessionStats,
}

/// Ground-truth state of both arms and their surroundings.
pub(crate) struct World {
    plants: [Arc<ChainModel>; 2],
    q: [JointVec; 2],
    qd: [JointVec; 2],
    origin: JointVec,
    operator: OperatorProfile,
    wall: Option<Wall>,
    stops: Option<JointStops>,
    quantize: bool,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    episode_work: Option<f64>,
    pub(crate) stats: SessionStats,
}

impl World {
    pub(crate) fn new(session: &Session) -> Result<Self> {
        let sc = &session.scenario;
        let origin = JointVec::from_column_slice(&sc.initial_pose);
        let n = origin.len();
        let noise = if sc.encoder_noise > 0.0 {
            Some(Normal::new(0.0, sc.encoder_noise).map_err(|e| Error::config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            plants: session.plants.clone(),
            q: [origin.clone(), origin.clone()],
            qd: [JointVec::zeros(n), JointVec::zeros(n)],
            origin,
            operator: sc.operator.clone(),
            wall: sc.environment,
            stops: sc.stops.clone(),
            quantize: sc.quantize_encoders,
            noise,
            rng: ChaCha8Rng::seed_from_u64(sc.seed),
            episode_work: None,
            stats: SessionStats::default(),
        })
    }

    pub(crate) fn encoders(&mut self) -> [JointVec; 2] {
        let mut read = |q: &JointVec| {
            let mut v = q.clone();
            if let Some(d) = &self.noise {
                for x in v.iter_mut() {
                    *x += d.sample(&mut self.rng);
                }
            }
            if self.quantize {
                v = quantize(&v, ENCODER_RESOLUTION);
            }
            v
        };
        [read(&self.q[0]), read(&self.q[1])]
    }

    fn stop_torque(&self, a: usize) -> JointVec {
        match &self.stops {
            Some(st) => st.torque(&self.q[a], &self.qd[a]),
            None => JointVec::zeros(self.q[a].len()),
        }
    }

    /// Operator on the leader, wall on the follower, end stops on both.
    pub(crate) fn external(&self, t: f64) -> [JointVec; 2] {
        let [hand, wall] = self.contacts(t);
        [hand + self.stop_torque(0), wall + self.stop_torque(1)]
    }

    fn contacts(&self, t: f64) -> [JointVec; 2] {
        [
            operator_step(&self.operator, &self.origin, t, &self.q[0], &self.qd[0]),
            environment_step(self.wall.as_ref(), &self.origin, &self.q[1], &self.qd[1]),
        ]
    }

    /// Integrates one control period from `t` with the motor torques held.
    pub(crate) fn advance(&mut self, t: f64, motor: [&JointVec; 2], tick: usize) -> Result<()> {
        let h = CONTROL_PERIOD / SUBSTEPS as f64;
        for s in 0..SUBSTEPS {
            let contact = self.contacts(t + s as f64 * h);
            let in_contact = contact[1].iter().any(|v| *v != 0.0);
            for a in 0..2 {
                let tau = motor[a] + &contact[a] + self.stop_torque(a);
                let (q, qd) = self.plants[a].integrate_step(&self.q[a], &self.qd[a], &tau, h)?;
                if q.iter().chain(qd.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { signal: format!("{} state", ["leader", "follower"][a]), tick });
                }
                if a == 1 {
                    let work = contact[1].dot(&(&q - &self.q[1]));
                    self.stats.wall_work += work;
                    if in_contact {
                        *self.episode_work.get_or_insert(0.0) += work;
                    }
                }
                self.q[a] = q;
                self.qd[a] = qd;
            }
            if !in_contact {
                self.close_episode();
            }
        }
        Ok(())
    }

    pub(crate) fn close_episode(&mut self) {
        if let Some(w) = self.episode_work.take() {
            self.stats.contact_episodes += 1;
            self.stats.max_episode_work = if self.stats.contact_episodes == 1 { w } else { self.stats.max_episode_work.max(w) };
        }
    }

    pub(crate) fn truth(&self, a: usize) -> (&JointVec, &JointVec) {
        (&self.q[a], &self.qd[a])
    }
}

pub(crate) fn arm_row(q: &JointVec, qd: &JointVec, tau_ext: &JointVec, qdhat: &JointVec, tau_exthat: &JointVec, out: &ControlOutput) -> ArmRow {
    ArmRow {
        q: q.clone(),
        qd: qd.clone(),
        qdhat: qdhat.clone(),
        tau_ref: out.tau_ref.clone(),
        tau_ext: tau_ext.clone(),
        tau_exthat: tau_exthat.clone(),
        tau_u: out.tau_u.clone(),
        saturated: out.saturated.clone(),
    }
}

/// Deterministic lockstep session.  Each tick: read encoders, update both
/// observers, exchange snapshots, run both control laws, log, then
/// integrate to the next tick.
pub fn run_session(session: &Session) -> Result<SessionOutput> {
    let n = session.models[0].n_joints();
    let mut ctl = session.controllers()?;
    let mut world = World::new(session)?;
    let ticks = session.scenario.ticks();
    let mut log = TelemetryLog::new(n, CONTROL_PERIOD);
    log.rows.reserve(ticks + 1);
    for k in 0..=ticks {
        let t = k as f64 * CONTROL_PERIOD;
        let enc = world.encoders();
        let sl = ctl[0].observe(&enc[0])?;
        let sf = ctl[1].observe(&enc[1])?;
        let (pl, pf) = (sl.snapshot(t), sf.snapshot(t));
        let ol = ctl[0].command(&sl, &pf)?;
        let of = ctl[1].command(&sf, &pl)?;
        let ext = world.external(t);
        let rows = [(&sl, &ol), (&sf, &of)].map(|(s, o)| (s, o));
        let arm = |a: usize| {
            let (q, qd) = world.truth(a);
            let (s, o) = rows[a];
            arm_row(q, qd, &ext[a], &s.velocity, &s.external_torque, o)
        };
        log.rows.push(Row { t, leader: arm(0), follower: arm(1) });
        for (a, o) in [&ol, &of].iter().enumerate() {
            world.stats.saturation_events[a] += o.saturated.iter().filter(|s| **s).count();
        }
        if k < ticks {
            world.advance(t, [&ol.tau_ref, &of.tau_ref], k)?;
        }
    }
    world.close_episode();
    world.stats.ticks = ticks + 1;
    Ok(SessionOutput { log, stats: world.stats })
}
