use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, Thread};
use std::time::{Duration, Instant};

use super::{arm_row, Row, Session, SessionOutput, TelemetryLog, World, CONTROL_PERIOD};
use crate::controller::{ArmController, ControlOutput, PeerSnapshot};
use crate::dynamics::JointVec;
use crate::error::{Error, Result};

/// A value tagged with the sequence number of its publication.
#[derive(Clone, Debug, PartialEq)]
pub struct Stamped<T> {
    pub seq: u64,
    pub value: T,
}

/// Single-slot latest-value exchange.  Publishing overwrites; readers keep
/// their last copy and fall back to it whenever the slot is busy, so a
/// reader never waits on a writer.
#[derive(Debug)]
pub struct Mailbox<T> {
    slot: Mutex<Option<Stamped<T>>>,
    seq: AtomicU64,
}

impl<T: Clone> Default for Mailbox<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Clone> Mailbox<T> {
    pub fn new() -> Self {
        Self { slot: Mutex::new(None), seq: AtomicU64::new(0) }
    }

    pub fn publish(&self, value: T) {
        let mut slot = self.slot.lock().unwrap_or_else(|p| p.into_inner());
        let seq = self.seq.load(Ordering::Relaxed) + 1;
        *slot = Some(Stamped { seq, value });
        self.seq.store(seq, Ordering::Release);
    }

    /// Number of publications so far.
    pub fn published(&self) -> u64 {
        self.seq.load(Ordering::Acquire)
    }

    pub fn reader(&self) -> MailboxReader<'_, T> {
        MailboxReader { mailbox: self, cached: None }
    }
}

pub struct MailboxReader<'a, T> {
    mailbox: &'a Mailbox<T>,
    cached: Option<Stamped<T>>,
}

impl<T: Clone> MailboxReader<'_, T> {
    /// Newest value that could be read without blocking.
    pub fn latest(&mut self) -> Option<&Stamped<T>> {
        let have = self.cached.as_ref().map_or(0, |c| c.seq);
        if self.mailbox.published() > have {
            if let Ok(slot) = self.mailbox.slot.try_lock() {
                if let Some(s) = slot.as_ref() {
                    if s.seq > have {
                        self.cached = Some(s.clone());
                    }
                }
            }
        }
        self.cached.as_ref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcurrentOptions {
    /// Wall-clock control period.
    pub period: Duration,
    /// Fraction of missed ticks above which the session fails.
    pub max_missed_fraction: f64,
}

impl Default for ConcurrentOptions {
    fn default() -> Self {
        Self { period: Duration::from_millis(1), max_missed_fraction: 0.01 }
    }
}

#[derive(Clone, Debug)]
struct SensorFrame {
    tick: usize,
    theta: JointVec,
    last: bool,
}

#[derive(Clone, Debug)]
struct CommandFrame {
    tick: usize,
    velocity: JointVec,
    tau_ext: JointVec,
    out: ControlOutput,
}

struct Shared {
    sensors: [Mailbox<SensorFrame>; 2],
    commands: [Mailbox<CommandFrame>; 2],
    peers: [Mailbox<(usize, PeerSnapshot)>; 2],
    stop: AtomicBool,
    fault: Mutex<Option<Error>>,
}

const POLL: Duration = Duration::from_micros(50);
const STARTUP: Duration = Duration::from_secs(1);

fn control_task(shared: &Shared, side: usize, mut ctl: ArmController, physics: Thread) -> usize {
    let mut sensors = shared.sensors[side].reader();
    let mut peer = shared.peers[1 - side].reader();
    let mut last_tick = None;
    let mut stale = 0;
    let fail = |e: Error| {
        *shared.fault.lock().unwrap_or_else(|p| p.into_inner()) = Some(e);
        shared.stop.store(true, Ordering::Release);
    };
    while !shared.stop.load(Ordering::Acquire) {
        let frame = match sensors.latest() {
            Some(f) if Some(f.value.tick) != last_tick => f.value.clone(),
            _ => {
                thread::park_timeout(POLL);
                continue;
            }
        };
        last_tick = Some(frame.tick);
        let t = frame.tick as f64 * CONTROL_PERIOD;
        let state = match ctl.observe(&frame.theta) {
            Ok(s) => s,
            Err(e) => return { fail(e); stale },
        };
        let own = state.snapshot(t);
        shared.peers[side].publish((frame.tick, own.clone()));
        let other = match peer.latest() {
            Some(p) => {
                if frame.tick > p.value.0 + 5 {
                    stale += 1;
                }
                p.value.1.clone()
            }
            None => own,
        };
        match ctl.command(&state, &other) {
            Ok(out) => shared.commands[side].publish(CommandFrame {
                tick: frame.tick,
                velocity: state.velocity,
                tau_ext: state.external_torque,
                out,
            }),
            Err(e) => return { fail(e); stale },
        }
        physics.unpark();
        if frame.last {
            break;
        }
    }
    stale
}

/// The lockstep pipeline split over three threads: one control task per
/// arm and a physics task that owns the world.  Snapshots, encoder frames
/// and commands travel through [`Mailbox`]es; a publisher unparks the
/// reader it feeds, so waiting never blocks on a lock.  A control task that has not
/// answered by the end of its period counts a missed tick and the physics
/// holds its previous command.
pub fn concurrent_session(session: &Session, opts: ConcurrentOptions) -> Result<SessionOutput> {
    let n = session.models[0].n_joints();
    let [cl, cf] = session.controllers()?;
    let mut world = World::new(session)?;
    let ticks = session.scenario.ticks();
    let shared = Arc::new(Shared {
        sensors: [Mailbox::new(), Mailbox::new()],
        commands: [Mailbox::new(), Mailbox::new()],
        peers: [Mailbox::new(), Mailbox::new()],
        stop: AtomicBool::new(false),
        fault: Mutex::new(None),
    });

    let handles: Vec<_> = [cl, cf]
        .into_iter()
        .enumerate()
        .map(|(side, ctl)| {
            let shared = shared.clone();
            let physics = thread::current();
            thread::Builder::new()
                .name(["leader-control", "follower-control"][side].into())
                .spawn(move || control_task(&shared, side, ctl, physics))
                .expect("spawn control thread")
        })
        .collect();

    let physics = (|| -> Result<(TelemetryLog, [usize; 2])> {
        let mut log = TelemetryLog::new(n, CONTROL_PERIOD);
        log.rows.reserve(ticks + 1);
        let mut readers = [shared.commands[0].reader(), shared.commands[1].reader()];
        let mut held: [Option<CommandFrame>; 2] = [None, None];
        let mut missed = [0usize; 2];
        // Tick 0 waits for both control threads to come up; the periodic
        // clock starts once it completes.
        let mut start = Instant::now();
        for k in 0..=ticks {
            let t = k as f64 * CONTROL_PERIOD;
            let release = if k == 0 { start } else { start + opts.period * (k - 1) as u32 };
            if let Some(wait) = release.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
            let enc = world.encoders();
            for a in 0..2 {
                shared.sensors[a].publish(SensorFrame { tick: k, theta: enc[a].clone(), last: k == ticks });
                handles[a].thread().unpark();
            }
            let deadline = release + if k == 0 { STARTUP } else { opts.period };
            let mut fresh = [false; 2];
            loop {
                for a in 0..2 {
                    if !fresh[a] {
                        if let Some(c) = readers[a].latest() {
                            if c.value.tick == k {
                                held[a] = Some(c.value.clone());
                                fresh[a] = true;
                            }
                        }
                    }
                }
                if fresh[0] && fresh[1] || shared.stop.load(Ordering::Acquire) || Instant::now() >= deadline {
                    break;
                }
                thread::park_timeout(POLL);
            }
            if k == 0 {
                start = Instant::now();
            }
            if let Some(e) = shared.fault.lock().unwrap_or_else(|p| p.into_inner()).take() {
                return Err(e);
            }
            for a in 0..2 {
                if !fresh[a] {
                    missed[a] += 1;
                }
            }
            let ext = world.external(t);
            let zeros = JointVec::zeros(n);
            let arm = |a: usize| match &held[a] {
                Some(c) => {
                    let (q, qd) = world.truth(a);
                    arm_row(q, qd, &ext[a], &c.velocity, &c.tau_ext, &c.out)
                }
                None => {
                    let (q, qd) = world.truth(a);
                    let mut r = super::ArmRow::zeros(n);
                    r.q = q.clone();
                    r.qd = qd.clone();
                    r.tau_ext = ext[a].clone();
                    r
                }
            };
            log.rows.push(Row { t, leader: arm(0), follower: arm(1) });
            for a in 0..2 {
                if let Some(c) = &held[a] {
                    world.stats.saturation_events[a] += c.out.saturated.iter().filter(|s| **s).count();
                }
            }
            if k < ticks {
                let tau = |a: usize| held[a].as_ref().map_or(&zeros, |c| &c.out.tau_ref);
                let (tl, tf) = (tau(0).clone(), tau(1).clone());
                world.advance(t, [&tl, &tf], k)?;
            }
        }
        Ok((log, missed))
    })();

    shared.stop.store(true, Ordering::Release);
    let stale: Vec<usize> = handles.into_iter().map(|h| h.join().expect("control thread panicked")).collect();
    let (log, missed) = physics?;
    world.close_episode();
    world.stats.ticks = ticks + 1;
    world.stats.missed_ticks = missed;
    world.stats.stale_snapshots = [stale[0], stale[1]];
    let worst = missed[0].max(missed[1]);
    if worst as f64 > opts.max_missed_fraction * (ticks + 1) as f64 {
        return Err(Error::DeadlineMiss { missed: worst, total: ticks + 1 });
    }
    Ok(SessionOutput { log, stats: world.stats })
}
