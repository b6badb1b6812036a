use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::thread;

use anyhow::{Context, Result};
use teleop_core::controller::TeleopMode;
use teleop_core::dynamics::{load_model, render_model, write_params_fragment};
use teleop_core::identify::{
    least_squares_identify, resample, stack_regressor, synthesize, ExcitationConfig, Multisine, Recording,
};
use teleop_core::metrics::{MetricsReport, ModeMetrics};
use teleop_core::presets::{crane_x7, CRANE_X7_JOINT_RANGE};
use teleop_core::sim::{concurrent_session, run_session, ConcurrentOptions, Scenario, Session, SessionOutput, TelemetryLog};
use teleop_core::ChainModel;

use crate::{IdentifyArgs, RunArgs};

fn model(path: Option<&Path>) -> Result<ChainModel> {
    match path {
        Some(p) => Ok(load_model(p)?),
        None => Ok(crane_x7()),
    }
}

fn scenario(run: &RunArgs) -> Result<Scenario> {
    let mut sc = match &run.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if run.quantize_encoders {
        sc.quantize_encoders = true;
    }
    if let Some(s) = run.seed {
        sc.seed = s;
    }
    if let Some(d) = run.duration {
        sc.duration = d;
    }
    Ok(sc)
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn execute(model: &Arc<ChainModel>, sc: &Scenario, mode: TeleopMode, concurrent: bool) -> Result<SessionOutput> {
    let session = Session::for_mode(model.clone(), sc, mode)?;
    let out = if concurrent { concurrent_session(&session, ConcurrentOptions::default()) } else { run_session(&session) };
    out.with_context(|| format!("{mode} session failed"))
}

pub fn simulate(run: &RunArgs, mode: Option<TeleopMode>) -> Result<()> {
    let model = Arc::new(model(run.model.as_deref())?);
    let sc = scenario(run)?;
    let mode = mode.unwrap_or(sc.mode);
    let out = execute(&model, &sc, mode, run.concurrent)?;
    out_dir(&run.out)?;
    let path = run.out.join("telemetry.csv");
    out.log.save(&path)?;

    let m = ModeMetrics::from_log(mode, &out.log, Some(&out.stats))?;
    let s = &out.stats;
    println!("mode            {mode}");
    println!("ticks           {}", s.ticks);
    println!("angle MAE       {:.4} deg", m.mae.angle_deg);
    println!("velocity MAE    {:.4} deg/s", m.mae.velocity_deg_s);
    println!("torque MAE      {:.4} N*m", m.mae.torque_nm);
    println!("saturation l/f  {}/{}", s.saturation_events[0], s.saturation_events[1]);
    if sc.environment.is_some() {
        println!("wall work       {:.4e} J over {} contacts", s.wall_work, s.contact_episodes);
    }
    if run.concurrent {
        println!("missed l/f      {}/{}", s.missed_ticks[0], s.missed_ticks[1]);
        println!("stale l/f       {}/{}", s.stale_snapshots[0], s.stale_snapshots[1]);
    }
    println!("log             {}", path.display());
    Ok(())
}

pub fn compare(run: &RunArgs, logs: bool) -> Result<()> {
    let model = Arc::new(model(run.model.as_deref())?);
    let sc = scenario(run)?;
    sc.validate(model.n_joints())?;
    // Real-time sessions would compete for the cores, so they run one by one.
    let outputs: Vec<Result<SessionOutput>> = if run.concurrent {
        TeleopMode::ALL.iter().map(|&m| execute(&model, &sc, m, true)).collect()
    } else {
        let (model, sc) = (&model, &sc);
        thread::scope(|s| {
            let workers: Vec<_> = TeleopMode::ALL.iter().map(|&m| s.spawn(move || execute(model, sc, m, false))).collect();
            workers.into_iter().map(|w| w.join().expect("session worker panicked")).collect()
        })
    };

    out_dir(&run.out)?;
    let mut report = MetricsReport::default();
    for (mode, out) in TeleopMode::ALL.into_iter().zip(outputs) {
        let out = out?;
        if logs {
            out.log.save(&run.out.join(format!("{mode}.csv")))?;
        }
        report.rows.push(ModeMetrics::from_log(mode, &out.log, Some(&out.stats))?);
    }
    let text = report.to_string();
    print!("{text}");
    write(&run.out.join("compare.txt"), &text)?;
    write(&run.out.join("compare.csv"), &report.to_csv())?;
    Ok(())
}

pub fn identify(args: &IdentifyArgs) -> Result<()> {
    let model = model(args.model.as_deref())?;
    let mut cfg = match &args.excitation {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            toml::from_str::<ExcitationConfig>(&text)
                .map_err(|e| teleop_core::Error::Parse { path: p.display().to_string(), message: e.to_string() })?
        }
        None => ExcitationConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    let recording = match &args.log {
        Some(p) => TelemetryLog::load(p)?.recording(args.arm.into())?,
        None => {
            let n = model.n_joints();
            let ranges = if n == CRANE_X7_JOINT_RANGE.len() { CRANE_X7_JOINT_RANGE.to_vec() } else { vec![(-1.0, 1.0); n] };
            let excitation = Multisine::within(&ranges, &cfg)?;
            Recording::from_samples(&synthesize(&model, &excitation, &cfg)?, false)?
        }
    };
    let samples = resample(&recording, cfg.target_hz)?;
    let (y, tau) = stack_regressor(&model, &samples)?;
    let id = least_squares_identify(model.params(), &y, &tau)?;
    let fitted = model.with_params(id.params.clone())?;

    out_dir(&args.out)?;
    write(&args.out.join("params.toml"), &write_params_fragment(&id.params))?;
    write(&args.out.join("model.toml"), &render_model(&fitted))?;
    write(&args.out.join("identify.txt"), &id.to_string())?;
    print!("{id}");
    Ok(())
}

pub fn metrics(log: &Path, mode: TeleopMode, out: Option<&Path>) -> Result<()> {
    let log = TelemetryLog::load(log)?;
    let report = MetricsReport { rows: vec![ModeMetrics::from_log(mode, &log, None)?] };
    print!("{report}");
    if let Some(dir) = out {
        out_dir(dir)?;
        write(&dir.join("metrics.csv"), &report.to_csv())?;
    }
    Ok(())
}
