//! Time-series figures of a telemetry log.
//!
//! Each arm gets three groups: joint angles (with the other arm's angles for
//! reference), estimated against true velocity and estimated against true
//! external torque.  The leader torque is drawn sign-reversed so that it
//! overlays the follower's when the force channel is tracking.  Every group
//! is written as `<arm>_<group>.csv` and `<arm>_<group>.svg`.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use plotters::prelude::*;
use teleop_core::controller::Side;
use teleop_core::sim::{Row, TelemetryLog};

struct Series {
    label: &'static str,
    color: RGBColor,
    /// One value per row, per joint.
    values: Vec<Vec<f64>>,
}

struct Group {
    name: &'static str,
    unit: &'static str,
    series: Vec<Series>,
}

fn collect(log: &TelemetryLog, f: impl Fn(&Row) -> Vec<f64>) -> Vec<Vec<f64>> {
    log.rows.iter().map(f).collect()
}

fn degrees(v: &teleop_core::JointVec) -> Vec<f64> {
    v.iter().map(|x| x.to_degrees()).collect()
}

fn groups(log: &TelemetryLog, side: Side) -> Vec<Group> {
    let (other, peer) = match side {
        Side::Leader => (Side::Follower, "follower"),
        Side::Follower => (Side::Leader, "leader"),
    };
    let sign = if side == Side::Leader { -1.0 } else { 1.0 };
    vec![
        Group {
            name: "angle",
            unit: "deg",
            series: vec![
                Series { label: "angle", color: BLUE, values: collect(log, |r| degrees(&r.arm(side).q)) },
                Series { label: peer, color: RGBColor(150, 150, 150), values: collect(log, |r| degrees(&r.arm(other).q)) },
            ],
        },
        Group {
            name: "velocity",
            unit: "deg/s",
            series: vec![
                Series { label: "true", color: BLACK, values: collect(log, |r| degrees(&r.arm(side).qd)) },
                Series { label: "estimated", color: RED, values: collect(log, |r| degrees(&r.arm(side).qdhat)) },
            ],
        },
        Group {
            name: "torque",
            unit: "N*m",
            series: vec![
                Series {
                    label: "true",
                    color: BLACK,
                    values: collect(log, |r| r.arm(side).tau_ext.iter().map(|x| sign * x).collect()),
                },
                Series {
                    label: "estimated",
                    color: RED,
                    values: collect(log, |r| r.arm(side).tau_exthat.iter().map(|x| sign * x).collect()),
                },
            ],
        },
    ]
}

fn write_data(path: &Path, t: &[f64], g: &Group) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let n = g.series[0].values.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_owned()];
    for s in &g.series {
        header.extend((1..=n).map(|j| format!("{}_{j}", s.label)));
    }
    w.write_record(&header)?;
    for (k, t) in t.iter().enumerate() {
        let mut rec = vec![format!("{t:?}")];
        for s in &g.series {
            rec.extend(s.values[k].iter().map(|v| format!("{v:?}")));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn draw(path: &Path, title: &str, t: &[f64], g: &Group) -> Result<()> {
    let n = g.series[0].values.first().map_or(0, Vec::len);
    let rows = n.div_ceil(2);
    let root = SVGBackend::new(path, (1200, 40 + 220 * rows as u32)).into_drawing_area();
    let err = |e: DrawingAreaErrorKind<_>| anyhow!("cannot draw {}: {e:?}", path.display());
    root.fill(&WHITE).map_err(err)?;
    let root = root.titled(title, ("sans-serif", 22)).map_err(err)?;
    let (t0, t1) = (t[0], *t.last().unwrap());
    for (j, area) in root.split_evenly((rows, 2)).iter().enumerate().take(n) {
        let (mut lo, mut hi) = g
            .series
            .iter()
            .flat_map(|s| s.values.iter().map(move |v| v[j]))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let pad = 0.05 * (hi - lo).max(1e-6);
        lo -= pad;
        hi += pad;
        let mut chart = ChartBuilder::on(area)
            .caption(format!("joint {}", j + 1), ("sans-serif", 16))
            .margin(8)
            .x_label_area_size(30)
            .y_label_area_size(60)
            .build_cartesian_2d(t0..t1.max(t0 + 1e-3), lo..hi)
            .map_err(err)?;
        chart.configure_mesh().x_desc("t [s]").y_desc(g.unit).light_line_style(WHITE).draw().map_err(err)?;
        for s in &g.series {
            let color = s.color;
            chart
                .draw_series(LineSeries::new(t.iter().zip(&s.values).map(|(t, v)| (*t, v[j])), color))
                .map_err(err)?
                .label(s.label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        }
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(err)?;
    }
    root.present().map_err(err)?;
    Ok(())
}

pub fn plot(log: &Path, out: &Path) -> Result<()> {
    let log = TelemetryLog::load(log)?;
    if log.is_empty() {
        return Err(teleop_core::Error::Usage("log has no rows".into()).into());
    }
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let t: Vec<f64> = log.rows.iter().map(|r| r.t).collect();
    for (side, arm) in [(Side::Leader, "leader"), (Side::Follower, "follower")] {
        for g in groups(&log, side) {
            let stem = format!("{arm}_{}", g.name);
            write_data(&out.join(format!("{stem}.csv")), &t, &g)?;
            let title = match (side, g.name) {
                (Side::Leader, "torque") => format!("{arm} {} (sign reversed)", g.name),
                _ => format!("{arm} {}", g.name),
            };
            draw(&out.join(format!("{stem}.svg")), &title, &t, &g)?;
            println!("{}", out.join(format!("{stem}.svg")).display());
        }
    }
    Ok(())
}
