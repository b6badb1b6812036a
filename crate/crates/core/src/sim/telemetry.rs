use std::io::{Read, Write};
use std::path::Path;

use crate::controller::Side;
use crate::dynamics::JointVec;
use crate::error::{Error, Result};
use crate::identify::Recording;

/// One arm's signals at one tick.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmRow {
    pub q: JointVec,
    /// True velocity.
    pub qd: JointVec,
    /// Velocity the controller acted on.
    pub qdhat: JointVec,
    pub tau_ref: JointVec,
    /// True external torque (operator or environment).
    pub tau_ext: JointVec,
    pub tau_exthat: JointVec,
    pub tau_u: JointVec,
    pub saturated: Vec<bool>,
}

impl ArmRow {
    pub fn zeros(n: usize) -> Self {
        let z = JointVec::zeros(n);
        Self {
            q: z.clone(),
            qd: z.clone(),
            qdhat: z.clone(),
            tau_ref: z.clone(),
            tau_ext: z.clone(),
            tau_exthat: z.clone(),
            tau_u: z,
            saturated: vec![false; n],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub t: f64,
    pub leader: ArmRow,
    pub follower: ArmRow,
}

impl Row {
    pub fn arm(&self, side: Side) -> &ArmRow {
        match side {
            Side::Leader => &self.leader,
            Side::Follower => &self.follower,
        }
    }
}

/// Per-tick record of a session at a fixed 1 ms spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct TelemetryLog {
    pub n_joints: usize,
    pub dt: f64,
    pub rows: Vec<Row>,
}

const GROUPS: [&str; 6] = ["q", "qd", "qdhat", "tau_ref", "tau_ext", "tau_exthat"];
const EXTRA: [&str; 2] = ["tau_u", "sat"];

fn vectors(a: &ArmRow) -> [&JointVec; 7] {
    [&a.q, &a.qd, &a.qdhat, &a.tau_ref, &a.tau_ext, &a.tau_exthat, &a.tau_u]
}

impl TelemetryLog {
    pub fn new(n_joints: usize, dt: f64) -> Self {
        Self { n_joints, dt, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column names in file order.
    pub fn header(n: usize) -> Vec<String> {
        let mut h = vec!["t".to_owned()];
        for arm in ["l", "f"] {
            for g in GROUPS {
                h.extend((1..=n).map(|i| format!("{arm}_{g}{i}")));
            }
        }
        for arm in ["l", "f"] {
            for g in EXTRA {
                h.extend((1..=n).map(|i| format!("{arm}_{g}{i}")));
            }
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::header(self.n_joints))?;
        let mut rec: Vec<String> = Vec::new();
        for row in &self.rows {
            rec.clear();
            rec.push(format!("{:?}", row.t));
            for arm in [&row.leader, &row.follower] {
                for v in &vectors(arm)[..6] {
                    rec.extend(v.iter().map(|x| format!("{x:?}")));
                }
            }
            for arm in [&row.leader, &row.follower] {
                rec.extend(arm.tau_u.iter().map(|x| format!("{x:?}")));
                rec.extend(arm.saturated.iter().map(|s| if *s { "1" } else { "0" }.to_owned()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads a log written by [`TelemetryLog::write_csv`].  The extension
    /// columns are optional.
    pub fn read_csv<R: Read>(input: R, origin: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse { path: origin.to_owned(), message };
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        let n = header.iter().filter(|h| h.starts_with("l_q") && h[3..].parse::<usize>().is_ok()).count();
        if n == 0 {
            return Err(parse_err("header has no l_q columns".into()));
        }
        let full = Self::header(n);
        let base = 1 + 12 * n;
        let has_extra = header.len() == full.len();
        if header[..] != full[..base] && header[..] != full[..] {
            let bad = header.iter().zip(&full).position(|(a, b)| a != b).unwrap_or(header.len().min(full.len()));
            return Err(parse_err(format!(
                "column {} is `{}`, expected `{}`",
                bad + 1,
                header.get(bad).map(String::as_str).unwrap_or("<missing>"),
                full.get(bad).map(String::as_str).unwrap_or("<end>")
            )));
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                        parse_err(format!("line {}, column `{}`: `{s}` is not a finite number", line + 2, header[c]))
                    })
                })
                .collect::<Result<_>>()?;
            let vec_at = |k: usize| JointVec::from_column_slice(&vals[k..k + n]);
            let arm = |a: usize| {
                let o = 1 + a * 6 * n;
                let mut row = ArmRow {
                    q: vec_at(o),
                    qd: vec_at(o + n),
                    qdhat: vec_at(o + 2 * n),
                    tau_ref: vec_at(o + 3 * n),
                    tau_ext: vec_at(o + 4 * n),
                    tau_exthat: vec_at(o + 5 * n),
                    tau_u: JointVec::zeros(n),
                    saturated: vec![false; n],
                };
                if has_extra {
                    let e = base + a * 2 * n;
                    row.tau_u = vec_at(e);
                    row.saturated = vals[e + n..e + 2 * n].iter().map(|v| *v != 0.0).collect();
                }
                row
            };
            rows.push(Row { t: vals[0], leader: arm(0), follower: arm(1) });
        }
        if rows.is_empty() {
            return Err(parse_err("log has no rows".into()));
        }
        let dt = if rows.len() > 1 { rows[1].t - rows[0].t } else { 1e-3 };
        if let Some(k) = rows.windows(2).position(|w| ((w[1].t - w[0].t) - dt).abs() > 1e-6 * dt.abs().max(1e-9)) {
            return Err(parse_err(format!("row {} breaks the uniform time grid", k + 3)));
        }
        Ok(Self { n_joints: n, dt, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::read_csv(std::io::BufReader::new(file), &path.display().to_string())
    }

    /// One arm's angles and joint torques (motor plus external) for
    /// identification.
    pub fn recording(&self, side: Side) -> Result<Recording> {
        if self.rows.len() < 2 {
            return Err(Error::Usage("log is too short to identify from".into()));
        }
        Ok(Recording {
            t0: self.rows[0].t,
            rate_hz: 1.0 / self.dt,
            theta: self.rows.iter().map(|r| r.arm(side).q.clone()).collect(),
            velocity: None,
            accel: None,
            tau: self.rows.iter().map(|r| &r.arm(side).tau_ref + &r.arm(side).tau_ext).collect(),
        })
    }
}
