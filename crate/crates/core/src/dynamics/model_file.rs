//! Robot model documents.
//!
//! ```toml
//! name = "crane-x7"
//! gravity = [0.0, 0.0, -9.81]
//!
//! [[joint]]
//! alpha = 0.0
//! d = 0.0
//! r = 0.0
//! torque_limit = 4.0
//!
//! [params]
//! MX2 = -0.0095784
//! FV1 = 0.0510939
//! ```
//!
//! Parameter order in the file does not matter; the loaded vector is kept in
//! canonical listing order.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use super::{ChainModel, DhJoint, JointVec, ParamName, ParamVector};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    #[serde(default = "default_name")]
    name: String,
    gravity: [f64; 3],
    #[serde(default)]
    condition_cap: Option<f64>,
    joint: Vec<JointDoc>,
    params: toml::Table,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    alpha: f64,
    d: f64,
    r: f64,
    #[serde(default)]
    theta_offset: f64,
    torque_limit: f64,
}

fn default_name() -> String {
    "unnamed".to_owned()
}

/// Parses a model document; `origin` labels diagnostics.
pub fn parse_model(text: &str, origin: &str) -> Result<ChainModel> {
    let doc: ModelDoc = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_owned(),
        message: e.to_string(),
    })?;
    let mut entries = Vec::with_capacity(doc.params.len());
    for (key, value) in &doc.params {
        let name: ParamName = key.parse().map_err(|e: Error| Error::Parse {
            path: origin.to_owned(),
            message: format!("[params] {e}"),
        })?;
        let v = value
            .as_float()
            .or_else(|| value.as_integer().map(|i| i as f64))
            .ok_or_else(|| Error::Parse {
                path: origin.to_owned(),
                message: format!("[params] `{key}` must be a number"),
            })?;
        entries.push((name, v));
    }
    let params = ParamVector::sorted(entries).map_err(|e| Error::Parse {
        path: origin.to_owned(),
        message: e.to_string(),
    })?;
    let joints = doc
        .joint
        .iter()
        .map(|j| DhJoint { alpha: j.alpha, d: j.d, r: j.r, theta_offset: j.theta_offset })
        .collect();
    let limit = JointVec::from_iterator(doc.joint.len(), doc.joint.iter().map(|j| j.torque_limit));
    let gravity = Vector3::from(doc.gravity);
    let model = ChainModel::new(doc.name, joints, params, gravity, limit).map_err(|e| {
        Error::Parse { path: origin.to_owned(), message: e.to_string() }
    })?;
    Ok(match doc.condition_cap {
        Some(cap) => model.with_condition_cap(cap),
        None => model,
    })
}

pub fn load_model(path: &Path) -> Result<ChainModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_model(&text, &path.display().to_string())
}

/// `[params]` table for a parameter vector, one `NAME = value` per line.
pub fn write_params_fragment(params: &ParamVector) -> String {
    let mut out = String::from("[params]\n");
    for (name, value) in params.iter() {
        let _ = writeln!(out, "{name} = {value:?}");
    }
    out
}

/// Full model document that [`parse_model`] reads back unchanged.
pub fn render_model(model: &ChainModel) -> String {
    let g = model.gravity();
    let mut out = String::new();
    let _ = writeln!(out, "name = {:?}", model.name());
    let _ = writeln!(out, "gravity = [{:?}, {:?}, {:?}]", g.x, g.y, g.z);
    let _ = writeln!(out, "condition_cap = {:?}", model.condition_cap());
    for (j, limit) in model.joints().iter().zip(model.torque_limit().iter()) {
        let _ = writeln!(out, "\n[[joint]]");
        let _ = writeln!(out, "alpha = {:?}", j.alpha);
        let _ = writeln!(out, "d = {:?}", j.d);
        let _ = writeln!(out, "r = {:?}", j.r);
        let _ = writeln!(out, "theta_offset = {:?}", j.theta_offset);
        let _ = writeln!(out, "torque_limit = {limit:?}");
    }
    out.push('\n');
    out.push_str(&write_params_fragment(model.params()));
    out
}
