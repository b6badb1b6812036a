//! Named dynamic parameters.
//!
//! Names follow the usual base-parameter notation: a kind prefix
//! (`XX`, `XY`, `XZ`, `YY`, `YZ`, `ZZ`, `MX`, `MY`, `MZ`, `M`, `IA`, `FV`),
//! an optional `R` marking a regrouped parameter, and the 1-based joint
//! index, e.g. `MYR2`, `ZZ7`, `FV1`.  Inertia terms are expressed about the
//! link frame origin, first moments in the link frame.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKind {
    Xx,
    Xy,
    Xz,
    Yy,
    Yz,
    Zz,
    Mx,
    My,
    Mz,
    M,
    /// Rotor inertia reflected to the joint, additive on the diagonal.
    Ia,
    /// Viscous friction coefficient.
    Fv,
}

impl ParamKind {
    const ALL: [(ParamKind, &'static str); 12] = [
        (ParamKind::Xx, "XX"),
        (ParamKind::Xy, "XY"),
        (ParamKind::Xz, "XZ"),
        (ParamKind::Yy, "YY"),
        (ParamKind::Yz, "YZ"),
        (ParamKind::Zz, "ZZ"),
        (ParamKind::Mx, "MX"),
        (ParamKind::My, "MY"),
        (ParamKind::Mz, "MZ"),
        (ParamKind::M, "M"),
        (ParamKind::Ia, "IA"),
        (ParamKind::Fv, "FV"),
    ];

    pub fn prefix(self) -> &'static str {
        Self::ALL.iter().find(|(k, _)| *k == self).map(|(_, p)| *p).unwrap()
    }

    /// Listing group: first moments and mass, link inertia, rotor inertia,
    /// friction.
    fn group(self) -> u8 {
        match self {
            ParamKind::Mx | ParamKind::My | ParamKind::Mz | ParamKind::M => 0,
            ParamKind::Ia => 2,
            ParamKind::Fv => 3,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamName {
    pub kind: ParamKind,
    /// 1-based joint/link index.
    pub joint: usize,
    pub regrouped: bool,
}

impl ParamName {
    pub fn new(kind: ParamKind, joint: usize) -> Self {
        Self { kind, joint, regrouped: false }
    }

    pub fn regrouped(kind: ParamKind, joint: usize) -> Self {
        Self { kind, joint, regrouped: true }
    }

    fn sort_key(&self) -> (u8, usize, ParamKind) {
        (self.kind.group(), self.joint, self.kind)
    }
}

impl Ord for ParamName {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then(self.regrouped.cmp(&other.regrouped))
    }
}

impl PartialOrd for ParamName {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = if self.regrouped { "R" } else { "" };
        write!(f, "{}{}{}", self.kind.prefix(), r, self.joint)
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("unrecognised parameter name `{s}`"));
        let digits_at = s.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let (head, num) = s.split_at(digits_at);
        let joint: usize = num.parse().map_err(|_| bad())?;
        if joint == 0 {
            return Err(bad());
        }
        // "MR3" style regrouped mass is the only case where the trailing R is
        // not ambiguous with a kind prefix, so try the exact prefix first.
        for (kind, prefix) in ParamKind::ALL {
            if head == prefix {
                return Ok(ParamName::new(kind, joint));
            }
        }
        if let Some(stripped) = head.strip_suffix('R') {
            for (kind, prefix) in ParamKind::ALL {
                if stripped == prefix {
                    return Ok(ParamName::regrouped(kind, joint));
                }
            }
        }
        Err(bad())
    }
}

/// Ordered list of named parameters with their values.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    names: Vec<ParamName>,
    values: DVector<f64>,
}

impl ParamVector {
    /// Builds a parameter vector, rejecting duplicate slots.  Entries keep
    /// the given order.
    pub fn new(entries: Vec<(ParamName, f64)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (name, value) in &entries {
            if !seen.insert((name.kind, name.joint)) {
                return Err(Error::config(format!("parameter slot of `{name}` given twice")));
            }
            if !value.is_finite() {
                return Err(Error::config(format!("parameter `{name}` is not finite")));
            }
        }
        let values = DVector::from_iterator(entries.len(), entries.iter().map(|(_, v)| *v));
        Ok(Self { names: entries.into_iter().map(|(n, _)| n).collect(), values })
    }

    /// Same as [`ParamVector::new`] but sorted into the canonical listing
    /// order (first moments, inertias, rotor inertias, frictions).
    pub fn sorted(mut entries: Vec<(ParamName, f64)>) -> Result<Self> {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Self::new(entries)
    }

    pub fn parse(entries: &[(&str, f64)]) -> Result<Self> {
        let parsed = entries
            .iter()
            .map(|(n, v)| Ok((n.parse::<ParamName>()?, *v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(parsed)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[ParamName] {
        &self.names
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let target: ParamName = name.parse().ok()?;
        self.names
            .iter()
            .position(|n| *n == target)
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamName, f64)> + '_ {
        self.names.iter().copied().zip(self.values.iter().copied())
    }

    /// Same names, new values.
    pub fn with_values(&self, values: DVector<f64>) -> Result<Self> {
        crate::error::check_len("parameter values", self.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("parameter values must be finite"));
        }
        Ok(Self { names: self.names.clone(), values })
    }
}
