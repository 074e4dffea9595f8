//! Scenario reports.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// How a measured value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value ≤ tolerance`
    AtMost,
    /// `value ≥ tolerance`
    AtLeast,
    /// `value > tolerance`
    Above,
    /// `value` is finite; the tolerance is unused.
    Finite,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::Above => value > tolerance,
            Relation::Finite => value.is_finite(),
        };
        Self {
            name: name.into(),
            value,
            tolerance,
            relation,
            pass,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtMost, tolerance)
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, tolerance)
    }
}

/// Outcome of one scenario run. Pass/fail follows from the recorded checks
/// alone.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub measured: BTreeMap<String, Value>,
    pub runtime_s: Option<f64>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}
