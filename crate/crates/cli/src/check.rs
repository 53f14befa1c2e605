//! Law checks and the per-scenario output sink.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Passes when `value < tolerance`.
    Below,
    /// Passes when `value > tolerance`.
    Above,
}

/// One measured quantity compared against a tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub module: String,
    pub operation: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u8>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// Collects files and checks while a scenario runs. Files stay in memory
/// until the coordinator writes them, so a failing scenario still leaves
/// what it produced before the failure.
#[derive(Debug, Default)]
pub struct Out {
    pub files: Vec<(String, Vec<u8>)>,
    pub checks: Vec<Check>,
    /// Module and operation currently running, used to label failures.
    pub stage: (&'static str, &'static str),
    overrides: BTreeMap<String, f64>,
    criterion: Option<u8>,
}

impl Out {
    pub fn new(overrides: BTreeMap<String, f64>, criterion: Option<u8>) -> Self {
        Self {
            overrides,
            criterion,
            stage: ("cli", "run"),
            ..Default::default()
        }
    }

    pub fn stage(&mut self, module: &'static str, operation: &'static str) {
        self.stage = (module, operation);
    }

    pub fn file(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("output serializes");
        s.push('\n');
        self.file(name, s);
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64, relation: Relation, note: &str) {
        let tolerance = self.overrides.get(name).copied().unwrap_or(tolerance);
        let passed = match relation {
            Relation::Below => value < tolerance,
            Relation::Above => value > tolerance,
        };
        let (module, operation) = self.stage;
        self.checks.push(Check {
            name: name.into(),
            module: module.into(),
            operation: operation.into(),
            value,
            tolerance,
            relation,
            passed,
            criterion: self.criterion,
            note: note.into(),
        });
    }

    /// Records `value < tolerance` under the current stage.
    pub fn below(&mut self, name: &str, value: f64, tolerance: f64, note: &str) {
        self.push(name, value, tolerance, Relation::Below, note);
    }

    /// Records `value > tolerance` under the current stage.
    pub fn above(&mut self, name: &str, value: f64, tolerance: f64, note: &str) {
        self.push(name, value, tolerance, Relation::Above, note);
    }
}

/// Shortest round-trip scientific notation, the format of every CSV cell.
pub fn sci(x: f64) -> String {
    format!("{x:e}")
}

/// Joins a row of numbers with commas and a trailing newline.
pub fn row(values: &[f64]) -> String {
    let mut s = values.iter().map(|v| sci(*v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}
