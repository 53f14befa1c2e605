//! The manifest written last by the coordinator, and the report built from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::check::{Check, Relation};
use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub module: String,
    pub operation: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u8>,
    pub output_dir: String,
    pub status: Status,
    /// Set when the scenario stopped early; its files are what it produced
    /// before the failure.
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<FailureEntry>,
    pub elapsed_seconds: f64,
    pub files: Vec<FileEntry>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch when the batch finished.
    pub created_unix: u64,
    pub threads: usize,
    pub scenarios: Vec<ScenarioEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))
    }

    pub fn checks(&self) -> impl Iterator<Item = (&ScenarioEntry, &Check)> {
        self.scenarios.iter().flat_map(|s| s.checks.iter().map(move |c| (s, c)))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Pass/fail table of every check in the batch, failures named by
/// scenario, module and operation, then a per-criterion summary when the
/// batch carries criterion ids.
pub fn report(m: &Manifest) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:<22} {:<40} {:>12} {:>13}  result", "scenario", "check", "module::operation", "value", "tolerance");
    for (sc, c) in m.checks() {
        let rel = match c.relation {
            Relation::Below => "<",
            Relation::Above => ">",
        };
        let _ = writeln!(
            s,
            "{:<28} {:<22} {:<40} {:>12.3e} {} {:>11.3e}  {}",
            sc.name,
            c.name,
            format!("{}::{}", c.module, c.operation),
            c.value,
            rel,
            c.tolerance,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    let total = m.checks().count();
    let failed: Vec<_> = m.checks().filter(|(_, c)| !c.passed).collect();
    let broken: Vec<_> = m.scenarios.iter().filter(|s| s.status != Status::Ok).collect();
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{total} checks, {} failures, {} scenarios with numerical failures",
        failed.len(),
        broken.len()
    );
    for (sc, c) in &failed {
        let _ = writeln!(
            s,
            "FAIL {}/{} in {}::{}: {:e} vs tolerance {:e}{}",
            sc.name,
            c.name,
            c.module,
            c.operation,
            c.value,
            c.tolerance,
            if c.note.is_empty() { String::new() } else { format!(" ({})", c.note) }
        );
    }
    for sc in &broken {
        if let Some(e) = &sc.error {
            let _ = writeln!(
                s,
                "ERROR {} in {}::{}: {} (partial outputs: {})",
                sc.name, e.module, e.operation, e.message, sc.partial
            );
        }
    }
    let mut by_criterion: BTreeMap<u8, (usize, usize, bool)> = BTreeMap::new();
    for sc in &m.scenarios {
        for c in &sc.checks {
            if let Some(k) = c.criterion.or(sc.criterion) {
                let e = by_criterion.entry(k).or_default();
                e.0 += 1;
                e.1 += usize::from(!c.passed);
            }
        }
        if let (Some(k), Status::NumericalFailure) = (sc.criterion, sc.status) {
            by_criterion.entry(k).or_default().2 = true;
        }
    }
    if !by_criterion.is_empty() {
        let _ = writeln!(s);
        for (k, (n, f, err)) in by_criterion {
            let verdict = if f == 0 && !err { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "criterion {k:>2}: {verdict} ({n} checks, {f} failed{})", if err { ", scenario error" } else { "" });
        }
    }
    s
}
