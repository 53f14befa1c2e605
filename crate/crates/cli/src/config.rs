//! Batch configuration: one JSON document with a list of scenarios.
//!
//! Every scenario is parsed into its kind's typed parameter record and
//! validated before the runner starts any numerical work.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;
use crate::kinds::{self, Params};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBatch {
    #[serde(default)]
    output_dir: Option<PathBuf>,
    scenarios: Vec<RawScenario>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    kind: String,
    #[serde(default)]
    parameters: Value,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    criterion: Option<u8>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

/// One validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub kind: &'static str,
    pub params: Params,
    /// Absolute directory that receives this scenario's files.
    pub output_dir: PathBuf,
    /// Relative form of `output_dir`, as written to the manifest.
    pub rel_dir: String,
    /// Acceptance criterion this scenario reproduces, if any.
    pub criterion: Option<u8>,
    /// Per-check tolerance overrides by check name.
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct Batch {
    /// Directory that receives the scenario directories and the manifest.
    pub output_dir: PathBuf,
    pub scenarios: Vec<Scenario>,
}

impl Batch {
    /// Parses and validates a configuration file. Relative paths inside the
    /// document resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawBatch = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        let output_dir = base.join(raw.output_dir.unwrap_or_else(|| PathBuf::from("confsurf-out")));
        let mut names = BTreeSet::new();
        let mut dirs = BTreeSet::new();
        let mut scenarios = Vec::with_capacity(raw.scenarios.len());
        for s in raw.scenarios {
            let ctx = |msg: String| CliError::Config(format!("scenario '{}': {msg}", s.name));
            if s.name.is_empty() || s.name.contains(['/', '\\']) || s.name == "." || s.name == ".." {
                return Err(ctx("name must be a nonempty plain file name".into()));
            }
            if !names.insert(s.name.clone()) {
                return Err(ctx("duplicate name".into()));
            }
            let kind = kinds::KINDS
                .iter()
                .find(|k| k.name == s.kind)
                .ok_or_else(|| ctx(format!("unknown kind '{}' (see list-kinds)", s.kind)))?;
            let params = (kind.parse)(s.parameters, base).map_err(|e| ctx(e.to_string()))?;
            params.validate().map_err(|e| ctx(e.to_string()))?;
            for (check, tol) in &s.tolerances {
                if !kind.checks.contains(&check.as_str()) {
                    return Err(ctx(format!("tolerance override for unknown check '{check}'")));
                }
                if !(tol.is_finite() && *tol >= 0.0) {
                    return Err(ctx(format!("tolerance for '{check}' must be finite and >= 0")));
                }
            }
            let rel = s.output_dir.unwrap_or_else(|| PathBuf::from(&s.name));
            if rel.is_absolute() || rel.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
                return Err(ctx("output_dir must be a relative path inside the batch directory".into()));
            }
            let rel_dir = rel.to_string_lossy().replace('\\', "/");
            if !dirs.insert(rel_dir.clone()) {
                return Err(ctx(format!("output_dir '{rel_dir}' is shared with another scenario")));
            }
            scenarios.push(Scenario {
                name: s.name,
                kind: kind.name,
                params,
                output_dir: output_dir.join(&rel),
                rel_dir,
                criterion: s.criterion,
                tolerances: s.tolerances,
            });
        }
        Ok(Batch { output_dir, scenarios })
    }
}

/// Resolves a path from the config against the config's directory.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
