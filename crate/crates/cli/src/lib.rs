//! Batch runner for the confsurf laboratory.
//!
//! A batch is one JSON document listing named scenarios. Each scenario is
//! validated up front, run (possibly in parallel), and writes its files into
//! its own directory; the coordinator writes `manifest.json` last.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub mod check;
pub mod config;
pub mod error;
pub mod kinds;
pub mod manifest;

pub use config::{Batch, Scenario};
pub use error::CliError;
pub use manifest::{report, Manifest};

use check::Out;
use manifest::{FailureEntry, FileEntry, ScenarioEntry, Status, MANIFEST_NAME};

pub const THREADS_VAR: &str = "CONFSURF_THREADS";

/// Worker count from `CONFSURF_THREADS`, 1 when unset.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!("{THREADS_VAR} = '{v}' is not a positive integer"))),
        },
    }
}

/// What [`run_batch`] leaves behind.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    /// First numerical failure in batch order, if any.
    pub failure: Option<CliError>,
}

struct Finished {
    out: Out,
    error: Option<confsurf::Error>,
    elapsed: f64,
}

fn run_one(s: &Scenario, threads: usize) -> Finished {
    let start = Instant::now();
    let mut out = Out::new(s.tolerances.clone(), s.criterion);
    let error = s.params.run(&mut out, threads).err();
    Finished {
        out,
        error,
        elapsed: start.elapsed().as_secs_f64(),
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Runs every scenario of a validated batch with `threads` workers and
/// writes the outputs and the manifest.
pub fn run_batch(batch: &Batch, threads: usize) -> Result<RunOutcome, CliError> {
    let threads = threads.max(1);
    std::fs::create_dir_all(&batch.output_dir).map_err(|e| io(&batch.output_dir, e))?;

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Finished>>> = batch.scenarios.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(batch.scenarios.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(s) = batch.scenarios.get(k) else { break };
                let done = run_one(s, threads);
                *slots[k].lock().expect("slot lock") = Some(done);
            });
        }
    });

    let mut entries = Vec::with_capacity(batch.scenarios.len());
    let mut failure = None;
    for (s, slot) in batch.scenarios.iter().zip(slots) {
        let done = slot.into_inner().expect("slot lock").expect("every scenario ran");
        std::fs::create_dir_all(&s.output_dir).map_err(|e| io(&s.output_dir, e))?;
        let mut files = Vec::with_capacity(done.out.files.len());
        for (name, bytes) in &done.out.files {
            let path = s.output_dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
            files.push(FileEntry {
                path: format!("{}/{name}", s.rel_dir),
                sha256: manifest::sha256_hex(bytes),
                bytes: bytes.len() as u64,
            });
        }
        let error = done.error.map(|e| {
            let (module, operation) = done.out.stage;
            if failure.is_none() {
                failure = Some(CliError::Numerical {
                    scenario: s.name.clone(),
                    module: module.into(),
                    operation: operation.into(),
                    message: e.to_string(),
                });
            }
            FailureEntry {
                module: module.into(),
                operation: operation.into(),
                message: e.to_string(),
            }
        });
        entries.push(ScenarioEntry {
            name: s.name.clone(),
            kind: s.kind.into(),
            criterion: s.criterion,
            output_dir: s.rel_dir.clone(),
            status: if error.is_some() { Status::NumericalFailure } else { Status::Ok },
            partial: error.is_some(),
            error,
            elapsed_seconds: done.elapsed,
            files,
            checks: done.out.checks,
        });
    }

    let manifest = Manifest {
        tool: "confsurf".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        threads,
        scenarios: entries,
    };
    let manifest_path = batch.output_dir.join(MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&manifest_path, text).map_err(|e| io(&manifest_path, e))?;
    Ok(RunOutcome {
        manifest,
        manifest_path,
        failure,
    })
}

/// `run <config>`: validate everything, then compute. Returns the exit code.
pub fn run_config(path: &Path, threads: usize) -> Result<RunOutcome, CliError> {
    let batch = Batch::load(path)?;
    run_batch(&batch, threads)
}

/// One line per kind for `list-kinds`.
pub fn list_kinds() -> String {
    kinds::KINDS
        .iter()
        .map(|k| format!("{:<18} {}\n{:<18} checks: {}\n", k.name, k.summary, "", k.checks.join(", ")))
        .collect()
}
