use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use confsurf_cli::{list_kinds, report, run_config, threads_from_env, CliError, Manifest};

/// Scenario runner for the conformal free-surface laboratory.
#[derive(Parser)]
#[command(name = "confsurf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a batch configuration.
    Run { config: PathBuf },
    /// Print the pass/fail table of a finished batch.
    Report { manifest: PathBuf },
    /// List scenario kinds and the checks each one emits.
    ListKinds,
}

fn exit(e: &CliError) -> ExitCode {
    eprintln!("confsurf: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListKinds => {
            print!("{}", list_kinds());
            ExitCode::SUCCESS
        }
        Command::Report { manifest } => match Manifest::load(&manifest) {
            Ok(m) => {
                print!("{}", report(&m));
                ExitCode::SUCCESS
            }
            Err(e) => exit(&e),
        },
        Command::Run { config } => {
            let outcome = threads_from_env().and_then(|t| run_config(&config, t));
            match outcome {
                Ok(o) => {
                    let failed = o.manifest.checks().filter(|(_, c)| !c.passed).count();
                    println!(
                        "{} scenarios, {} failed checks; manifest at {}",
                        o.manifest.scenarios.len(),
                        failed,
                        o.manifest_path.display()
                    );
                    match o.failure {
                        Some(e) => exit(&e),
                        None => ExitCode::SUCCESS,
                    }
                }
                Err(e) => exit(&e),
            }
        }
    }
}
