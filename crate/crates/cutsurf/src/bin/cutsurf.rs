//! Thin CLI over the library: run a config, run a named preset, or validate a
//! config. Exit codes: 0 success, 2 config/validation error, 3 outer-loop
//! iteration cap.

use clap::{Parser, Subcommand};
use cutsurf::harness::{self, HarnessError, Preset};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cutsurf", version, about = "Cutting-surface consensus solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides the config's `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full solver on a JSON config.
    Run { config: PathBuf },
    /// Run a named experiment preset.
    Preset { name: String },
    /// Parse and validate a JSON config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Run { config } => {
            let parsed = harness::load_config(config).map_err(HarnessError::Config)?;
            let resolved = harness::resolve(parsed).map_err(HarnessError::Config)?;
            let dir = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(&resolved.config.out_dir));
            let report = harness::run_resolved(&resolved, &dir)?;
            emit(cli, &report);
            Ok(())
        }
        Command::Preset { name } => {
            let preset = Preset::parse(name).ok_or_else(|| {
                HarnessError::Config(harness::ConfigError::Validation {
                    field: "preset".to_string(),
                    message: format!(
                        "unknown preset `{name}`; available: {}",
                        Preset::ALL.map(|p| p.name()).join(", ")
                    ),
                })
            })?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let report = harness::run_preset(preset, &dir)?;
            emit(cli, &report);
            Ok(())
        }
        Command::Validate { config } => {
            let parsed = harness::load_config(config).map_err(HarnessError::Config)?;
            let resolved = harness::resolve(parsed).map_err(HarnessError::Config)?;
            if !cli.quiet {
                println!(
                    "ok: instance `{}`, {} agents, S = {}, D = {}",
                    resolved.config.instance,
                    resolved.instance.m,
                    resolved.schedule.s_window,
                    resolved.outer.diameter
                );
                for w in &resolved.warnings {
                    println!("warning: {w}");
                }
            }
            Ok(())
        }
    }
}

fn emit(cli: &Cli, report: &harness::PresetReport) {
    if cli.quiet {
        return;
    }
    for line in &report.lines {
        println!("{line}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
}
