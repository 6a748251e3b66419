use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hvac_cli::commands::{self, Overrides};
use hvac_cli::config::ZoneSpec;
use hvac_cli::{CliError, ScenarioConfig};

/// Zoned HVAC control: airflow, temperature and optimal heater/fan schedules.
#[derive(Debug, Parser)]
#[command(name = "hvac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Scenario JSON; defaults reproduce the reference apartment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Target zone: 0..17 or "whole".
    #[arg(long, value_parser = ZoneSpec::parse)]
    zone: Option<ZoneSpec>,
    /// Time-stepping parameter, 0 (forward Euler) to 1 (backward Euler).
    #[arg(long)]
    theta: Option<f64>,
    /// Run everything on the calling thread.
    #[arg(long)]
    seq: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured controls forward and report energy and error.
    Simulate(Common),
    /// Optimize fan speeds and heater schedules for the configured zone.
    Optimize(Common),
    /// Optimize every canonical zone and the whole apartment.
    Sweep(Common),
    /// Print mesh statistics.
    MeshInfo(Common),
}

fn load(common: &Common) -> Result<(ScenarioConfig, PathBuf), CliError> {
    let cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    Overrides {
        out: common.out.clone(),
        zone: common.zone,
        theta: common.theta,
        sequential: common.seq,
    }
    .apply(cfg)
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn print_json<T: serde::Serialize>(value: &T) {
    emit(&serde_json::to_string_pretty(value).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, out) = load(&c)?;
            let r = commands::simulate(&cfg, &out)?;
            print_json(&r.energy);
        }
        Command::Optimize(c) => {
            let (cfg, out) = load(&c)?;
            if cfg.sweep {
                let s = commands::sweep(&cfg, &out, c.seq)?;
                emit(commands::summary_csv(&s).as_str());
            } else {
                let r = commands::optimize_command(&cfg, &out)?;
                if !r.converged {
                    eprintln!("warning: optimizer stopped after {} iterations without converging", r.iterations);
                }
                print_json(&r.run.energy);
            }
        }
        Command::Sweep(c) => {
            let (cfg, out) = load(&c)?;
            let s = commands::sweep(&cfg, &out, c.seq)?;
            emit(commands::summary_csv(&s).as_str());
        }
        Command::MeshInfo(c) => {
            let (cfg, _) = load(&c)?;
            let info = commands::mesh_info(&cfg, c.out.as_deref())?;
            print_json(&info);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
