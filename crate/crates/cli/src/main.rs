use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use d2dsched_cli::config::load_config;
use d2dsched_cli::output::RunManifest;
use d2dsched_cli::{cmd_compare, cmd_complexity, cmd_run, cmd_sweep, replay, seed_list, Axis};

/// Proportional-fair D2D/cellular uplink scheduling simulator.
#[derive(Parser)]
#[command(name = "d2dsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Scenario {
    /// Scenario file (TOML); defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set scheduling.max_iterations=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Number of consecutive seeds starting at the configured seed.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write per-TTI and summary CSVs.
    Run {
        #[command(flatten)]
        scenario: Scenario,
        /// Re-run exactly what a previous manifest recorded (ignores --config/--set/--seeds).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run the heuristic and the exhaustive search on identical states.
    Compare {
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Sweep one parameter and write long-format plotting data.
    Sweep {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
    /// Print closed-form operation counts of both schedulers.
    Complexity {
        #[arg(long)]
        n_c: u32,
        #[arg(long)]
        n_d: u32,
        /// One or more subchannel counts, comma separated.
        #[arg(short, long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[arg(short, long, default_value_t = 1)]
        m: u32,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, manifest: Some(path) } => {
            let m = RunManifest::load(&path)?;
            replay(&m, &scenario.out)?;
        }
        Command::Run { scenario, manifest: None } => {
            let cfg = load_config(scenario.config.as_deref(), &scenario.overrides)?;
            let m = cmd_run(&cfg, &seed_list(&cfg, scenario.seeds), &scenario.out)?;
            eprintln!("wrote {} seed(s) to {} in {} ms", m.seeds.len(), scenario.out.display(), m.wall_clock_ms);
        }
        Command::Compare { scenario } => {
            let cfg = load_config(scenario.config.as_deref(), &scenario.overrides)?;
            let r = cmd_compare(&cfg, &seed_list(&cfg, scenario.seeds), &scenario.out)?;
            println!("rows,median_ratio,dominance_fraction");
            println!("{},{},{}", r.rows.len(), r.median_ratio(), r.dominance_fraction());
        }
        Command::Sweep { scenario, axis, values } => {
            if values.is_empty() {
                bail!("--values needs at least one entry");
            }
            let cfg = load_config(scenario.config.as_deref(), &scenario.overrides)?;
            cmd_sweep(&cfg, axis, &values, &seed_list(&cfg, scenario.seeds), &scenario.out)?;
        }
        Command::Complexity { n_c, n_d, k, m } => print!("{}", cmd_complexity(n_c, n_d, &k, m)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
