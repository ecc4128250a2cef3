//! `curiobarg` — run bargaining experiments from a TOML configuration.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use curiobarg::commands::{self, CommandReport, Fig2Options, Overrides, SweepOptions};
use curiobarg::experiments::Pairing;
use curiobarg::protocol::Variant;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "curiobarg", version, about = "Curiosity-aware bargaining simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, default_value = "configs/default.toml")]
    config: PathBuf,
    /// Override `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    jobs: Option<usize>,
    /// Override `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Result<Overrides> {
        if self.jobs == Some(0) {
            anyhow::bail!("--jobs must be >= 1");
        }
        Ok(Overrides { seed: self.seed, jobs: self.jobs, out: self.out.clone() })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario and write its welfare report.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Welfare of every pairing under the four protocol variants.
    Fig2 {
        #[command(flatten)]
        common: Common,
        /// Exit non-zero unless every expected ordering holds.
        #[arg(long)]
        assert: bool,
        /// Restrict the table to one variant (barg, mat, bou, all).
        #[arg(long)]
        variant: Option<Variant>,
        /// Bound of the bounded variants.
        #[arg(long)]
        bound: Option<u32>,
    },
    /// Welfare as a function of the bound, with plateau detection.
    SweepBound {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ascending bounds.
        #[arg(long, value_delimiter = ',')]
        bounds: Option<Vec<u32>>,
        /// Bounded variant to sweep (bou or all).
        #[arg(long, default_value = "bou")]
        variant: Variant,
        /// Pairings such as `sec-vs-unc`; defaults to the secretive,
        /// uncurious and curious focal agents.
        #[arg(long, value_delimiter = ',')]
        pairing: Option<Vec<Pairing>>,
        /// Exit non-zero unless the plateau ordering holds.
        #[arg(long)]
        assert: bool,
    },
    /// Incentive probes on the `all` variant.
    Check {
        #[command(flatten)]
        common: Common,
        /// Declarations as comma-separated multiples of the truthful value.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
}

fn execute(cli: Cli) -> Result<CommandReport> {
    let load = |c: &Common| {
        commands::load_config(&c.config).with_context(|| format!("config {}", c.config.display()))
    };
    let report = match cli.command {
        Command::Run { common } => commands::cmd_run(&load(&common)?, &common.overrides()?)?,
        Command::Fig2 { common, assert, variant, bound } => commands::cmd_fig2(
            &load(&common)?,
            &common.overrides()?,
            &Fig2Options { assert, variant, bound },
        )?,
        Command::SweepBound { common, bounds, variant, pairing, assert } => {
            let defaults = SweepOptions::default();
            let opts = SweepOptions {
                bounds: bounds.unwrap_or(defaults.bounds),
                variant,
                pairings: pairing.unwrap_or(defaults.pairings),
                assert,
            };
            commands::cmd_sweep_bound(&load(&common)?, &common.overrides()?, &opts)?
        }
        Command::Check { common, grid } => {
            commands::cmd_check(&load(&common)?, &common.overrides()?, grid.as_deref())?
        }
    };
    Ok(report)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for file in &report.files {
                eprintln!("wrote {}", file.display());
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
