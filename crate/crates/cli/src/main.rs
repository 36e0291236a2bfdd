//! `qht`: simulate homodyne data, fit posteriors, export summaries and run the
//! diagnostics suite.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qht_core::diagnostics::CheckOptions;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "qht", version, about = "Bayesian nonparametric quantum homodyne tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileName {
    Smoke,
    Paper,
}

impl ProfileName {
    fn key(self) -> &'static str {
        match self {
            Self::Smoke => "smoke",
            Self::Paper => "paper",
        }
    }
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the data seed (simulate) or the chain seed (fit).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    profile: Option<ProfileName>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(p) = self.profile {
            cfg.apply_profile(p.key())?;
        }
        let out = self.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        Ok((cfg, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate noisy quadrature data; writes data.csv and data.meta.json.
    Simulate(Common),
    /// Run the sampler; writes chain.jsonl, wigner_mean.csv, marginals.csv, report.json.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Dataset; defaults to data.csv in the output directory.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Export the true Wigner function and, with --chain, the posterior mean.
    Wigner {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        chain: Option<PathBuf>,
    },
    /// Run the diagnostics suite; writes check_report.json.
    Check {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Normalizing constant of the vacuum window in the normalization check.
        #[arg(long, hide = true)]
        vacuum_constant: Option<f64>,
    },
    /// Summarize a fit directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let (mut cfg, out) = common.load()?;
            if let Some(s) = common.seed {
                cfg.data.seed = s;
            }
            let path = commands::cmd_simulate(&cfg, &out)?;
            println!("wrote {} ({} samples)", path.display(), cfg.data.n);
        }
        Command::Fit { common, data } => {
            let (mut cfg, out) = common.load()?;
            if let Some(s) = common.seed {
                cfg.mcmc.seed = s;
            }
            let data = data.unwrap_or_else(|| out.join(commands::DATA_FILE));
            let r = commands::cmd_fit(&cfg, &data, &out)?;
            println!("fit done in {:.1} s, outputs in {}", r.runtime_seconds, out.display());
            if let Some(e) = r.l2_error {
                println!("posterior-mean L2 error {e:.4}");
            }
        }
        Command::Wigner { common, chain } => {
            let (cfg, out) = common.load()?;
            for p in commands::cmd_wigner(&cfg, chain.as_deref(), &out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Check { out, vacuum_constant } => {
            let mut opts = CheckOptions::default();
            if let Some(c) = vacuum_constant {
                opts.vacuum_constant = c;
            }
            let report = commands::cmd_check(&out, &opts)?;
            for c in &report.checks {
                println!("{} {:<36} value {:.3e} bound {:.3e}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.value, c.bound);
            }
            let failed = report.failures().count();
            if failed > 0 {
                return Err(CliError::ChecksFailed(failed));
            }
        }
        Command::Report { out } => print!("{}", commands::cmd_report(&out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qht: {e}");
            e.exit_code()
        }
    }
}
