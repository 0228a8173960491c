//! Command-line definitions and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cause", version, about = "Causal embedding experiments on implicit feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable and applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a ratings file into control, treatment, validation and test sets.
    Prepare(ConfigArgs),
    /// Train one method on the prepared split and write the model file.
    Train(ConfigArgs),
    /// Score a trained model on the test split and append a metrics row.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Model file; defaults to `train.model` or the path `train` writes.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Train methods over injected treatment fractions and seeds.
    Sweep(ConfigArgs),
    /// Compare exact and IPS policy rewards on random synthetic worlds.
    Simulate(ConfigArgs),
}

/// Runs one parsed command, printing its summary to stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prepare(args) => {
            let m = commands::cmd_prepare(&args.load()?)?;
            let s = &m.sizes;
            println!(
                "{} events, {} users, {} items: train_c {} train_t {} valid {} test {}",
                s.total, s.users, s.items, s.train_control, s.train_treatment, s.validation, s.test
            );
        }
        Command::Train(args) => {
            let path = commands::cmd_train(&args.load()?)?;
            println!("model written to {}", path.display());
        }
        Command::Evaluate { config, model } => {
            let r = commands::cmd_evaluate(&config.load()?, model.as_deref())?;
            println!(
                "{}-{} seed {}: {} events, auc {:.4}, mse {:.5} (lift {:+.4}), nll {:.5} (lift {:+.4})",
                r.method, r.adaptation, r.seed, r.n_events, r.auc, r.mse, r.mse_lift, r.nll, r.nll_lift
            );
        }
        Command::Sweep(args) => {
            let rows = commands::cmd_sweep(&args.load()?)?;
            for r in &rows {
                match &r.report {
                    Some(m) => println!(
                        "{:.2} {:<14} seed {}: auc {:.4} mse_lift {:+.4}",
                        r.fraction, r.tag, r.seed, m.auc, m.mse_lift
                    ),
                    None => println!("{:.2} {:<14} seed {}: {}", r.fraction, r.tag, r.seed, r.status),
                }
            }
        }
        Command::Simulate(args) => {
            let (_, table) = commands::cmd_simulate(&args.load()?)?;
            print!("{table}");
        }
    }
    Ok(())
}
