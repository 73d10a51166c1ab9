use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use mcc_core::experiment::{evaluate_checkpoint, run_config_file, METRICS_FILE};
use mcc_core::gradcheck::run_gradcheck;

#[derive(Parser)]
#[command(name = "mcc", version, about = "Momentum contrastive clustering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train according to a config file and write metrics, config copy,
    /// provenance and a checkpoint.
    Run {
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a checkpoint on a labeled CSV dataset (`label,x0,x1,...`).
    Eval { checkpoint: PathBuf, dataset: PathBuf },
    /// Check every analytic gradient against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, seed, out } => {
            let (outcome, dir) =
                run_config_file(&config, seed, out).with_context(|| format!("running {}", config.display()))?;
            let s = outcome.final_scores;
            println!("ACC {:.4}  NMI {:.4}  ARI {:.4}", s.acc, s.nmi, s.ari);
            println!("wrote {}", dir.join(METRICS_FILE).display());
        }
        Command::Eval { checkpoint, dataset } => {
            let s = evaluate_checkpoint(&checkpoint, &dataset).context("evaluating checkpoint")?;
            println!("ACC {:.4}  NMI {:.4}  ARI {:.4}", s.acc, s.nmi, s.ari);
        }
        Command::Gradcheck { trials, seed } => {
            let mut ok = true;
            for s in run_gradcheck(trials, seed)? {
                let verdict = if s.passed() { "ok" } else { "FAIL" };
                println!(
                    "{verdict:4} {:22} {} checks, {} failed, worst relative error {:.2e}",
                    s.name, s.trials, s.failures, s.worst
                );
                ok &= s.passed();
            }
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
