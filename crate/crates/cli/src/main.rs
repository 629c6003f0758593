use std::fs;
use std::io::{self, BufReader};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mixreward::bt::FitConfig;
use mixreward::StrategyKind;
use mixreward_cli::{adjust, exit_code, fit_bt, oracle, simulate, verify};

#[derive(Debug, Parser)]
#[command(
    name = "mixreward",
    version,
    about = "Constraint-aware mixed-reward shaping for GRPO"
)]
struct Cli {
    /// RNG seed (overrides the scenario file for `simulate`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Minimum gap below the adjusted mean for violators.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// writing_only, verification_only, linear or rlmr.
    #[arg(long, global = true)]
    strategy: Option<StrategyKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Shape reward groups read as JSONL (stdin when no file is given).
    Adjust { input: Option<PathBuf> },
    /// Check a text file against a constraint file.
    Verify { text: PathBuf, constraints: PathBuf },
    /// Run the toy training loop and write per-step metrics as JSONL.
    Simulate {
        scenario: PathBuf,
        #[arg(long, short, default_value = "metrics.jsonl")]
        out: PathBuf,
        /// Comma-separated seeds to sweep in parallel, one trace file each.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Fit a linear Bradley-Terry scorer on JSONL preference pairs.
    FitBt {
        data: PathBuf,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
        #[arg(long, default_value_t = 0.0)]
        l2: f64,
        /// Minibatch size; full batch when omitted.
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Randomized check of the penalty guarantees.
    Oracle {
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
    },
}

const DEFAULT_GAMMA: f64 = 0.1;

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn dispatch(cli: Cli) -> Result<u8> {
    let stdout = io::stdout().lock();
    let stderr = io::stderr().lock();
    let gamma = cli.gamma.unwrap_or(DEFAULT_GAMMA);
    match cli.command {
        Command::Adjust { input } => {
            let strategy = cli.strategy.unwrap_or(StrategyKind::Rlmr);
            let report = match input {
                Some(path) => {
                    let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    adjust::cmd_adjust(BufReader::new(file), stdout, gamma, strategy)?
                }
                None => adjust::cmd_adjust(io::stdin().lock(), stdout, gamma, strategy)?,
            };
            eprintln!(
                "{} groups shaped, {} unshapeable, {} malformed",
                report.groups, report.unshapeable, report.malformed
            );
            Ok(report.exit_code())
        }
        Command::Verify { text, constraints } => {
            let text = read(&text)?;
            let set = verify::parse_constraints(&read(&constraints)?)?;
            verify::cmd_verify(&text, &set, stdout, stderr)
        }
        Command::Simulate { scenario, out, seeds } => {
            let overrides = simulate::Overrides {
                seed: cli.seed,
                gamma: cli.gamma,
                strategy: cli.strategy,
            };
            simulate::cmd_simulate(&read(&scenario)?, &out, overrides, seeds.as_deref(), stdout, stderr)
        }
        Command::FitBt {
            data,
            steps,
            lr,
            l2,
            batch_size,
        } => {
            let pairs = fit_bt::parse_pairs(&read(&data)?)?;
            let cfg = FitConfig {
                steps,
                lr,
                l2,
                batch_size,
                seed: cli.seed.unwrap_or(0),
            };
            fit_bt::cmd_fit_bt(&pairs, &cfg, stdout, stderr)?;
            Ok(0)
        }
        Command::Oracle { trials } => oracle::cmd_oracle(trials, cli.seed.unwrap_or(0), stdout, stderr),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
