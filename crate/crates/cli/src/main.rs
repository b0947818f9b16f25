use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pfsplit::config::ScenarioConfig;
use pfsplit::experiment::{self, RunOptions};

#[derive(Parser)]
#[command(name = "pfsplit", version, about = "LTE/WLAN traffic splitting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (policy, load, delay, seed) combination in a config.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, env = "PFSPLIT_OUT_DIR")]
        out: PathBuf,
        /// Worker threads (0 = one per CPU).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        master_seed: Option<u64>,
        /// Write a per-run event trace under `<out>/traces`.
        #[arg(long)]
        trace: bool,
    },
    /// Check a config and list every problem found.
    Validate { config: PathBuf },
    /// Pick the Rel12 SINR threshold with the best edge rate.
    TuneRel12 {
        config: PathBuf,
        /// Candidate thresholds in dB, e.g. `-inf,0,5,10,inf`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        master_seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            jobs,
            master_seed,
            trace,
        } => {
            let opts = RunOptions {
                jobs,
                master_seed,
                trace,
            };
            match experiment::run_experiment(&config, &out, &opts) {
                Ok(summary) => {
                    println!("{} runs written to {}", summary.runs, summary.out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Validate { config } => {
            let diags = experiment::validate_config(&config);
            if diags.is_empty() {
                println!("{}: ok", config.display());
                return ExitCode::SUCCESS;
            }
            for d in &diags {
                eprintln!("{}: {d}", config.display());
            }
            ExitCode::from(1)
        }
        Command::TuneRel12 {
            config,
            grid,
            jobs,
            master_seed,
        } => {
            let cfg = match ScenarioConfig::load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let seed = master_seed.unwrap_or(cfg.master_seed);
            match experiment::tune_rel12(&cfg, &grid, seed, jobs) {
                Ok((threshold, edge)) => {
                    println!("threshold_db={threshold} edge_bps={edge}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
