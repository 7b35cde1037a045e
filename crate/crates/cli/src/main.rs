//! `hdfl`: run private ring-federation experiments from TOML configs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime
//! invariant violation. Failures print one machine-parsable line to stderr:
//! `error category=<config|data|runtime> detail="..."`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hdfl::experiment::{
    load_dataset, noise_schedule, run_experiment, run_sweep, write_schedule_csv, ExperimentConfig,
    SweepAxis,
};
use hdfl::Error;

/// Output-directory override honored by `run` and `sweep`.
const OUTPUT_DIR_ENV: &str = "HDFL_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "hdfl", version, about = "Private ring-federated HD classifier experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a config file.
    Run {
        /// TOML experiment config.
        config: PathBuf,
    },
    /// Execute one experiment bundle per value of a swept parameter.
    Sweep {
        /// TOML experiment config used as the base for every value.
        config: PathBuf,
        /// Field to vary: epsilon, delta0, dim, clients, samples_per_client, rounds.
        #[arg(long)]
        axis: String,
        /// Comma-separated values for the axis.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Print the analytic noise schedule (CSV) for a config; no training.
    NoiseTable {
        config: PathBuf,
    },
    /// Print the per-client sample assignment (CSV) for a config's first seed.
    PartitionDump {
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // a downstream pipe closing early (`hdfl noise-table c | head`) is
        // not an error worth reporting
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error category={} detail={:?}", e.kind().as_str(), e.to_string());
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}

fn load_config(path: &Path, apply_output_override: bool) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if apply_output_override {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.set_output_dir(PathBuf::from(dir));
        }
    }
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config } => {
            let cfg = load_config(&config, true)?;
            let outcome = run_experiment(&cfg)?;
            for (seed, acc) in outcome.seeds.iter().zip(&outcome.final_accuracies) {
                println!("seed {seed}: final accuracy {acc:.4}");
            }
            println!(
                "mean final accuracy {:.4} (stddev {:.4}) over {} seed(s)",
                outcome.mean_final_accuracy,
                outcome.stddev_final_accuracy,
                outcome.seeds.len()
            );
            println!("outputs: {}", outcome.output_dir.display());
            Ok(())
        }
        Command::Sweep { config, axis, values } => {
            let cfg = load_config(&config, true)?;
            let axis = SweepAxis::parse(&axis)?;
            let outcome = run_sweep(&cfg, axis, &values)?;
            for row in &outcome.rows {
                println!(
                    "{}={}: mean final accuracy {:.4} (stddev {:.4})",
                    axis.name(),
                    row.value,
                    row.mean_final_accuracy,
                    row.stddev_final_accuracy
                );
            }
            println!("outputs: {}", outcome.output_dir.display());
            Ok(())
        }
        Command::NoiseTable { config } => {
            let cfg = load_config(&config, false)?;
            let params = cfg.privacy_params()?;
            let rows = noise_schedule(&params, cfg.clients() as u64, cfg.rounds());
            let stdout = std::io::stdout();
            write_schedule_csv(&rows, stdout.lock())?;
            Ok(())
        }
        Command::PartitionDump { config } => {
            let cfg = load_config(&config, false)?;
            let dataset = load_dataset(&cfg)?;
            let seed = cfg.seeds()?[0];
            let plan = hdfl::experiment::build_partition(&cfg, &dataset, seed)?;
            let labels: Vec<usize> = dataset.train.iter().map(|s| s.label).collect();
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            plan.write_csv(&labels, &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}
