//! Command-line front end: configuration-driven runs, sweeps, the
//! circuit-count table, and the exact reference trajectory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lrqte::ansatz::AnsatzKind;
use lrqte::config::ExperimentConfig;
use lrqte::error::Error;
use lrqte::experiment::{cost_table, print_basis_labels, run_experiment, run_oracle, run_sweep};

#[derive(Parser)]
#[command(
    name = "lrqte",
    about = "Low-rank variational time evolution for Lindblad dynamics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured evolution and write its artifacts.
    Run {
        /// JSON configuration file
        config: PathBuf,
        /// print the basis labels in the complementary bit convention
        #[arg(long)]
        flipped_labels: bool,
    },
    /// Run every point of the configured sweep plus a summary table.
    Sweep {
        /// JSON configuration file with a sweep descriptor
        config: PathBuf,
    },
    /// Print the per-block expectation-value counts.
    Cost {
        /// ansatz kind: I or II
        #[arg(long)]
        ansatz: String,
        #[arg(long)]
        rank: u64,
        #[arg(long)]
        ntheta: u64,
        /// number of jump channels
        #[arg(long = "L")]
        l: u64,
    },
    /// Integrate the dense reference trajectory only.
    Oracle {
        /// JSON configuration file
        config: PathBuf,
    },
}

fn init_worker_pool() {
    if let Ok(text) = std::env::var("LRQTE_THREADS") {
        if let Ok(threads) = text.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_worker_pool();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            flipped_labels,
        } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let run = cfg.resolve()?;
            println!("basis states:");
            print_basis_labels(&run, flipped_labels, &mut std::io::stdout())?;
            let artifacts = run_experiment(&cfg, None)?;
            let last = artifacts
                .output
                .series
                .records
                .last()
                .expect("series has at least the initial record");
            println!(
                "done: {} rows -> {} (final t={:.4}, s_z={:.6}, trace={:.6})",
                artifacts.output.series.records.len(),
                artifacts.dir.join("timeseries.csv").display(),
                last.t,
                last.s_z,
                last.trace
            );
            Ok(())
        }
        Command::Sweep { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let rows = run_sweep(&cfg)?;
            for row in &rows {
                println!(
                    "{}: completed={} bures_integrated={:?} peak_infidelity={:?}",
                    row.label, row.completed, row.bures_integrated, row.peak_infidelity
                );
            }
            Ok(())
        }
        Command::Cost {
            ansatz,
            rank,
            ntheta,
            l,
        } => {
            let kind = match ansatz.as_str() {
                "I" => AnsatzKind::I,
                "II" => AnsatzKind::II,
                other => {
                    return Err(Error::Config(format!(
                        "--ansatz must be I or II, got \"{other}\""
                    )))
                }
            };
            if rank == 0 || ntheta == 0 || l == 0 {
                return Err(Error::Config(
                    "--rank, --ntheta, --L must be positive".into(),
                ));
            }
            print!("{}", cost_table(kind, rank, ntheta, l));
            Ok(())
        }
        Command::Oracle { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            let dir = run_oracle(&cfg, None)?;
            println!("oracle trajectory -> {}", dir.join("oracle.csv").display());
            Ok(())
        }
    }
}
