use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gibbsel_cli::commands;
use gibbsel_cli::config::load_config;
use gibbsel_cli::run::run_experiment;
use gibbsel_core::{Role, StatSubset};

/// Model choice for hidden Potts random fields: simulation, calibrated kNN
/// classification, local error rates and adaptive statistic selection.
#[derive(Parser)]
#[command(name = "gibbsel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a reference table and write it as CSV with a JSON sidecar.
    Gen {
        /// Config file path or bundled preset name (exp1, exp2, exp3).
        #[arg(long)]
        config: String,
        /// Number of records.
        #[arg(long)]
        n: usize,
        /// Master seed of the table.
        #[arg(long)]
        seed: u64,
        /// Table role: train, valid or test.
        #[arg(long)]
        role: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also dump every observed field (PGM or CSV) into this directory.
        #[arg(long)]
        keep_fields: Option<PathBuf>,
    },
    /// Calibrate the number of neighbors on a validation table.
    Calibrate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        /// Statistic subset: 2d, 4d or 6d.
        #[arg(long)]
        stats: String,
        /// Explicit comma-separated k grid (default: log-spaced).
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
        /// Output JSON report path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify one observed field.
    Classify {
        #[arg(long)]
        train: PathBuf,
        /// Number of neighbors.
        #[arg(long)]
        k: usize,
        /// Statistic subset: 2d, 4d or 6d.
        #[arg(long)]
        stats: String,
        /// Observed field: .pgm (discrete) or .csv (continuous).
        #[arg(long)]
        obs: PathBuf,
        /// Noise level of a continuous observation, when known. Reserved;
        /// quantization does not use it.
        #[arg(long)]
        sigma_known: Option<f64>,
        /// Output JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a local-error surface over a 2D projection.
    LocalError {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        /// Statistic subset the classifier is trained on.
        #[arg(long)]
        stats: String,
        /// Number of neighbors of the classifier.
        #[arg(long)]
        k: usize,
        /// Projection the errors are localized on: 2d/4d/6d (first two
        /// coordinates) or coords:a,b.
        #[arg(long, default_value = "2d")]
        s2: String,
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Output surface CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Calibrate several subsets and combine them adaptively.
    Adaptive {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Comma-separated subsets, e.g. 2d,4d,6d.
        #[arg(long, value_delimiter = ',')]
        stats: Vec<String>,
        /// Explicit comma-separated k grid (default: log-spaced).
        #[arg(long, value_delimiter = ',')]
        k_grid: Option<Vec<usize>>,
        /// Output JSON report path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment from a config: tables, calibration, adaptive
    /// classifier, report and CSV artifacts.
    Run {
        /// Config file path or bundled preset name (exp1, exp2, exp3).
        #[arg(long)]
        config: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact posterior over the configured models for a small observed field.
    Oracle {
        /// Config file path or bundled preset name.
        #[arg(long)]
        config: String,
        /// Observed field (.pgm).
        #[arg(long)]
        obs: PathBuf,
        /// Quadrature nodes per parameter axis.
        #[arg(long, default_value_t = 32)]
        nodes: usize,
        /// Output JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen { config, n, seed, role, out, keep_fields } => {
            let role: Role = role.parse()?;
            commands::cmd_gen(&config, n, seed, role, &out, keep_fields.as_deref())
        }
        Command::Calibrate { train, valid, stats, k_grid, out } => {
            let stats: StatSubset = stats.parse()?;
            commands::cmd_calibrate(&train, &valid, stats, k_grid, &out)
        }
        Command::Classify { train, k, stats, obs, sigma_known, out } => {
            let stats: StatSubset = stats.parse()?;
            commands::cmd_classify(&train, k, stats, &obs, sigma_known, out.as_deref())
        }
        Command::LocalError { train, valid, stats, k, s2, grid, out } => {
            let stats: StatSubset = stats.parse()?;
            commands::cmd_local_error(&train, &valid, stats, k, &s2, grid, &out)
        }
        Command::Adaptive { train, valid, test, stats, k_grid, out } => {
            let stats: Vec<StatSubset> = stats
                .iter()
                .map(|s| s.parse())
                .collect::<gibbsel_core::Result<_>>()?;
            commands::cmd_adaptive(&train, &valid, &test, &stats, k_grid, &out)
        }
        Command::Run { config, out } => {
            let config = load_config(&config)?;
            let report = run_experiment(&config, &out)?;
            for subset in &report.subsets {
                eprintln!(
                    "{}: k = {}, test error {:.4}",
                    subset.stats, subset.k, subset.test_error
                );
            }
            if let Some(adaptive) = &report.adaptive {
                eprintln!(
                    "adaptive: test error {:.4}, shares {:?}",
                    adaptive.test_error, adaptive.lambda_shares
                );
            }
            Ok(())
        }
        Command::Oracle { config, obs, nodes, out } => {
            commands::cmd_oracle(&config, &obs, nodes, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
