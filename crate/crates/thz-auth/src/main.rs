//! Command-line front end for the Monte Carlo experiment harness.
//!
//! Every subcommand loads a JSON experiment config, applies flag
//! overrides and writes a CSV table to `--out` (or the config's `output`
//! path, or stdout). Exit codes: 0 success, 2 configuration error, 3 I/O
//! error, 4 numerical failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thz_auth::harness::{Experiment, ExperimentConfig, ResultTable};
use thz_auth::Error;

#[derive(Parser)]
#[command(
    name = "thz-auth",
    about = "Path-loss fingerprint authentication experiments for THz nanonetworks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the SNR grid (comma-separated dB values).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    /// Override the false-alarm sweep grid (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pfa: Option<Vec<f64>>,
    /// Paper-scale realization count (1e5) instead of desk scale.
    #[arg(long)]
    full: bool,
    /// Output CSV path; defaults to the config's `output`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Path loss over a frequency/distance grid.
    Pathloss(Common),
    /// False-alarm and missed-detection rates against SNR.
    ErrorVsSnr(Common),
    /// ROC sweep: detection and misclassification against the
    /// false-alarm target.
    Roc(Common),
    /// Per-slot test accuracy vs Viterbi-decoded accuracy.
    HmmCompare(Common),
    /// Transmitter identification: nearest fingerprint vs GMM.
    Txid {
        #[command(flatten)]
        common: Common,
        /// Also write the fitted mixture models as JSON.
        #[arg(long)]
        gmm_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Pathloss(common) => {
            let experiment = load(&common)?;
            let mut buffer = Vec::new();
            experiment.run_pathloss(&mut buffer)?;
            write_bytes(&common, experiment.config(), &buffer)
        }
        Command::ErrorVsSnr(common) => {
            let experiment = load(&common)?;
            let table = experiment.run_error_vs_snr()?;
            write_table(&common, experiment.config(), &table)
        }
        Command::Roc(common) => {
            let experiment = load(&common)?;
            let table = experiment.run_roc()?;
            write_table(&common, experiment.config(), &table)
        }
        Command::HmmCompare(common) => {
            let experiment = load(&common)?;
            let table = experiment.run_hmm_compare()?;
            write_table(&common, experiment.config(), &table)
        }
        Command::Txid { common, gmm_out } => {
            let experiment = load(&common)?;
            let run = experiment.run_txid()?;
            if let Some(path) = gmm_out {
                let json = serde_json::to_string_pretty(&run.fits)
                    .map_err(|e| Error::Config(format!("serializing fitted models: {e}")))?;
                std::fs::write(&path, json).map_err(|source| Error::File { path, source })?;
            }
            write_table(&common, experiment.config(), &run.table)
        }
    }
}

fn load(common: &Common) -> Result<Experiment, Error> {
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(snr) = &common.snr_db {
        cfg.snr_db = snr.clone();
    }
    if let Some(pfa) = &common.pfa {
        cfg.pfa_grid = pfa.clone();
    }
    if common.full {
        cfg.apply_full();
    }
    Experiment::new(cfg)
}

fn output_path(common: &Common, cfg: &ExperimentConfig) -> Option<PathBuf> {
    common.out.clone().or_else(|| cfg.output.clone())
}

fn write_table(common: &Common, cfg: &ExperimentConfig, table: &ResultTable) -> Result<(), Error> {
    match output_path(common, cfg) {
        Some(path) => table.write_csv_path(path),
        None => table.write_csv(std::io::stdout().lock()),
    }
}

fn write_bytes(common: &Common, cfg: &ExperimentConfig, bytes: &[u8]) -> Result<(), Error> {
    match output_path(common, cfg) {
        Some(path) => std::fs::write(&path, bytes).map_err(|source| Error::File { path, source }),
        None => std::io::stdout().lock().write_all(bytes).map_err(Error::Io),
    }
}
