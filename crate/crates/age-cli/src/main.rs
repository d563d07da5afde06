//! `age`: train and probe adversarial generator-encoder models, and certify
//! the finite-space game theory behind them.

mod commands;
mod config;
mod theory_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_GEOMETRIC: u8 = 4;

/// One failure type for the whole binary: an exit code plus a message.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: String) -> CliError {
        CliError { code, message }
    }
}

pub fn exit_code_for(err: &age_core::Error) -> u8 {
    use age_core::Error::*;
    match err {
        AntipodalEndpoints | DegenerateRow { .. } => EXIT_GEOMETRIC,
        NonFiniteLoss { .. } | NonPositiveInput { .. } | MissingGrad { .. }
        | NonScalarRoot { .. } => EXIT_NUMERIC,
        _ => EXIT_BAD_INPUT,
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum LogLevel {
    Quiet = 0,
    Info = 1,
    Debug = 2,
}

fn log_level() -> LogLevel {
    match std::env::var("AGE_LOG").as_deref() {
        Ok("quiet") => LogLevel::Quiet,
        Ok("debug") => LogLevel::Debug,
        _ => LogLevel::Info,
    }
}

pub fn info(msg: &str) {
    if log_level() >= LogLevel::Info {
        eprintln!("[age] {msg}");
    }
}

pub fn debug(msg: &str) {
    if log_level() >= LogLevel::Debug {
        eprintln!("[age:debug] {msg}");
    }
}

#[derive(Parser)]
#[command(name = "age", about = "Adversarial generator-encoder lab", version)]
struct Cli {
    /// Run configuration (train).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an encoder/generator pair from a JSON config.
    Train,
    /// Decode prior samples through a trained generator.
    Sample {
        #[arg(long)]
        generator: PathBuf,
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value = "samples.csv")]
        file: PathBuf,
        /// Condition label for conditional models.
        #[arg(long)]
        label: Option<usize>,
        /// Write a PPM sample sheet instead of CSV.
        #[arg(long)]
        ppm: bool,
        #[arg(long, default_value_t = 16)]
        height: usize,
        #[arg(long, default_value_t = 16)]
        width: usize,
        #[arg(long, default_value_t = 8)]
        grid_cols: usize,
    },
    /// Encode-decode a dataset and write interleaved real/reconstruction rows.
    Reconstruct {
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        generator: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "reconstructions.csv")]
        file: PathBuf,
        #[arg(long)]
        ppm: bool,
        #[arg(long, default_value_t = 16)]
        height: usize,
        #[arg(long, default_value_t = 16)]
        width: usize,
        #[arg(long, default_value_t = 8)]
        grid_cols: usize,
    },
    /// Great-circle interpolation between the codes of two data points.
    Interpolate {
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        generator: PathBuf,
        /// First endpoint, comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        x1: String,
        /// Second endpoint, comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        x2: String,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[arg(long, default_value = "interpolation.csv")]
        file: PathBuf,
        #[arg(long)]
        label: Option<usize>,
    },
    /// Divergence of a CSV sample set from the unit Gaussian.
    EvalDivergence {
        #[arg(long)]
        input: PathBuf,
        /// parametric | knn
        #[arg(long, default_value = "parametric")]
        method: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Exhaustive saddle-point and reciprocity certification.
    VerifyTheory {
        #[arg(long, default_value_t = 3)]
        max_k: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Train => {
            let config = cli.config.ok_or_else(|| {
                CliError::new(EXIT_BAD_INPUT, "train requires --config PATH".into())
            })?;
            commands::cmd_train(&config, cli.seed, cli.out)?;
            Ok(true)
        }
        Command::Sample { generator, n, file, label, ppm, height, width, grid_cols } => {
            let raster = ppm.then_some(commands::RasterOpts { height, width, grid_cols });
            let out = resolve_out(&cli.out, file);
            commands::cmd_sample(&generator, n, cli.seed.unwrap_or(0), &out, label, raster)?;
            Ok(true)
        }
        Command::Reconstruct { encoder, generator, data, file, ppm, height, width, grid_cols } => {
            let raster = ppm.then_some(commands::RasterOpts { height, width, grid_cols });
            let out = resolve_out(&cli.out, file);
            commands::cmd_reconstruct(&encoder, &generator, &data, &out, raster)?;
            Ok(true)
        }
        Command::Interpolate { encoder, generator, x1, x2, steps, file, label } => {
            let out = resolve_out(&cli.out, file);
            commands::cmd_interpolate(&encoder, &generator, &x1, &x2, steps, &out, label)?;
            Ok(true)
        }
        Command::EvalDivergence { input, method, k } => {
            commands::cmd_eval_divergence(&input, &method, k)?;
            Ok(true)
        }
        Command::VerifyTheory { max_k, trials } => {
            theory_cmd::cmd_verify_theory(max_k, trials, cli.seed.unwrap_or(0), cli.out.as_deref())
        }
    }
}

fn resolve_out(dir: &Option<PathBuf>, file: PathBuf) -> PathBuf {
    match dir {
        Some(d) => {
            let _ = std::fs::create_dir_all(d);
            d.join(file)
        }
        None => file,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
