//! Command-line front end. Every command writes its artifacts plus `manifest.json`
//! (resolved config, arguments, output hashes) into the output directory.
//!
//! Exit codes: 0 success, 2 user error, 3 numerical failure, 4 training divergence.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{DataConfig, RunConfig};
pub use output::{Manifest, Output};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } | Error::Reduction(_) | Error::Conversion(_) => EXIT_NUMERICAL,
        Error::Training { .. } => EXIT_DIVERGED,
        _ => EXIT_USER,
    }
}

const CSV_HELP: &str = "\
CSV outputs:
  zport.csv              p,q,re,im (ohms, zero-based port indices)
  s.csv                  p,q,re,im (S-parameters against the reference impedance)
  sweep.csv              f_hz, then s{p}{q}_re,s{p}{q}_im, then z{p}{q}_re,z{p}{q}_im (1-based)
  loss_history.csv       epoch,L_r,L_i,w_r,w_i,L_total
  twoport_history.csv    epoch,loss,learning_rate,grad_norm
  holdout.csv            index,spacing_wavelengths,relative_error
  synthesis_history.csv  epoch,learning_rate,loss_m{M} per array size
  synthesis_holdout.csv  elements,index,normalized_rms
  synthesis.csv          index,re_or_im,value (packed upper triangle, real half then imaginary half)
  report.csv             item,computed,reference,metric,value,limit,verdict
  timings.csv            stage,seconds,limit_seconds,verdict";

#[derive(Debug, Parser)]
#[command(name = "pclstm", version, about = "Mutual-coupling MoM solver and learned surrogate", after_help = CSV_HELP)]
pub struct Cli {
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON config file or a previous manifest; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic stage (default 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the MoM system for a geometry file; writes zport.csv/json and s.csv.
    MomSolve {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        ref_ohms: Option<f64>,
    },
    /// MoM frequency sweep with fixed dipole dimensions; writes sweep.csv.
    Sweep {
        #[arg(long)]
        geometry: PathBuf,
        #[arg(long)]
        f_start: f64,
        #[arg(long)]
        f_stop: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        #[arg(long)]
        ref_ohms: Option<f64>,
    },
    /// Train a model.
    #[command(subcommand)]
    Train(TrainTarget),
    /// Predict the 2x2 port matrix of a two-element geometry; writes prediction.json.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        geometry: PathBuf,
    },
    /// Synthesize the port matrix of a larger array; writes synthesis.csv and synthesis_matrix.json.
    Synthesize {
        #[arg(long)]
        bundle: PathBuf,
        /// Refinement network from `train synthesis`; without it the pairwise prior is returned.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        geometry: PathBuf,
    },
    /// Generate a MoM-labelled dataset; writes dataset.jsonl.
    GenData {
        #[arg(long)]
        elements: usize,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Time trained-model inference against the MoM solve for 2, 10 and 30 elements.
    Benchmark {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Recompute a published table or figure and compare against its values.
    Reproduce {
        #[arg(value_enum)]
        table: ReproduceTarget,
        /// Reuse a trained two-port bundle instead of training one (table2, fig12).
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TrainTarget {
    /// Green-function network (no labelled data); writes pann.json and loss_history.csv.
    Pann(PannArgs),
    /// Two-port model; writes bundle.json, twoport_history.csv and holdout.csv.
    Twoport(TwoPortArgs),
    /// Large-array refinement network; writes synthesis_model.json and synthesis_history.csv.
    Synthesis(SynthesisArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PannArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Use fixed (0.5, 0.5) loss weights instead of the adaptive rule.
    #[arg(long)]
    pub fixed_weights: bool,
    #[arg(long)]
    pub segments: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TwoPortArgs {
    /// Two-element dataset (JSON lines from `gen-data --elements 2`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Generate the dataset with the MoM oracle instead of reading one.
    #[arg(long)]
    pub generate: bool,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub kernel_side: Option<usize>,
    #[arg(long)]
    pub kernel_decay: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthesisArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// One dataset per array size; repeat the flag.
    #[arg(long)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub generate: bool,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReproduceTarget {
    Table1,
    Table2,
    Fig12,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match commands::execute(&cli, &argv) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

/// Entry point used by the binary.
pub fn main() -> std::process::ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .try_init();
    let code = run(std::env::args_os());
    std::process::ExitCode::from(code as u8)
}
