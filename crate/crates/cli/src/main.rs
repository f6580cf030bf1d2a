mod commands;
mod render;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use wielandt_core::Tolerances;

#[derive(Parser)]
#[command(name = "wielandt", version, about = "Check, trace and certify Wielandt's eigenvalue inequality for Hermitian pairs")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct GlobalOpts {
    /// Equality tolerance, relative to 1 + ‖A‖_F + ‖B‖_F (also the certification tolerance unless --cert-tol is given)
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Certification residual tolerance, relative like --tol
    #[arg(long, global = true)]
    pub cert_tol: Option<f64>,
    /// Relative gap below which eigenvalues form one cluster
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub cluster_tol: f64,
    /// Largest accepted deviation from hermiticity in input files
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub herm_tol: f64,
    /// Uniform base samples for pencil traces
    #[arg(long, global = true, default_value_t = 65)]
    pub grid: usize,
    /// Upper limit for the maximal t₁ search
    #[arg(long, global = true, default_value_t = 10.0)]
    pub t_cap: f64,
    /// Largest n accepted by `scan`
    #[arg(long, global = true, default_value_t = wielandt_core::inequalities::DEFAULT_SCAN_CAP)]
    pub scan_cap: usize,
    /// Output format (default: csv for `trace`, json otherwise)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, env = "WIELANDT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file (a directory for `gen`)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Random,
    EqualityBlock,
    ExampleS4,
}

#[derive(Subcommand)]
pub enum Command {
    /// Wielandt's inequality for one index set
    Check {
        a: PathBuf,
        b: PathBuf,
        /// Comma separated 1-based indices, e.g. 1,3
        #[arg(long)]
        indices: String,
    },
    /// All index sets, sorted by slack, plus the Lidskii majorization check
    Scan {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Eigenvalue curves of A + tB and their crossings
    Trace {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t_lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t_hi: f64,
        /// Where to write the crossings JSON in csv mode (default: next to --out)
        #[arg(long)]
        crossings: Option<PathBuf>,
        /// Report crossings only at grid samples
        #[arg(long)]
        no_refine: bool,
    },
    /// Detect and certify equality
    Certify {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        indices: String,
        /// Verification samples per segment
        #[arg(long, default_value_t = 9)]
        samples: usize,
    },
    /// Re-verify a certificate file
    VerifyCert { certificate: PathBuf },
    /// First-order eigenvalue rates of A + zB at z = 0
    Rates { a: PathBuf, b: PathBuf },
    /// Write a matrix pair A.json, B.json and manifest.json into --out
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// α₁,α₂,α₃ for example-s4
        #[arg(long, default_value = "3,1,1", allow_hyphen_values = true)]
        alpha: String,
        /// β₁,β₂,β₃ for example-s4
        #[arg(long, default_value = "2,1,0", allow_hyphen_values = true)]
        beta: String,
    },
    /// Look for planted equality instances whose certificate needs r ≥ 2
    SearchR {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
}

/// Echoed in every report.
#[derive(Serialize)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub grid_size: usize,
    pub t_cap: f64,
    pub scan_cap: usize,
    pub format: Format,
    pub seed: u64,
}

pub struct Exit {
    pub code: u8,
    pub message: String,
}

impl Exit {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<wielandt_core::Error> for Exit {
    fn from(e: wielandt_core::Error) -> Self {
        Self::input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.opts, &cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
