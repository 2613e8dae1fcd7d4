//! Command-line front end: argument and config parsing, dispatch to the
//! `qkd-core` operations, and CSV emitters.
//!
//! Exit status is 0 on success, 2 on invalid input, 3 when a verification
//! fails (an inequality does not hold or an estimate exceeds its bound) and 1
//! on I/O errors.

use std::fmt;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qkd_core::par::Exec;

pub mod commands;
pub mod config;
pub mod report;

/// Failure classes that map to process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Verification(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qkd_core::Error> for CliError {
    fn from(e: qkd_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qkd",
    version,
    about = "Finite-key BB84 simulator, bound calculator and verifier"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON file with default flag values, keyed by long flag name.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<String>,

    /// Run trials on one thread instead of the rayon pool.
    #[arg(long, global = true)]
    pub sequential: bool,

    /// Write CSV here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }
}

pub const SUBCOMMANDS: [&str; 5] = ["simulate", "bound", "curve", "verify", "mc-code"];

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the protocol repeatedly over a classical flip channel.
    Simulate(SimulateArgs),
    /// Itemized finite-key bound, one row per (r/n, m/n) pair.
    Bound(BoundArgs),
    /// Asymptotic secure region boundary of BB84-INFO-Z.
    Curve(CurveArgs),
    /// Exact quantum verification campaigns over random attacks.
    Verify(VerifyArgs),
    /// Monte Carlo estimates for random linear codes.
    McCode(McCodeArgs),
}

/// Protocol parameters shared by `simulate` and `bound`.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long, default_value = "bb84")]
    pub variant: String,
    /// Number of INFO bits.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "n-z")]
    pub n_z: Option<usize>,
    #[arg(long = "n-x")]
    pub n_x: Option<usize>,
    #[arg(long = "t-z")]
    pub t_z: Option<usize>,
    #[arg(long = "t-x")]
    pub t_x: Option<usize>,
    /// Probability of the z basis (efficient variant).
    #[arg(long)]
    pub p: Option<f64>,
    /// Single error threshold.
    #[arg(long)]
    pub pa: Option<f64>,
    /// z-basis threshold of bb84-info-z (defaults to --pa).
    #[arg(long = "p-az")]
    pub p_az: Option<f64>,
    /// x-basis threshold of bb84-info-z (defaults to --pa).
    #[arg(long = "p-ax")]
    pub p_ax: Option<f64>,
    #[arg(long = "eps-sec", default_value_t = 0.0)]
    pub eps_sec: f64,
    #[arg(long = "eps-rel", default_value_t = 0.0)]
    pub eps_rel: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Syndrome length.
    #[arg(long, default_value_t = 0)]
    pub r: usize,
    /// Key length.
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    /// Flip probability applied in both bases.
    #[arg(long)]
    pub flip: Option<f64>,
    #[arg(long = "flip-z")]
    pub flip_z: Option<f64>,
    #[arg(long = "flip-x")]
    pub flip_x: Option<f64>,
    #[arg(long)]
    pub runs: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Real)]
    pub mode: ModeArg,
    /// Largest number of coset candidates Bob's decoder may examine.
    #[arg(long = "decode-budget", default_value_t = qkd_core::coding::DEFAULT_DECODE_BUDGET)]
    pub decode_budget: u64,
    /// Iterations of the information-set fallback once the exact search gives
    /// up (0 disables it).
    #[arg(long = "isd-iterations", default_value_t = qkd_core::coding::DEFAULT_ISD_ITERATIONS)]
    pub isd_iterations: u32,
    /// Also write one text record per run to this file.
    #[arg(long, value_name = "PATH")]
    pub transcripts: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Real,
    InvertedInfoBasis,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Syndrome lengths as fractions of n (comma separated).
    #[arg(long = "r-frac", value_delimiter = ',', required = true)]
    pub r_frac: Vec<f64>,
    /// Key lengths as fractions of n (comma separated).
    #[arg(long = "m-frac", value_delimiter = ',', required = true)]
    pub m_frac: Vec<f64>,
    /// Drop the 2m prefactor of the secrecy radical. The result is not a proven bound.
    #[arg(long = "drop-m-factor")]
    pub drop_m_factor: bool,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value = "bb84-info-z")]
    pub variant: String,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Quantum,
    Composable,
    Symmetry,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub cases: Option<u64>,
    /// Total qubits N (quantum and symmetry suites).
    #[arg(long = "n-qubits", default_value_t = 3)]
    pub n_qubits: usize,
    /// INFO bits (quantum and symmetry suites; composable uses N = 2n).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub r: usize,
    /// Key length (composable suite).
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Test threshold (composable suite).
    #[arg(long, default_value_t = 0.0)]
    pub pa: f64,
    /// Dimension of Eve's probe; defaults to 2^N.
    #[arg(long = "probe-dim")]
    pub probe_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    /// Decoding failure of a weight-t error.
    Failure,
    /// Low-weight word in the coset ell + C.
    Coset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Exact,
    UniformUpTo,
}

#[derive(Debug, Args)]
pub struct McCodeArgs {
    #[arg(long, value_enum, default_value_t = Estimator::Failure)]
    pub estimator: Estimator,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long = "weight-mode", value_enum, default_value_t = WeightArg::Exact)]
    pub weight_mode: WeightArg,
    /// Coset representative for the coset estimator; all zeros by default.
    #[arg(long)]
    pub ell: Option<String>,
}

/// Parses `args` (including the program name), runs the command, writes its
/// CSV to `--out` or `stdout`, and returns the exit status. Diagnostics go to
/// `stderr`.
pub fn run(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = match config::merge(args, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(&cli, stderr) {
        Ok(out) => {
            finish(&cli, &out.csv, stdout, stderr).map_or_else(|e| report_error(&e, stderr), |_| 0)
        }
        Err(commands::Failure { error, csv }) => {
            if let Some(csv) = csv {
                if let Err(e) = finish(&cli, &csv, stdout, stderr) {
                    return report_error(&e, stderr);
                }
            }
            report_error(&error, stderr)
        }
    }
}

fn finish(
    cli: &Cli,
    csv: &str,
    stdout: &mut dyn Write,
    _stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))
        }
        None => stdout
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn report_error(e: &CliError, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "{e}");
    e.exit_code()
}
