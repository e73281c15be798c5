//! `scrn`: generate datasets, check separability, construct, train,
//! decompose, plot and verify sign-constrained rectifier networks.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage error, 3 internal error.
//! Failures print a one-line JSON object to stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scrn::ScrnError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "scrn", version, about = "Sign-constrained rectifier networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Report separability of classes in a dataset.
    Check(CheckArgs),
    /// Build a separating network directly from the data.
    Construct(ConstructArgs),
    /// Train a network with majorization-minimization.
    Train(TrainArgs),
    /// Split the data by the model's activation patterns.
    Decompose(DecomposeArgs),
    /// Render a 2-D dataset (and optionally a model and report) as SVG.
    Plot(PlotArgs),
    /// Run the randomized property suites.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum GenKind {
    /// The four XOR corners.
    Xor {
        #[arg(long)]
        out: PathBuf,
    },
    /// Two concentric rings, the outer one with an optional center point.
    Rings {
        #[arg(long, default_value_t = 8)]
        inner: usize,
        #[arg(long, default_value_t = 8)]
        outer: usize,
        #[arg(long, default_value_t = 1.0)]
        rin: f64,
        #[arg(long, default_value_t = 3.0)]
        rout: f64,
        #[arg(long)]
        no_center: bool,
        #[arg(long, default_value_t = 0.1)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Well-separated blobs, pairwise mutually convexly separable.
    Blobs {
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = 4.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CheckMode {
    Linear,
    Convex,
    MutualConvex,
    PairwiseLinear,
    PairwiseMutualConvex,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    data: PathBuf,
    /// Two class labels `a,b`; ignored by the pairwise modes.
    #[arg(long, default_value = "0,1")]
    classes: String,
    #[arg(long, value_enum)]
    mode: CheckMode,
    #[arg(long, default_value_t = scrn::DEFAULT_TOL)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Shl,
    ShlMulti,
    Thl,
    ThlMulti,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Label of the positive class for binary methods; all other labels
    /// form the negative set.
    #[arg(long, default_value_t = 0)]
    positive: usize,
    /// Drop hidden nodes that are not needed to cover the negatives.
    #[arg(long)]
    merge: bool,
    #[arg(long, default_value_t = scrn::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArchArg {
    Shl,
    Thl,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Constructive,
    Warm,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    arch: ArchArg,
    /// `l` for shl, `l1,l2` for thl.
    #[arg(long, default_value = "2")]
    hidden: String,
    #[arg(long, default_value_t = scrn::train::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    init: InitArg,
    /// Starting model for `--init warm`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    max_outer: usize,
    #[arg(long, default_value_t = 2000)]
    inner_budget: usize,
    #[arg(long, default_value_t = 1e-8)]
    ftol: f64,
    #[arg(long, default_value_t = 0)]
    positive: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Record wall-clock time in the trace (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecomposeMode {
    Shl,
    Thl,
    Drill,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    mode: DecomposeMode,
    #[arg(long, default_value_t = 0)]
    positive: usize,
    #[arg(long, default_value_t = scrn::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Positive label used when the report was produced.
    #[arg(long, default_value_t = 0)]
    positive: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Geometry,
    Surrogates,
    Descent,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Maps a library error to the exit-code contract.
fn exit_code(e: &ScrnError) -> u8 {
    match e {
        ScrnError::Config(_) | ScrnError::Io(_) | ScrnError::Parse { .. } => 2,
        ScrnError::DescentViolation { .. } | ScrnError::NonFinite { .. } => 3,
        _ => 1,
    }
}

pub(crate) struct Failure {
    error: ScrnError,
    extra: Option<(&'static str, serde_json::Value)>,
}

impl From<ScrnError> for Failure {
    fn from(error: ScrnError) -> Self {
        Failure { error, extra: None }
    }
}

fn report_failure(f: &Failure) -> ExitCode {
    let mut obj = json!({ "error": f.error.kind(), "message": f.error.to_string() });
    if let Some((k, v)) = &f.extra {
        obj[*k] = v.clone();
    }
    eprintln!("{obj}");
    ExitCode::from(exit_code(&f.error))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.to_string().lines().next().unwrap_or("").trim().to_string();
            eprintln!("{}", json!({ "error": "UsageError", "message": message }));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Gen { kind } => commands::gen(kind),
        Command::Check(a) => commands::check(a),
        Command::Construct(a) => commands::construct(a),
        Command::Train(a) => commands::train(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Plot(a) => commands::plot(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(&f),
    }
}
