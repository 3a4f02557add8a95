use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use olsaudit_core::certificate::{AuditError, Method};
use olsaudit_core::data::{self, DataError, Dataset, DidPanel};
use olsaudit_core::miqcp::{self, mps, Mode};
use olsaudit_core::oracle::{self, OracleError, OracleOutcome};
use olsaudit_core::report::{run_audit, AuditInput, AuditOptions};

#[derive(Parser)]
#[command(name = "olsaudit", version, about = "Bounds on how many samples must be dropped to flip an OLS coefficient's sign")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run auditing methods and write a JSON report.
    Audit(AuditArgs),
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Exact stability by enumeration (small instances only).
    Oracle(OracleArgs),
    /// Write the bilinear program in MPS format.
    ExportMps(ExportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Regression CSV; every column but the response is a covariate.
    #[arg(long, conflicts_with = "did", required_unless_present = "did")]
    data: Option<PathBuf>,
    /// Panel CSV with columns id, before, after, treated.
    #[arg(long)]
    did: Option<PathBuf>,
    /// Covariate whose sign is audited.
    #[arg(long, required_unless_present = "did")]
    target: Option<String>,
    #[arg(long, default_value = "y")]
    response: String,
    /// Append an intercept column.
    #[arg(long)]
    intercept: bool,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated subset of amip, greedy, exact-binary, exact-did, spectral, miqcp-frac, miqcp-int, oracle.
    #[arg(long, value_delimiter = ',', default_value = "amip,greedy,exact-binary,exact-did,spectral")]
    methods: Vec<String>,
    /// Branch-and-bound time limit per mode.
    #[arg(long, default_value_t = 10.0)]
    time_limit_s: f64,
    /// Coefficient box for the branch-and-bound (default 1e3 * max(1, |β|∞)).
    #[arg(long)]
    beta_box: Option<f64>,
    /// Largest removal size tried by the oracle.
    #[arg(long, default_value_t = 3)]
    max_k: usize,
    /// Report path; the table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run methods concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Synth2d,
    Synth4d,
}

#[derive(Args)]
struct GenerateArgs {
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 3)]
    max_k: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fractional,
    Integral,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "integral")]
    mode: ModeArg,
    #[arg(long)]
    beta_box: Option<f64>,
    /// Add the constraint Σw >= 1.
    #[arg(long)]
    safeguard: bool,
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Parse(String),
    Shape(String),
    Resource(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Shape(_) => 3,
            CliError::Resource(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Shape(m) | CliError::Resource(m) => m,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io(_) | DataError::Csv(_) | DataError::Parse { .. } => CliError::Parse(e.to_string()),
            _ => CliError::Shape(e.to_string()),
        }
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        CliError::Shape(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => CliError::Resource(e.to_string()),
            OracleError::Audit(a) => a.into(),
        }
    }
}

fn load_rows(args: &DataArgs, path: &Path) -> Result<Dataset, CliError> {
    let target = args.target.as_deref().ok_or_else(|| CliError::Parse("--target is required with --data".into()))?;
    Ok(data::load_csv(path, target, &args.response, args.intercept)?)
}

fn load_input(args: &DataArgs) -> Result<(AuditInput, String), CliError> {
    match (&args.data, &args.did) {
        (Some(p), None) => Ok((AuditInput::Rows(load_rows(args, p)?), p.display().to_string())),
        (None, Some(p)) => {
            let panel: DidPanel = data::load_did_csv(p)?;
            Ok((AuditInput::Panel(panel), p.display().to_string()))
        }
        _ => Err(CliError::Parse("give exactly one of --data or --did".into())),
    }
}

fn time_limit(secs: f64) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(secs).map_err(|_| CliError::Parse(format!("invalid time limit {secs}")))
}

fn cmd_audit(args: AuditArgs) -> Result<(), CliError> {
    let methods = args
        .methods
        .iter()
        .map(|m| Method::parse(m.trim()).ok_or_else(|| CliError::Parse(format!("unknown method {m:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if args.beta_box.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
        return Err(CliError::Parse("--beta-box must be positive and finite".into()));
    }
    let (input, path) = load_input(&args.data)?;
    let opts = AuditOptions {
        methods,
        time_limit: time_limit(args.time_limit_s)?,
        beta_box: args.beta_box,
        max_k: args.max_k,
        greedy_max_iters: None,
        parallel: args.parallel,
    };
    let report = run_audit(&input, Some(&path), &opts);
    print!("{}", report.to_table());
    if let Some(out) = args.out {
        std::fs::write(&out, report.to_json() + "\n").map_err(|e| CliError::Parse(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let ds = match args.kind {
        Kind::Synth2d if args.n >= 2 => data::synth_2d(args.n, args.seed),
        Kind::Synth4d if args.n >= 4 => data::synth_4d(args.n, args.seed),
        _ => return Err(CliError::Parse(format!("n = {} is too small", args.n))),
    };
    data::write_csv(&ds, &args.out)?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let (input, _) = load_input(&args.data)?;
    let outcome = match &input {
        AuditInput::Rows(ds) => oracle::brute_force_stability(ds, args.max_k)?,
        AuditInput::Panel(panel) => oracle::brute_force_did(&data::panel_view(panel)?, args.max_k)?,
    };
    match outcome {
        OracleOutcome::Flip { k, removed } => println!("stability {k}; removing {removed:?}"),
        OracleOutcome::NoFlipWithin(k) => println!("no flip with at most {k} removals"),
    }
    Ok(())
}

fn cmd_export_mps(args: ExportArgs) -> Result<(), CliError> {
    let ds = match &args.data.data {
        Some(p) => load_rows(&args.data, p)?,
        None => return Err(CliError::Shape("export-mps needs a regression dataset (--data)".into())),
    };
    let mode = match args.mode {
        ModeArg::Fractional => Mode::Fractional,
        ModeArg::Integral => Mode::Integral,
    };
    let beta_box = match args.beta_box {
        Some(b) if b > 0.0 && b.is_finite() => b,
        Some(_) => return Err(CliError::Parse("--beta-box must be positive and finite".into())),
        None => miqcp::default_beta_box(&ds)?,
    };
    let model = miqcp::build_model(&ds, mode, beta_box, args.safeguard)?;
    mps::export_mps(&model, &args.out).map_err(|e| CliError::Parse(format!("{}: {e}", args.out.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Audit(a) => cmd_audit(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::ExportMps(a) => cmd_export_mps(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
