use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use shiftadjust::experiment::{run_experiment, ExperimentConfig, Status};
use shiftadjust::shiftsim::ShiftSpec;
use shiftadjust::solver::brute_force_oracle;
use shiftadjust::{
    adjust, io, mean_loss, synthetic, AdjusterKind, AdjustmentReport, ClassDistribution, Divergence, Error, Method,
    OracleOptions, ShiftMethod, SolverOptions,
};

#[derive(Parser)]
#[command(name = "shiftadjust", version, about = "Adjust classifier probabilities to a known class distribution")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Residual tolerance for the solvers.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tolerance: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adjust a prediction matrix to a target class distribution.
    Adjust(AdjustArgs),
    /// Inject dataset shift into a dataset directory.
    Shift(ShiftArgs),
    /// Mean loss of predictions against labels.
    Evaluate(EvaluateArgs),
    /// Run an experiment grid described by a JSON config.
    Experiment(ExperimentArgs),
    /// Brute-force bounded adjustment for small instances.
    Oracle(OracleArgs),
    /// Write a synthetic dataset directory.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct AdjustArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Comma-separated target proportions.
    #[arg(long)]
    target_dist: String,
    /// One of ppa, additive, multiplicative, uga, bga.
    #[arg(long)]
    method: String,
    #[arg(long)]
    divergence: Option<String>,
    /// Original class distribution, required by ppa.
    #[arg(long)]
    old_dist: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShiftArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// One of prior, concept, covariate, combined.
    #[arg(long)]
    method: String,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    divergence: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; relative paths inside it resolve against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Log one line per task to standard error.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    target_dist: String,
    #[arg(long)]
    divergence: String,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 1_000_000)]
    iteration_cap: usize,
    /// Optional CSV for the minimizer.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    features: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Process failure: an exit code and a message for standard error.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => 3,
            Error::InfeasibleShift(_) | Error::NoMinorityClass => 4,
            Error::Domain(_) | Error::ZeroPrediction { .. } => 5,
            _ => 2,
        };
        Failure(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(2, msg.into())
}

fn parse_dist(text: &str) -> Result<ClassDistribution, Failure> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("'{s}' is not a number"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ClassDistribution::new(values)?)
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn report_json(kind: &AdjusterKind, rep: &AdjustmentReport) -> serde_json::Value {
    let divergence = match &kind.method {
        Method::Uga(d) | Method::Bga(d) => Some(d.name().to_owned()),
        _ => None,
    };
    json!({
        "method": kind.method.name(),
        "divergence": divergence,
        "bounded": rep.adjusted.bounded().is_some(),
        "objective": rep.objective,
        "row_residual": rep.row_residual,
        "column_residual": rep.column_residual,
        "stationarity_residual": rep.stationarity_residual,
        "iterations": rep.iterations,
        "duals": rep.duals,
    })
}

fn cmd_adjust(args: &AdjustArgs, opts: &SolverOptions) -> Result<(), Failure> {
    let divergence = args.divergence.as_deref().map(Divergence::from_name).transpose()?;
    let method =
        Method::from_name(&args.method, divergence).map_err(|e| usage(format!("{e} (pass --divergence brier|logloss)")))?;
    let old = match (&method, &args.old_dist) {
        (Method::Ppa, None) => return Err(usage("ppa requires --old-dist")),
        (_, Some(text)) => Some(parse_dist(text)?),
        (_, None) => None,
    };
    let pi = parse_dist(&args.target_dist)?;
    let p = io::read_predictions(&args.predictions)?;
    let kind = AdjusterKind::with_options(method, opts.clone());
    let report = adjust(&kind, &p, &pi, old.as_ref())?;
    io::write_predictions(&args.out, report.matrix())?;
    let sidecar = args.out.with_extension("json");
    let mut text = serde_json::to_string_pretty(&report_json(&kind, &report)).expect("serializable");
    text.push('\n');
    std::fs::write(&sidecar, text).map_err(Error::from)?;
    Ok(())
}

fn cmd_shift(args: &ShiftArgs, seed: u64) -> Result<(), Failure> {
    let spec = ShiftSpec { method: ShiftMethod::from_name(&args.method)?, epsilon: args.epsilon, seed };
    spec.validate()?;
    let ds = io::load_dataset(&args.dataset)?;
    let out = spec.apply(&ds)?;
    io::save_dataset(&args.out, &out)?;
    print_json(&json!({ "n": out.n(), "class_distribution": out.class_distribution() }));
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let d = Divergence::from_name(&args.divergence)?;
    let p = io::read_predictions(&args.predictions)?;
    let y = io::read_labels(&args.labels, Some(p.k()))?;
    if y.n() != p.n() {
        return Err(usage(format!("{} prediction rows but {} labels", p.n(), y.n())));
    }
    let loss = mean_loss(&d, &p, &y)?;
    print_json(&json!({ "mean_loss": loss, "n": p.n(), "k": p.k(), "adjusted_to": p.column_means() }));
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn cmd_experiment(args: &ExperimentArgs, opts: &SolverOptions) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| usage(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    cfg.dataset_dir = resolve(base, &cfg.dataset_dir);
    cfg.output = resolve(base, &cfg.output);
    cfg.summary = cfg.summary.as_deref().map(|s| resolve(base, s));
    let (rows, _) = run_experiment(&cfg, opts)?;
    if args.verbose {
        for r in &rows {
            eprintln!(
                "task {} {} eps={:.4} delta={} {} {}: {:?} {}",
                r.task_id,
                r.shift_method.name(),
                r.epsilon,
                r.delta,
                r.adjuster,
                r.divergence,
                r.status,
                r.message
            );
        }
    }
    let count = |s: Status| rows.iter().filter(|r| r.status == s).count();
    print_json(&json!({
        "rows": rows.len(),
        "ok": count(Status::Ok),
        "skipped": count(Status::Skipped),
        "solver_failure": count(Status::SolverFailure),
        "results": cfg.output,
        "summary": cfg.summary_path(),
    }));
    Ok(())
}

fn cmd_oracle(args: &OracleArgs, seed: u64) -> Result<(), Failure> {
    let d = Divergence::from_name(&args.divergence)?;
    let pi = parse_dist(&args.target_dist)?;
    let p = io::read_predictions(&args.predictions)?;
    let opts = OracleOptions { restarts: args.restarts, iteration_cap: args.iteration_cap, seed, ..Default::default() };
    let (a, objective) = brute_force_oracle(&d, &p, &pi, &opts)?;
    if let Some(out) = &args.out {
        io::write_predictions(out, &a)?;
    }
    print_json(&json!({ "objective": objective, "matrix": a }));
    Ok(())
}

fn cmd_generate(args: &GenerateArgs, seed: u64) -> Result<(), Failure> {
    let ds = synthetic::generate(args.n, args.k, args.features, seed)?;
    io::save_dataset(&args.out, &ds)?;
    print_json(&json!({ "n": ds.n(), "class_distribution": ds.class_distribution() }));
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    let opts = SolverOptions::with_tolerance(cli.tolerance);
    opts.validate()?;
    match &cli.command {
        Command::Adjust(a) => cmd_adjust(a, &opts),
        Command::Shift(a) => cmd_shift(a, cli.seed),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Experiment(a) => cmd_experiment(a, &opts),
        Command::Oracle(a) => cmd_oracle(a, cli.seed),
        Command::Generate(a) => cmd_generate(a, cli.seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
