use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cdcert_core::diagnostics::{verify_result, Violation};
use cdcert_core::penalty::{PenaltyFamily, PenaltySpec};
use cdcert_core::problems::{
    self, generate, load_problem, load_problem_pair, InstanceMeta, SyntheticSpec, DIAGNOSIS_SCHEMA,
    PATH_SCHEMA,
};
use cdcert_core::solver::{
    regularization_path, solve, Init, Problem, SolveResult, SolveStatus, SolverOptions, SweepOrder,
    DEFAULT_MAX_SWEEPS, DEFAULT_REFRESH_PERIOD,
};
use cdcert_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cdcert",
    version,
    about = "Coordinate descent for Lasso/SCAD/MCP penalized least squares, with per-sweep convergence certificates",
    after_help = "Exit codes: 0 success, 1 input errors, 2 completed with findings \
                  (fit/path: sweep budget exhausted; diagnose: violations found)."
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance of b = Ax* + xi and write it as CSV
    /// plus a JSON metadata sidecar.
    Gen(GenArgs),
    /// Solve one penalized least-squares problem.
    Fit(FitArgs),
    /// Solve along a descending lambda grid with warm starts.
    Path(PathArgs),
    /// Re-check every certificate a stored result claims.
    Diagnose(DiagnoseArgs),
    /// Sample penalty value, derivative and threshold curves as CSV.
    Curves(CurvesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    Lasso,
    Scad,
    Mcp,
}

impl From<PenaltyArg> for PenaltyFamily {
    fn from(p: PenaltyArg) -> Self {
        match p {
            PenaltyArg::Lasso => PenaltyFamily::Lasso,
            PenaltyArg::Scad => PenaltyFamily::Scad,
            PenaltyArg::Mcp => PenaltyFamily::Mcp,
        }
    }
}

#[derive(Args)]
struct ProblemInput {
    /// Combined problem CSV: first column b, remaining columns A.
    #[arg(long, value_name = "CSV", conflicts_with_all = ["design", "response"],
          required_unless_present = "design")]
    problem: Option<PathBuf>,
    /// Design matrix CSV (pair with --response).
    #[arg(long, value_name = "CSV", requires = "response")]
    design: Option<PathBuf>,
    /// Response CSV, one column (pair with --design).
    #[arg(long, value_name = "CSV", requires = "design")]
    response: Option<PathBuf>,
}

impl ProblemInput {
    fn load(&self) -> Result<Problem> {
        match (&self.problem, &self.design, &self.response) {
            (Some(p), _, _) => load_problem(p),
            (None, Some(a), Some(b)) => load_problem_pair(a, b),
            _ => unreachable!("clap enforces the group"),
        }
    }
}

#[derive(Args)]
struct PenaltyFlags {
    /// Penalty family.
    #[arg(long, value_enum)]
    penalty: PenaltyArg,
    /// Regularization weight (> 0).
    #[arg(long)]
    lambda: f64,
    /// Concavity parameter: SCAD needs tau > 2, MCP needs tau > 1
    /// (ignored for lasso).
    #[arg(long)]
    tau: Option<f64>,
}

impl PenaltyFlags {
    fn spec(&self) -> Result<PenaltySpec> {
        build_spec(self.penalty, self.lambda, self.tau)
    }
}

fn build_spec(penalty: PenaltyArg, lambda: f64, tau: Option<f64>) -> Result<PenaltySpec> {
    let family: PenaltyFamily = penalty.into();
    let tau = match (family, tau) {
        (PenaltyFamily::Lasso, t) => t.unwrap_or(0.0),
        (_, Some(t)) => t,
        (PenaltyFamily::Scad, None) => {
            return Err(Error::InvalidPenalty("SCAD requires --tau (> 2)".into()))
        }
        (PenaltyFamily::Mcp, None) => {
            return Err(Error::InvalidPenalty("MCP requires --tau (> 1)".into()))
        }
    };
    PenaltySpec::new(family, lambda, tau)
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Cyclic,
    Random,
}

#[derive(Args)]
struct SolverFlags {
    /// Stop once the sweep step norm drops to this value.
    #[arg(long, env = "CDCERT_TOL", default_value_t = cdcert_core::solver::DEFAULT_TOL)]
    tol: f64,
    /// Sweep budget.
    #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    /// Record the per-sweep decrease/witness certificates in the trace
    /// (adds O(p^2 n) work per sweep).
    #[arg(long)]
    certificates: bool,
    /// Recompute the residual from scratch every this many sweeps.
    #[arg(long, default_value_t = DEFAULT_REFRESH_PERIOD)]
    refresh_period: usize,
    /// Coordinate visit order. The certificates assume cyclic.
    #[arg(long, value_enum, default_value = "cyclic")]
    order: OrderArg,
    /// Seed for the random visit order.
    #[arg(long, default_value_t = 0)]
    order_seed: u64,
}

impl SolverFlags {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            max_sweeps: self.max_sweeps,
            tol: self.tol,
            init: Init::Zeros,
            collect_certificates: self.certificates,
            residual_refresh_period: self.refresh_period,
            order: match self.order {
                OrderArg::Cyclic => SweepOrder::Cyclic,
                OrderArg::Random => SweepOrder::Random {
                    seed: self.order_seed,
                },
            },
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Sample count (rows of A).
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Feature count (columns of A).
    #[arg(long, default_value_t = 400)]
    p: usize,
    /// Nonzeros in the ground truth.
    #[arg(long, default_value_t = 10)]
    sparsity: usize,
    /// Smallest nonzero magnitude.
    #[arg(long, default_value_t = 0.5)]
    signal_low: f64,
    /// Largest nonzero magnitude.
    #[arg(long, default_value_t = 1.5)]
    signal_high: f64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    noise_sigma: f64,
    /// Equi-correlation of the design columns, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    correlation: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Where to write the combined problem CSV.
    #[arg(long, value_name = "CSV")]
    out_problem: PathBuf,
    /// Where to write the metadata JSON (default: problem path with a
    /// .meta.json extension).
    #[arg(long, value_name = "JSON")]
    out_meta: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: ProblemInput,
    #[command(flatten)]
    penalty: PenaltyFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write the result JSON here instead of stdout.
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    input: ProblemInput,
    /// Penalty family.
    #[arg(long, value_enum)]
    penalty: PenaltyArg,
    /// Concavity parameter (as for fit).
    #[arg(long)]
    tau: Option<f64>,
    /// Explicit descending lambda grid, comma-separated.
    #[arg(long, value_name = "L1,L2,...", conflicts_with_all = ["num_lambdas", "lambda_min_ratio"])]
    lambdas: Option<String>,
    /// Number of grid points of the geometric grid from lambda_max down.
    #[arg(long, default_value_t = 20)]
    num_lambdas: usize,
    /// Ratio of the smallest grid lambda to lambda_max.
    #[arg(long, default_value_t = 0.1)]
    lambda_min_ratio: f64,
    /// Solve each lambda from zeros instead of the previous solution.
    #[arg(long)]
    no_warm_start: bool,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write the path JSON here instead of stdout.
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Stored result JSON produced by fit.
    #[arg(long, value_name = "JSON")]
    result: PathBuf,
    #[command(flatten)]
    input: ProblemInput,
    /// Worker threads for the per-sweep re-checks.
    #[arg(long, env = "CDCERT_DIAGNOSE_THREADS", default_value_t = 1)]
    threads: usize,
    /// Write the diagnosis JSON here instead of stdout.
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    penalty: PenaltyFlags,
    /// Left end of the sample range.
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    t_min: f64,
    /// Right end of the sample range.
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    t_max: f64,
    /// Number of sample points (>= 2).
    #[arg(long, default_value_t = 601)]
    samples: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen(args) => run_gen(args),
        Command::Fit(args) => run_fit(args),
        Command::Path(args) => run_path(args),
        Command::Diagnose(args) => run_diagnose(args),
        Command::Curves(args) => run_curves(args),
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(Error::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run_gen(args: GenArgs) -> Result<u8> {
    let spec = SyntheticSpec {
        n: args.n,
        p: args.p,
        sparsity: args.sparsity,
        signal_low: args.signal_low,
        signal_high: args.signal_high,
        noise_sigma: args.noise_sigma,
        correlation: args.correlation,
        seed: args.seed,
    };
    let instance = generate(&spec)?;
    problems::save_problem_csv(&instance.problem, &args.out_problem)?;
    let meta_path = args.out_meta.clone().unwrap_or_else(|| {
        let mut p = args.out_problem.clone();
        p.set_extension("meta.json");
        p
    });
    let meta = InstanceMeta::new(spec, instance.x_star.clone());
    problems::save_instance_meta(&meta, &meta_path)?;
    eprintln!(
        "wrote {} ({}x{}, {} nonzeros, lambda_max = {})",
        args.out_problem.display(),
        instance.problem.n(),
        instance.problem.p(),
        instance.x_star.iter().filter(|&&v| v != 0.0).count(),
        instance.problem.lambda_max()
    );
    eprintln!("wrote {}", meta_path.display());
    Ok(0)
}

fn run_fit(args: FitArgs) -> Result<u8> {
    let problem = args.input.load()?;
    let spec = args.penalty.spec()?;
    let opts = args.solver.options();
    let result = solve(&problem, &spec, &opts)?;
    let json = problems::result_to_json(&result)?;
    emit(args.out.as_deref(), &json)?;
    log_result(&result);
    Ok(match result.status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxSweeps => 2,
    })
}

fn log_result(result: &SolveResult) {
    eprintln!(
        "{} after {} sweeps; objective {:.12e}; stationarity gap {:.3e}; support {}",
        result.status,
        result.sweeps,
        result.objective,
        result.stationarity_gap,
        result.support_size
    );
}

#[derive(Serialize)]
struct PathDocument {
    schema: &'static str,
    family: PenaltyFamily,
    tau: f64,
    warm_start: bool,
    lambdas: Vec<f64>,
    support_sizes: Vec<usize>,
    results: Vec<SolveResult>,
}

fn run_path(args: PathArgs) -> Result<u8> {
    let problem = args.input.load()?;
    let family: PenaltyFamily = args.penalty.into();
    let tau = match (family, args.tau) {
        (PenaltyFamily::Lasso, t) => t.unwrap_or(0.0),
        (_, Some(t)) => t,
        _ => return Err(Error::InvalidPenalty("SCAD/MCP paths require --tau".into())),
    };
    let lambdas: Vec<f64> = match &args.lambdas {
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidOptions(format!("bad lambda {s:?}: {e}")))
            })
            .collect::<Result<_>>()?,
        None => {
            if args.num_lambdas < 1 {
                return Err(Error::InvalidOptions("--num-lambdas must be >= 1".into()));
            }
            if !(args.lambda_min_ratio > 0.0 && args.lambda_min_ratio < 1.0) {
                return Err(Error::InvalidOptions(
                    "--lambda-min-ratio must lie in (0, 1)".into(),
                ));
            }
            let lmax = problem.lambda_max();
            if lmax <= 0.0 {
                return Err(Error::InvalidOptions(
                    "lambda_max is 0 (b is orthogonal to every column); supply --lambdas".into(),
                ));
            }
            let m = args.num_lambdas;
            (0..m)
                .map(|i| {
                    let frac = if m == 1 {
                        0.0
                    } else {
                        i as f64 / (m - 1) as f64
                    };
                    lmax * args.lambda_min_ratio.powf(frac)
                })
                .collect()
        }
    };
    let warm_start = !args.no_warm_start;
    let results = regularization_path(
        &problem,
        family,
        tau,
        &lambdas,
        &args.solver.options(),
        warm_start,
    )?;
    for w in results.windows(2) {
        if w[1].support_size < w[0].support_size {
            eprintln!(
                "note: support shrank from {} to {} between lambda {} and {}",
                w[0].support_size,
                w[1].support_size,
                w[0].penalty.lambda(),
                w[1].penalty.lambda()
            );
        }
    }
    let any_max_sweeps = results.iter().any(|r| r.status == SolveStatus::MaxSweeps);
    let doc = PathDocument {
        schema: PATH_SCHEMA,
        family,
        tau,
        warm_start,
        lambdas,
        support_sizes: results.iter().map(|r| r.support_size).collect(),
        results,
    };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    emit(args.out.as_deref(), &json)?;
    eprintln!(
        "path of {} lambdas done; supports {:?}",
        doc.support_sizes.len(),
        doc.support_sizes
    );
    Ok(if any_max_sweeps { 2 } else { 0 })
}

#[derive(Serialize)]
struct DiagnosisDocument {
    schema: &'static str,
    result_file: String,
    threads: usize,
    checked_sweeps: usize,
    violations: Vec<Violation>,
}

fn run_diagnose(args: DiagnoseArgs) -> Result<u8> {
    let threads = args.threads.max(1);
    let problem = args.input.load()?;
    let result = problems::load_result(&args.result)?;
    let violations = verify_result(&problem, &result, threads);
    let doc = DiagnosisDocument {
        schema: DIAGNOSIS_SCHEMA,
        result_file: args.result.display().to_string(),
        threads,
        checked_sweeps: result.trace.len(),
        violations,
    };
    let mut json = serde_json::to_string_pretty(&doc)?;
    json.push('\n');
    emit(args.out.as_deref(), &json)?;
    if doc.violations.is_empty() {
        eprintln!(
            "all certificates verified over {} sweeps",
            doc.checked_sweeps
        );
        Ok(0)
    } else {
        for v in &doc.violations {
            match v.sweep {
                Some(s) => eprintln!("violation at sweep {s}: {} ({})", v.check, v.detail),
                None => eprintln!("violation: {} ({})", v.check, v.detail),
            }
        }
        Ok(2)
    }
}

fn run_curves(args: CurvesArgs) -> Result<u8> {
    let spec = args.penalty.spec()?;
    if args.samples < 2 {
        return Err(Error::InvalidOptions(format!(
            "--samples must be >= 2, got {}",
            args.samples
        )));
    }
    if !args.t_min.is_finite() || !args.t_max.is_finite() || args.t_min >= args.t_max {
        return Err(Error::InvalidOptions(format!(
            "need finite t_min < t_max, got [{}, {}]",
            args.t_min, args.t_max
        )));
    }
    let mut csv = format!(
        "# cdcert curves penalty={} lambda={} tau={} t_min={} t_max={} samples={}\n",
        spec.family(),
        spec.lambda(),
        spec.tau(),
        args.t_min,
        args.t_max,
        args.samples
    );
    csv.push_str("t,penalty,derivative,threshold\n");
    let m = args.samples - 1;
    for i in 0..=m {
        // Endpoint-exact interpolation; a symmetric range hits t = 0 exactly.
        let t = (args.t_min * (m - i) as f64 + args.t_max * i as f64) / m as f64;
        let value = spec.value(t);
        let threshold = spec.threshold(t);
        match spec.derivative(t) {
            Ok(d) => {
                let _ = writeln!(csv, "{t},{value},{d},{threshold}");
            }
            Err(_) => {
                // nonsmooth at the origin: leave the derivative cell empty
                let _ = writeln!(csv, "{t},{value},,{threshold}");
            }
        }
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(0)
}
