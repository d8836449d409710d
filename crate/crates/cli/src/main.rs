//! `sparselab` — command-line front end for the sparse-regression laboratory.
//!
//! Every subcommand prints a JSON envelope `{command, timestamp, result}` on
//! standard output; `timestamp` is the only field that varies between
//! identically-seeded runs.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sparselab::analysis::{self, CutoffRule};
use sparselab::conditions::{self, ConditionParams};
use sparselab::cv::{self, CvPlan};
use sparselab::error::Error;
use sparselab::estimators::{self, FitMethod};
use sparselab::io;
use sparselab::problem::{self, normalize_columns, DesignKind, SyntheticSpec};
use sparselab::RegressionProblem;
use sparselab_cli::experiments::{
    self, ComparisonConfig, ExperimentConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_FAILURE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "sparselab",
    about = "Sparse linear-regression laboratory",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic problem and write design/response/metadata files.
    Simulate(SimulateArgs),
    /// Fit one estimator at one regularization level.
    Fit(FitArgs),
    /// Evaluate the recoverability conditions on a design.
    Diagnose(DiagnoseArgs),
    /// Marginal-correlation variable screening.
    Screen(ScreenArgs),
    /// Candidate-variable importance analysis around a Lasso fit.
    Importance(ImportanceArgs),
    /// Cross-validate the regularization level.
    Cv(CvArgs),
    /// The l2 error-rate study over growing (n, p).
    RateExperiment(RateArgs),
    /// Out-of-sample Dantzig vs sup-norm comparison on spiky residuals.
    ObjectiveComparison(ComparisonArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignKindArg {
    IidGaussian,
    CollinearExample,
    CustomCorrelation,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "iid-gaussian")]
    design: DesignKindArg,
    /// Collinear-example α (X₂ = αX₁ + βX₃).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Collinear-example β.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Pairwise correlation for custom-correlation designs.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving design.csv, response.csv, beta0.csv, meta.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dantzig,
    Lasso,
    Chebyshev,
    SoftThreshold,
}

impl From<MethodArg> for FitMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dantzig => FitMethod::Dantzig,
            MethodArg::Lasso => FitMethod::Lasso,
            MethodArg::Chebyshev => FitMethod::Chebyshev,
            MethodArg::SoftThreshold => FitMethod::SoftThreshold,
        }
    }
}

#[derive(Args)]
struct ProblemFiles {
    /// Headerless n×p design CSV.
    #[arg(long)]
    design: PathBuf,
    /// Single-column response CSV.
    #[arg(long)]
    response: PathBuf,
    /// Skip the |X_j|² = n column renormalization of the inputs.
    #[arg(long)]
    no_normalize: bool,
}

impl ProblemFiles {
    fn load(&self) -> Result<RegressionProblem, Error> {
        let design = io::read_design(&self.design)?;
        let response = io::read_response(&self.response)?;
        let raw = RegressionProblem::new(design, response, None)?;
        if self.no_normalize {
            Ok(raw)
        } else {
            normalize_columns(&raw)
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    files: ProblemFiles,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Regularization level; defaults to σ̂·√(2n·log p) with σ̂ estimated.
    #[arg(long)]
    lambda: Option<f64>,
    /// Known noise level for the default λ (otherwise estimated).
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Headerless n×p design CSV.
    #[arg(long)]
    design: PathBuf,
    /// Sparsity level the conditions are evaluated at.
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = conditions::DEFAULT_ENUMERATION_BUDGET)]
    budget: u64,
    /// A1 bound k̄ (default: p).
    #[arg(long)]
    k_bar: Option<f64>,
    /// A2 bound k̲.
    #[arg(long, default_value_t = 1e-6)]
    k_underline: f64,
    /// A3(BTW) constant M in ρ_s ≤ M/s.
    #[arg(long, default_value_t = 1.0 / 32.0)]
    m_const: f64,
    /// A3(MY) bound ε.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum CutoffArg {
    Standardized,
    PaperLiteral,
}

#[derive(Args)]
struct ScreenArgs {
    #[command(flatten)]
    files: ProblemFiles,
    /// Known noise level (otherwise estimated from the data).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "standardized")]
    cutoff: CutoffArg,
}

#[derive(Args)]
struct ImportanceArgs {
    #[command(flatten)]
    files: ProblemFiles,
    /// Candidates examined: the K variables most correlated with Y.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.99)]
    r2_threshold: f64,
    /// λ for the underlying Lasso fit; defaults to 2σ̂·√(2n·log p).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CvMethodArg {
    Dantzig,
    Lasso,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    files: ProblemFiles,
    #[arg(long, value_enum, default_value = "lasso")]
    method: CvMethodArg,
    #[arg(long, default_value_t = cv::DEFAULT_FOLDS)]
    folds: usize,
    /// Grid-spacing constant c.
    #[arg(long, default_value_t = 1.0)]
    grid_c: f64,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional CSV destination for the (λ, mean error, std error) curve.
    #[arg(long)]
    error_curve: Option<PathBuf>,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    replications: usize,
    /// Cell sample sizes (p = 2n per cell).
    #[arg(long = "n", value_delimiter = ',', default_values_t = vec![200usize, 400, 800, 1600])]
    n_values: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    s: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

#[derive(Args)]
struct ComparisonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    replications: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Cosine dictionary size.
    #[arg(long, default_value_t = 30)]
    p: usize,
    #[arg(long, default_value_t = 200)]
    test_size: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.01)]
    spike_prob: f64,
    #[arg(long, default_value_t = 10.0)]
    spike_scale: f64,
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    command: &'static str,
    timestamp: u64,
    result: T,
}

fn emit<T: Serialize>(command: &'static str, result: T) -> Result<(), Error> {
    let envelope = Envelope {
        command,
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        result,
    };
    println!("{}", serde_json::to_string_pretty(&envelope)?);
    Ok(())
}

fn sigma_or_estimate(
    problem: &RegressionProblem,
    sigma: Option<f64>,
) -> Result<f64, Error> {
    match sigma {
        Some(s) if s > 0.0 => Ok(s),
        Some(_) => Err(Error::InvalidArgs("--sigma must be positive".into())),
        None => Ok(estimators::estimate_sigma(problem)?.sigma),
    }
}

#[derive(Serialize)]
struct SimulateOutput {
    n: usize,
    p: usize,
    s: usize,
    sigma: f64,
    design_kind: DesignKind,
    seed: u64,
    out_dir: String,
    beta0: Vec<f64>,
    beta0_support: Vec<usize>,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let design_kind = match args.design {
        DesignKindArg::IidGaussian => DesignKind::IidGaussian,
        DesignKindArg::CollinearExample => DesignKind::CollinearExample {
            alpha: args.alpha,
            beta: args.beta,
        },
        DesignKindArg::CustomCorrelation => DesignKind::CustomCorrelation { r: args.r },
    };
    let spec = SyntheticSpec {
        n: args.n,
        p: args.p,
        s: args.s,
        sigma: args.sigma,
        design_kind,
        seed: args.seed,
    };
    let (prob, beta0) = problem::simulate(&spec)?;
    io::write_problem(&args.out, &prob, Some(args.seed))?;
    io::write_response(&args.out.join("beta0.csv"), beta0.values())?;
    emit(
        "simulate",
        SimulateOutput {
            n: spec.n,
            p: spec.p,
            s: spec.s,
            sigma: spec.sigma,
            design_kind,
            seed: spec.seed,
            out_dir: args.out.display().to_string(),
            beta0_support: beta0.support(),
            beta0: beta0.values().to_vec(),
        },
    )
}

fn cmd_fit(args: &FitArgs) -> Result<(), Error> {
    let prob = args.files.load()?;
    let method: FitMethod = args.method.into();
    let lambda = match args.lambda {
        Some(l) => l,
        None => match method {
            FitMethod::Chebyshev => 0.0,
            _ => {
                let sigma = sigma_or_estimate(&prob, args.sigma)?;
                estimators::lambda_default(sigma, prob.n(), prob.p())
            }
        },
    };
    let fit = match method {
        FitMethod::Dantzig => estimators::dantzig_fit(&prob, lambda)?,
        FitMethod::Lasso => estimators::lasso_fit(&prob, lambda)?,
        FitMethod::Chebyshev => estimators::chebyshev_fit(&prob)?,
        FitMethod::SoftThreshold => {
            estimators::soft_threshold_fit(&prob, lambda / prob.n() as f64)
        }
    };
    emit("fit", fit)
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<(), Error> {
    let design = io::read_design(&args.design)?;
    let n = design.rows();
    let prob = RegressionProblem::new(design, vec![0.0; n], None)?;
    let mut params = ConditionParams::defaults(prob.p());
    if let Some(k) = args.k_bar {
        params.k_bar = k;
    }
    params.k_underline = args.k_underline;
    params.m_const = args.m_const;
    params.epsilon = args.epsilon;
    let report = conditions::evaluate_conditions(&prob, args.s, params, args.budget)?;
    emit("diagnose", report)
}

#[derive(Serialize)]
struct ScreenOutput {
    sigma_hat: f64,
    cutoff_rule: CutoffRule,
    cutoff: f64,
    statistics: Vec<f64>,
    selected: Vec<usize>,
}

fn cmd_screen(args: &ScreenArgs) -> Result<(), Error> {
    let prob = args.files.load()?;
    let sigma_hat = sigma_or_estimate(&prob, args.sigma)?;
    let rule = match args.cutoff {
        CutoffArg::Standardized => CutoffRule::Standardized,
        CutoffArg::PaperLiteral => CutoffRule::PaperLiteral,
    };
    let statistics = analysis::screen_statistics(&prob, sigma_hat)?;
    let selected = analysis::screen_with_cutoff(&prob, sigma_hat, rule)?;
    let p = prob.p() as f64;
    let cutoff = match rule {
        CutoffRule::Standardized => (2.0 * p.ln()).sqrt(),
        CutoffRule::PaperLiteral => (2.0 * p.ln() / prob.n() as f64).sqrt(),
    };
    emit(
        "screen",
        ScreenOutput {
            sigma_hat,
            cutoff_rule: rule,
            cutoff,
            statistics,
            selected,
        },
    )
}

#[derive(Serialize)]
struct ImportanceOutput {
    lambda: f64,
    fit: estimators::FitResult,
    report: analysis::ImportanceReport,
}

fn cmd_importance(args: &ImportanceArgs) -> Result<(), Error> {
    let prob = args.files.load()?;
    let lambda = match args.lambda {
        Some(l) => l,
        None => {
            let sigma = sigma_or_estimate(&prob, args.sigma)?;
            2.0 * estimators::lambda_default(sigma, prob.n(), prob.p())
        }
    };
    let fit = estimators::lasso_fit(&prob, lambda)?;
    let report =
        analysis::candidate_importance_procedure(&prob, &fit, args.k, args.r2_threshold)?;
    emit(
        "importance",
        ImportanceOutput {
            lambda,
            fit,
            report,
        },
    )
}

#[derive(Serialize)]
struct CvOutput {
    sigma_hat: f64,
    grid: Vec<f64>,
    result: cv::CvResult,
}

fn cmd_cv(args: &CvArgs) -> Result<(), Error> {
    let prob = args.files.load()?;
    let sigma_hat = sigma_or_estimate(&prob, args.sigma)?;
    if !(args.grid_c > 0.0) {
        return Err(Error::InvalidArgs("--grid-c must be positive".into()));
    }
    let grid = cv::default_grid(&prob, sigma_hat, args.grid_c);
    let method = match args.method {
        CvMethodArg::Dantzig => FitMethod::Dantzig,
        CvMethodArg::Lasso => FitMethod::Lasso,
    };
    let plan = CvPlan::new(args.folds, grid.clone(), method, args.seed)
        .with_default_test_size(prob.n());
    let result = cv::cross_validate(&prob, &plan)?;
    if let Some(path) = &args.error_curve {
        let mut w = csv::Writer::from_path(path).map_err(sparselab::Error::Csv)?;
        w.write_record(["lambda", "mean_error", "std_error"])
            .map_err(sparselab::Error::Csv)?;
        for point in &result.table {
            w.write_record([
                point.lambda.to_string(),
                point.mean_error.to_string(),
                point.std_error.to_string(),
            ])
            .map_err(sparselab::Error::Csv)?;
        }
        w.flush()?;
    }
    emit(
        "cv",
        CvOutput {
            sigma_hat,
            grid,
            result,
        },
    )
}

fn cmd_rate(args: &RateArgs) -> Result<(), Error> {
    let mut config = ExperimentConfig::rate_defaults(args.seed, args.replications);
    config.cells = args
        .n_values
        .iter()
        .map(|&n| experiments::RateCell {
            n,
            p: 2 * n,
            s: args.s,
            sigma: args.sigma,
        })
        .collect();
    let result = experiments::run_rate_study(&config)?;
    emit("rate-experiment", result)
}

fn cmd_comparison(args: &ComparisonArgs) -> Result<(), Error> {
    let mut cfg = ComparisonConfig::defaults(args.seed, args.replications);
    cfg.n = args.n;
    cfg.p = args.p;
    cfg.test_size = args.test_size;
    cfg.sigma = args.sigma;
    cfg.spike_prob = args.spike_prob;
    cfg.spike_scale = args.spike_scale;
    let result = experiments::run_objective_comparison(&cfg)?;
    emit("objective-comparison", result)
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Screen(a) => cmd_screen(a),
        Command::Importance(a) => cmd_importance(a),
        Command::Cv(a) => cmd_cv(a),
        Command::RateExperiment(a) => cmd_rate(a),
        Command::ObjectiveComparison(a) => cmd_comparison(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successful exits; everything else is a
            // usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidArgs(_) | Error::InvalidSpec(_) | Error::Io(_) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            };
            ExitCode::from(code)
        }
    }
}
