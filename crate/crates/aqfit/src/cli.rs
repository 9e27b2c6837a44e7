//! The `aqfit` command line.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 when reading data or
//! fitting fails. Errors go to standard error as one JSON object per line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use aqfit_core::theorylab::{gq_divergence_demo, rate_check, simulate_study, SimStudyConfig};
use aqfit_core::{
    fit, recommend_k, wald_ci, FitOptions, Method, ModelSpec, Parameters, PointCount,
    QuadratureRule, RaneffFamily, RaneffParams, ResponseDispersion, ResponseFamily,
};

use crate::csvio::{fmt_f64, read_csv, CsvSchema, DataError};
use crate::json::{FitJson, GqJson, RateJson, RecommendJson, SimJson};

#[derive(Debug, Parser)]
#[command(
    name = "aqfit",
    version,
    about = "Fit generalized linear mixed models by adaptive Gauss-Hermite quadrature"
)]
pub struct Cli {
    /// Print human-readable tables on standard output instead of JSON
    #[arg(long, global = true, help_heading = "Global options")]
    pub pretty: bool,

    /// Cap on worker threads [default: number of cores]
    #[arg(
        long,
        global = true,
        env = "AQFIT_THREADS",
        value_name = "N",
        help_heading = "Global options"
    )]
    pub threads: Option<usize>,

    /// Progress messages on standard error (repeat for more)
    #[arg(short, long, global = true, action = ArgAction::Count, help_heading = "Global options")]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model to a grouped CSV dataset
    Fit(FitArgs),
    /// Recommended number of quadrature points for M groups of size at least m
    RecommendK(RecommendArgs),
    /// Simulate logistic random-intercept datasets and fit each with several k
    Simulate(SimulateArgs),
    /// Estimate the AQ error rate in the group size against a brute-force oracle
    RateCheck(RateArgs),
    /// Compare relative errors of non-adaptive and adaptive quadrature as groups grow
    GqDemo(GqArgs),
    /// Print Gauss-Hermite nodes and weights as CSV
    Rule(RuleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    #[value(name = "bernoulli_logit")]
    BernoulliLogit,
    #[value(name = "poisson_log")]
    PoissonLog,
    #[value(name = "gaussian_identity")]
    GaussianIdentity,
    #[value(name = "weibull_ph")]
    WeibullPh,
}

impl From<FamilyArg> for ResponseFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::BernoulliLogit => ResponseFamily::BernoulliLogit,
            FamilyArg::PoissonLog => ResponseFamily::PoissonLog,
            FamilyArg::GaussianIdentity => ResponseFamily::GaussianIdentity,
            FamilyArg::WeibullPh => ResponseFamily::WeibullPh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RaneffArg {
    #[value(name = "gaussian")]
    Gaussian,
    #[value(name = "log_gamma_frailty")]
    LogGammaFrailty,
}

impl From<RaneffArg> for RaneffFamily {
    fn from(r: RaneffArg) -> Self {
        match r {
            RaneffArg::Gaussian => RaneffFamily::Gaussian,
            RaneffArg::LogGammaFrailty => RaneffFamily::LogGammaFrailty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Aq,
    Gq,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with a header row
    #[arg(long, value_name = "CSV")]
    pub data: PathBuf,

    /// Response family
    #[arg(long, value_enum)]
    pub family: FamilyArg,

    /// Random-effect distribution
    #[arg(long, value_enum, default_value = "gaussian")]
    pub raneff: RaneffArg,

    /// Quadrature points per random-effect dimension, or `auto` for k(M, m)
    #[arg(long, value_name = "K|auto")]
    pub k: String,

    /// Adaptive (aq) or non-adaptive (gq) quadrature
    #[arg(long, value_enum, default_value = "aq")]
    pub method: MethodArg,

    /// Write the JSON result here instead of standard output
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,

    /// Column holding the group id
    #[arg(long, default_value = "id")]
    pub group_col: String,

    /// Response column(s) [default: y, or time,status for weibull_ph]
    #[arg(long, value_delimiter = ',')]
    pub response_cols: Option<Vec<String>>,

    /// Fixed-effect columns; `a:b` multiplies two columns [default: all other columns]
    #[arg(long, value_delimiter = ',')]
    pub fixed_cols: Option<Vec<String>>,

    /// Random-effect design columns; `1` is a random intercept
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub raneff_cols: Vec<String>,

    /// Prepend an intercept column [default: true, false for weibull_ph]
    #[arg(long, value_name = "BOOL")]
    pub intercept: Option<bool>,

    /// Confidence level of the Wald intervals
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,

    /// Budget of log-likelihood evaluations for the optimizer
    #[arg(long, default_value_t = 20_000)]
    pub max_evals: usize,

    /// Gradient tolerance of the outer optimizer
    #[arg(long, default_value_t = 1e-6)]
    pub outer_tol: f64,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// Number of groups M
    #[arg(long)]
    pub groups: u64,

    /// Smallest group size m
    #[arg(long)]
    pub min_group_size: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Groups per dataset
    #[arg(long, default_value_t = 100)]
    pub groups: usize,

    /// Observations per group
    #[arg(long, default_value_t = 3)]
    pub group_size: usize,

    /// Random-intercept standard deviation
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// True coefficients of (intercept, x, t, x:t)
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        num_args = 1,
        default_value = "-1,1,0.5,-0.5"
    )]
    pub beta: Vec<f64>,

    /// Number of simulated datasets
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,

    /// Quadrature points to fit with [default: 1, k(M, m), k(M, m) + 2]
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,

    /// Base seed; replicate r uses seed + r
    #[arg(long, default_value_t = 20221)]
    pub seed: u64,

    /// Confidence level for coverage
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,

    /// Write one row per (replicate, k) fit here
    #[arg(long, value_name = "CSV")]
    pub csv: Option<PathBuf>,

    /// Write the JSON summary here instead of standard output
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,
}

/// Model that single groups are simulated from.
#[derive(Debug, Args)]
pub struct GroupModelArgs {
    /// Response family
    #[arg(long, value_enum, default_value = "bernoulli_logit")]
    pub family: FamilyArg,

    /// Random-effect distribution
    #[arg(long, value_enum, default_value = "gaussian")]
    pub raneff: RaneffArg,

    /// Coefficients of (intercept, z1, z2, ...) with standard normal z
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        num_args = 1,
        default_value = "-0.5,0.5"
    )]
    pub beta: Vec<f64>,

    /// Random-effect variance (frailty variance for log_gamma_frailty)
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Residual variance for gaussian_identity
    #[arg(long, default_value_t = 1.0)]
    pub residual_variance: f64,

    /// Weibull baseline mu
    #[arg(long, default_value_t = 1.0)]
    pub baseline: f64,

    /// Weibull shape alpha
    #[arg(long, default_value_t = 1.0)]
    pub shape: f64,

    /// Simulated groups per group size
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,

    /// Base seed; replicate r uses seed + r
    #[arg(long, default_value_t = 20221)]
    pub seed: u64,

    /// Write one row per group size here
    #[arg(long, value_name = "CSV")]
    pub csv: Option<PathBuf>,

    /// Write the JSON summary here instead of standard output
    #[arg(long, value_name = "JSON")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Quadrature points
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    /// Group sizes (at least 4, spanning two decades)
    #[arg(long, value_delimiter = ',', default_value = "10,30,100,300,1000,3000")]
    pub m_grid: Vec<usize>,

    #[command(flatten)]
    pub model: GroupModelArgs,
}

#[derive(Debug, Args)]
pub struct GqArgs {
    /// Quadrature points
    #[arg(long, default_value_t = 5)]
    pub k: usize,

    /// Group sizes
    #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000,3000")]
    pub m_grid: Vec<usize>,

    #[command(flatten)]
    pub model: GroupModelArgs,
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    /// Points per dimension
    #[arg(long)]
    pub k: usize,

    /// Dimension of the product rule
    #[arg(long, default_value_t = 1)]
    pub dim: usize,

    /// Write the CSV here instead of standard output
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Model(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    fn json(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Data(m) => ("data", m),
            CliError::Model(m) => ("model", m),
            CliError::Io(m) => ("io", m),
        };
        serde_json::json!({ "error": kind, "message": message }).to_string()
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Model(m) => CliError::Model(m.to_string()),
            DataError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<aqfit_core::Error> for CliError {
    fn from(e: aqfit_core::Error) -> Self {
        CliError::Model(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{}", e.render());
            }
            let msg = e.kind().as_str().map_or_else(
                || e.to_string(),
                |k| {
                    let first = e.to_string().lines().next().unwrap_or("").to_string();
                    format!("{k}: {}", first.trim_start_matches("error: "))
                },
            );
            eprintln!("{}", CliError::Usage(msg).json());
            return 1;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.json());
            e.code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // A second call in the same process (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match &cli.command {
        Command::Fit(a) => cmd_fit(cli, a),
        Command::RecommendK(a) => cmd_recommend(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::RateCheck(a) => cmd_rate(cli, a),
        Command::GqDemo(a) => cmd_gq(cli, a),
        Command::Rule(a) => cmd_rule(a),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, pretty: bool) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    match out {
        Some(p) => std::fs::write(p, text + "\n").map_err(io_err(p)),
        None if pretty => Ok(()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn warn(message: &str) {
    eprintln!("{}", serde_json::json!({ "warning": message }));
}

fn header_of(path: &Path) -> Result<Vec<String>, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let h = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(h.iter().map(|s| s.trim().to_string()).collect())
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> Result<(), CliError> {
    let family: ResponseFamily = a.family.into();
    let fixed_k = if a.k.eq_ignore_ascii_case("auto") {
        None
    } else {
        let k =
            a.k.parse::<usize>()
                .ok()
                .filter(|k| *k >= 1)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "--k must be a positive integer or 'auto', got '{}'",
                        a.k
                    ))
                })?;
        Some(k)
    };
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(CliError::Usage(format!(
            "--level must lie in (0, 1), got {}",
            a.level
        )));
    }
    let header = header_of(&a.data)?;
    let response_cols = a.response_cols.clone().unwrap_or_else(|| {
        if family.is_survival() {
            vec!["time".into(), "status".into()]
        } else {
            vec!["y".into()]
        }
    });
    if response_cols.len() != if family.is_survival() { 2 } else { 1 } {
        return Err(CliError::Usage(format!(
            "{} needs {} response column(s)",
            family.name(),
            if family.is_survival() { 2 } else { 1 }
        )));
    }
    let mut fixed_cols = a.fixed_cols.clone().unwrap_or_else(|| {
        header
            .iter()
            .filter(|h| **h != a.group_col && !response_cols.contains(h))
            .cloned()
            .collect()
    });
    if a.intercept.unwrap_or(!family.is_survival()) && !fixed_cols.iter().any(|c| c == "1") {
        fixed_cols.insert(0, "1".into());
    }
    let schema = CsvSchema {
        group_col: a.group_col.clone(),
        response_cols,
        fixed_cols,
        raneff_cols: a.raneff_cols.clone(),
    };
    let data = read_csv(&a.data, &schema)?;
    let summary = data.summary();
    if cli.verbose > 0 {
        eprintln!(
            "read {} rows in {} groups (group sizes {}..{})",
            summary.n, summary.groups, summary.m_min, summary.m_max
        );
    }
    let spec = ModelSpec::new(family, a.raneff.into(), data.d(), data.p())?;
    let method = match a.method {
        MethodArg::Aq => Method::Aq,
        MethodArg::Gq => Method::Gq,
    };

    let (k, recommendation) = match fixed_k {
        Some(k) => (k, None),
        None => {
            if method == Method::Gq {
                warn("k(M, m) is a recommendation for adaptive quadrature; using it with --method gq");
            }
            let r = recommend_k(summary.groups as u64, summary.m_min as u64)?;
            match r.k {
                PointCount::Finite(k) => (k, Some(r)),
                PointCount::Unbounded => {
                    return Err(CliError::Model(format!(
                        "--k auto: {} (smallest group has one observation); pass an explicit --k",
                        r.guidance()
                    )))
                }
            }
        }
    };

    let opts = FitOptions {
        method,
        outer_tol: a.outer_tol,
        max_evals: a.max_evals,
        ..FitOptions::default()
    };
    let f = fit(&data, &spec, k, &opts)?;
    if cli.verbose > 0 {
        eprintln!(
            "k = {k}: {} log-likelihood evaluations, converged = {}",
            f.n_loglik_evals, f.converged
        );
    }
    let intervals = wald_ci(&f, a.level).ok();
    let json = FitJson::new(
        &f,
        &spec,
        &summary,
        intervals.as_deref(),
        a.level,
        recommendation.as_ref(),
    );
    if cli.pretty {
        let mut t = String::new();
        let _ = writeln!(
            t,
            "{} + {} random effect, {} with k = {}  (M = {}, n = {})",
            spec.response.name(),
            spec.raneff.name(),
            method.name().to_uppercase(),
            k,
            summary.groups,
            summary.n
        );
        let _ = writeln!(
            t,
            "log-likelihood {:.6}   evaluations {}   converged {}",
            f.loglik, f.n_loglik_evals, f.converged
        );
        let _ = writeln!(
            t,
            "{:<14} {:>12} {:>12} {:>12} {:>12}",
            "parameter",
            "estimate",
            "std.error",
            format!("{:.0}% lower", a.level * 100.0),
            "upper"
        );
        for p in &json.parameters {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(
                t,
                "{:<14} {:>12.4} {:>12} {:>12} {:>12}",
                p.name,
                p.estimate,
                opt(p.std_error),
                opt(p.lower),
                opt(p.upper)
            );
        }
        if json
            .parameters
            .iter()
            .any(|p| p.log_scale && p.std_error.is_some())
        {
            let _ = writeln!(t, "std.error of positive parameters is on the log scale");
        }
        if let Some(msg) = &f.diagnostics.vcov_message {
            let _ = writeln!(t, "note: {msg}");
        }
        print!("{t}");
    }
    emit_json(&json, a.out.as_deref(), cli.pretty)
}

fn cmd_recommend(cli: &Cli, a: &RecommendArgs) -> Result<(), CliError> {
    let r = recommend_k(a.groups, a.min_group_size).map_err(|e| CliError::Usage(e.to_string()))?;
    if cli.pretty {
        match r.k {
            PointCount::Finite(k) => {
                println!("k = {k}");
                println!("r(k) = {}", r.rate_r.unwrap_or(0));
                println!("eps*(k) = {}", r.eps_star.unwrap_or(f64::NAN));
            }
            PointCount::Unbounded => println!("k = unbounded"),
        }
        println!("{}", r.guidance());
        return Ok(());
    }
    emit_json(&RecommendJson::from(&r), None, false)
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), CliError> {
    let beta: [f64; 4] = a
        .beta
        .as_slice()
        .try_into()
        .map_err(|_| CliError::Usage(format!("--beta needs 4 values, got {}", a.beta.len())))?;
    let k_grid = match &a.k_grid {
        Some(g) => g.clone(),
        None => {
            let r = recommend_k(a.groups as u64, a.group_size as u64)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let k = r.k.finite().ok_or_else(|| {
                CliError::Usage("groups of size 1 have no finite k(M, m); pass --k-grid".into())
            })?;
            let mut g = vec![1, k, k + 2];
            g.dedup();
            g
        }
    };
    let config = SimStudyConfig {
        groups: a.groups,
        m: a.group_size,
        sigma_true: a.sigma,
        beta_true: beta,
        replicates: a.replicates,
        k_grid,
        seed: a.seed,
        level: a.level,
        ..SimStudyConfig::default()
    };
    if cli.verbose > 0 {
        eprintln!(
            "simulating {} datasets, fitting k in {:?}",
            config.replicates, config.k_grid
        );
    }
    let report = simulate_study(&config)?;
    if let Some(path) = &a.csv {
        let mut s = String::from(
            "replicate,k,beta0_hat,beta0_se,sigma_hat,covered,converged,wall_time,n_loglik_evals\n",
        );
        for f in &report.fits {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                f.replicate,
                f.k,
                fmt_f64(f.beta0_hat),
                fmt_f64(f.beta0_se),
                fmt_f64(f.sigma_hat),
                f.covered as u8,
                f.converged as u8,
                fmt_f64(f.wall_time),
                f.n_loglik_evals
            );
        }
        emit_text(&s, Some(path))?;
    }
    if cli.pretty {
        println!(
            "{:>4} {:>5} {:>8} {:>22} {:>22} {:>9} {:>16} {:>16}",
            "k",
            "fits",
            "failures",
            "|b0 err| 2.5/50/97.5%",
            "|sigma err| 50%",
            "coverage",
            "time mean (sd)",
            "evals mean (sd)"
        );
        for s in &report.per_k {
            println!(
                "{:>4} {:>5} {:>8} {:>22} {:>22.4} {:>9.3} {:>16} {:>16}",
                s.k,
                s.fits,
                s.failures,
                format!(
                    "{:.3}/{:.3}/{:.3}",
                    s.beta0_abs_error.q025, s.beta0_abs_error.q50, s.beta0_abs_error.q975
                ),
                s.sigma_abs_error.q50,
                s.coverage_beta0,
                format!("{:.4} ({:.4})", s.time_mean, s.time_sd),
                format!("{:.1} ({:.1})", s.evals_mean, s.evals_sd)
            );
        }
    }
    emit_json(&SimJson::from(&report), a.out.as_deref(), cli.pretty)
}

fn group_model(m: &GroupModelArgs) -> Result<(ModelSpec, Parameters), CliError> {
    let spec = ModelSpec::new(m.family.into(), m.raneff.into(), m.beta.len(), 1)?;
    let mut params = Parameters::default_for(&spec);
    params.beta = m.beta.clone();
    params.response = match spec.response {
        ResponseFamily::GaussianIdentity => ResponseDispersion::Gaussian {
            variance: m.residual_variance,
        },
        ResponseFamily::WeibullPh => ResponseDispersion::Weibull {
            baseline: m.baseline,
            shape: m.shape,
        },
        _ => ResponseDispersion::None,
    };
    params.raneff = match spec.raneff {
        RaneffFamily::Gaussian => RaneffParams::Gaussian {
            cov: aqfit_core::nalgebra::DMatrix::from_element(1, 1, m.sigma2),
        },
        RaneffFamily::LogGammaFrailty => RaneffParams::LogGammaFrailty { variance: m.sigma2 },
    };
    params
        .validate(&spec)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((spec, params))
}

fn cmd_rate(cli: &Cli, a: &RateArgs) -> Result<(), CliError> {
    let (spec, params) = group_model(&a.model)?;
    let r = rate_check(
        &spec,
        &params,
        a.k,
        &a.m_grid,
        a.model.replicates,
        a.model.seed,
    )?;
    if let Some(path) = &a.model.csv {
        let mut s = String::from("m,median_abs_error\n");
        for (m, e) in r.m_grid.iter().zip(&r.errors) {
            let _ = writeln!(s, "{m},{}", fmt_f64(*e));
        }
        emit_text(&s, Some(path))?;
    }
    if cli.pretty {
        println!("{:>8} {:>16}", "m", "median |error|");
        for (m, e) in r.m_grid.iter().zip(&r.errors) {
            println!("{m:>8} {e:>16.6e}");
        }
        println!(
            "slope {:.4} (theory {})  intercept {:.4}",
            r.slope, r.expected_slope, r.intercept
        );
    }
    emit_json(
        &RateJson::new(&r, &spec),
        a.model.out.as_deref(),
        cli.pretty,
    )
}

fn cmd_gq(cli: &Cli, a: &GqArgs) -> Result<(), CliError> {
    let (spec, params) = group_model(&a.model)?;
    let r = gq_divergence_demo(
        &spec,
        &params,
        a.k,
        &a.m_grid,
        a.model.replicates,
        a.model.seed,
    )?;
    if let Some(path) = &a.model.csv {
        let mut s =
            String::from("m,gq_median_rel_error,gq_fraction_below_half,aq_median_rel_error,aq_fraction_below_half\n");
        for row in &r.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                row.m,
                fmt_f64(row.gq_median_rel_error),
                fmt_f64(row.gq_fraction_below_half),
                fmt_f64(row.aq_median_rel_error),
                fmt_f64(row.aq_fraction_below_half)
            );
        }
        emit_text(&s, Some(path))?;
    }
    if cli.pretty {
        println!(
            "{:>8} {:>14} {:>12} {:>14} {:>12}",
            "m", "GQ median rel", "GQ < 1/2", "AQ median rel", "AQ < 1/2"
        );
        for row in &r.rows {
            println!(
                "{:>8} {:>14.4e} {:>12.3} {:>14.4e} {:>12.3}",
                row.m,
                row.gq_median_rel_error,
                row.gq_fraction_below_half,
                row.aq_median_rel_error,
                row.aq_fraction_below_half
            );
        }
    }
    emit_json(&GqJson::new(&r, &spec), a.model.out.as_deref(), cli.pretty)
}

fn cmd_rule(a: &RuleArgs) -> Result<(), CliError> {
    let rule =
        QuadratureRule::gauss_hermite(a.k, a.dim).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut s = String::new();
    let cols: Vec<String> = (1..=a.dim).map(|j| format!("z{j}")).collect();
    let _ = writeln!(s, "{},weight,log_adapted_weight", cols.join(","));
    for i in 0..rule.len() {
        for z in rule.node(i) {
            let _ = write!(s, "{z:.16e},");
        }
        let _ = writeln!(
            s,
            "{:.16e},{:.16e}",
            rule.kernel_weight(i),
            rule.log_adapted_weight(i)
        );
    }
    emit_text(&s, a.out.as_deref())
}
