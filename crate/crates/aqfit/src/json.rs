//! JSON views of the library's results.

use serde::Serialize;

use aqfit_core::fit::FitDiagnostics;
use aqfit_core::nalgebra::DMatrix;
use aqfit_core::theorylab::{GqDemoReport, KSummary, Quantiles, RateReport, SimStudyReport};
use aqfit_core::{
    DatasetSummary, FitResult, KRecommendation, ModelSpec, Parameters, PointCount, RaneffParams,
    ResponseDispersion, WaldInterval,
};

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

#[derive(Debug, Serialize)]
pub struct DataSummaryJson {
    pub groups: usize,
    pub n: usize,
    pub m_min: usize,
    pub m_max: usize,
}

impl From<&DatasetSummary> for DataSummaryJson {
    fn from(s: &DatasetSummary) -> Self {
        DataSummaryJson {
            groups: s.groups,
            n: s.n,
            m_min: s.m_min,
            m_max: s.m_max,
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ResponseJson {
    None,
    Gaussian { variance: f64 },
    Weibull { baseline: f64, shape: f64 },
}

#[derive(Debug, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RaneffJson {
    Gaussian { cov: Vec<Vec<f64>> },
    LogGammaFrailty { variance: f64 },
}

#[derive(Debug, Serialize)]
pub struct ParamsJson {
    pub beta: Vec<f64>,
    pub response: ResponseJson,
    pub raneff: RaneffJson,
}

impl From<&Parameters> for ParamsJson {
    fn from(p: &Parameters) -> Self {
        ParamsJson {
            beta: p.beta.clone(),
            response: match p.response {
                ResponseDispersion::None => ResponseJson::None,
                ResponseDispersion::Gaussian { variance } => ResponseJson::Gaussian { variance },
                ResponseDispersion::Weibull { baseline, shape } => {
                    ResponseJson::Weibull { baseline, shape }
                }
            },
            raneff: match &p.raneff {
                RaneffParams::Gaussian { cov } => RaneffJson::Gaussian { cov: rows(cov) },
                RaneffParams::LogGammaFrailty { variance } => RaneffJson::LogGammaFrailty {
                    variance: *variance,
                },
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ParameterJson {
    pub name: String,
    /// Natural scale.
    pub estimate: f64,
    /// Coordinate on the scale the covariance refers to.
    pub reporting_estimate: f64,
    pub log_scale: bool,
    pub std_error: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct DiagnosticsJson {
    pub grad_norm: f64,
    pub optimizer_iterations: usize,
    pub simplex_restarts: usize,
    pub failed_evaluations: usize,
    pub inner_iterations: usize,
    pub inner_nonconverged: usize,
    pub jitter_count: usize,
    pub hessian_evals: usize,
    pub vcov_message: Option<String>,
}

impl From<&FitDiagnostics> for DiagnosticsJson {
    fn from(d: &FitDiagnostics) -> Self {
        DiagnosticsJson {
            grad_norm: d.grad_norm,
            optimizer_iterations: d.optimizer_iterations,
            simplex_restarts: d.simplex_restarts,
            failed_evaluations: d.failed_evaluations,
            inner_iterations: d.inner_iterations,
            inner_nonconverged: d.inner_nonconverged,
            jitter_count: d.jitter_count,
            hessian_evals: d.hessian_evals,
            vcov_message: d.vcov_message.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FitJson {
    pub family: String,
    pub raneff: String,
    pub method: String,
    pub k: usize,
    pub k_recommendation: Option<RecommendJson>,
    pub data: DataSummaryJson,
    pub converged: bool,
    pub loglik: f64,
    pub n_loglik_evals: usize,
    pub wall_time: f64,
    pub ci_level: f64,
    pub parameters: Vec<ParameterJson>,
    pub params_hat: ParamsJson,
    pub std_errors: Option<Vec<f64>>,
    pub vcov: Option<Vec<Vec<f64>>>,
    pub diagnostics: DiagnosticsJson,
}

impl FitJson {
    pub fn new(
        fit: &FitResult,
        spec: &ModelSpec,
        summary: &DatasetSummary,
        intervals: Option<&[WaldInterval]>,
        level: f64,
        recommendation: Option<&KRecommendation>,
    ) -> Self {
        let parameters = (0..fit.estimates.len())
            .map(|i| {
                let ci = intervals.map(|c| &c[i]);
                ParameterJson {
                    name: fit.parameter_names[i].clone(),
                    estimate: fit.natural(i),
                    reporting_estimate: fit.estimates[i],
                    log_scale: fit.log_scale[i],
                    std_error: fit.std_errors.as_ref().map(|s| s[i]),
                    lower: ci.map(|c| c.lower),
                    upper: ci.map(|c| c.upper),
                }
            })
            .collect();
        FitJson {
            family: spec.response.name().into(),
            raneff: spec.raneff.name().into(),
            method: fit.method.name().into(),
            k: fit.k,
            k_recommendation: recommendation.map(RecommendJson::from),
            data: summary.into(),
            converged: fit.converged,
            loglik: fit.loglik,
            n_loglik_evals: fit.n_loglik_evals,
            wall_time: fit.wall_time,
            ci_level: level,
            parameters,
            params_hat: (&fit.params_hat).into(),
            std_errors: fit.std_errors.clone(),
            vcov: fit.vcov.as_ref().map(rows),
            diagnostics: (&fit.diagnostics).into(),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum KJson {
    Finite(usize),
    Unbounded(&'static str),
}

#[derive(Debug, Serialize)]
pub struct RecommendJson {
    pub groups: u64,
    pub min_group_size: u64,
    pub k: KJson,
    pub rate_r: Option<u32>,
    pub eps_star: Option<f64>,
    pub avoid_laplace: bool,
    pub recommendation: &'static str,
}

impl From<&KRecommendation> for RecommendJson {
    fn from(r: &KRecommendation) -> Self {
        RecommendJson {
            groups: r.groups,
            min_group_size: r.min_group_size,
            k: match r.k {
                PointCount::Finite(k) => KJson::Finite(k),
                PointCount::Unbounded => KJson::Unbounded("unbounded"),
            },
            rate_r: r.rate_r,
            eps_star: r.eps_star,
            avoid_laplace: r.avoid_laplace(),
            recommendation: r.guidance(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RateJson {
    pub family: String,
    pub k: usize,
    pub m_grid: Vec<usize>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub expected_slope: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl RateJson {
    pub fn new(r: &RateReport, spec: &ModelSpec) -> Self {
        RateJson {
            family: spec.response.name().into(),
            k: r.k,
            m_grid: r.m_grid.clone(),
            errors: r.errors.clone(),
            slope: r.slope,
            intercept: r.intercept,
            expected_slope: r.expected_slope,
            replicates: r.replicates,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GqRowJson {
    pub m: usize,
    pub gq_median_rel_error: f64,
    pub gq_fraction_below_half: f64,
    pub aq_median_rel_error: f64,
    pub aq_fraction_below_half: f64,
}

#[derive(Debug, Serialize)]
pub struct GqJson {
    pub family: String,
    pub k: usize,
    pub replicates: usize,
    pub seed: u64,
    pub rows: Vec<GqRowJson>,
}

impl GqJson {
    pub fn new(r: &GqDemoReport, spec: &ModelSpec) -> Self {
        GqJson {
            family: spec.response.name().into(),
            k: r.k,
            replicates: r.replicates,
            seed: r.seed,
            rows: r
                .rows
                .iter()
                .map(|row| GqRowJson {
                    m: row.m,
                    gq_median_rel_error: row.gq_median_rel_error,
                    gq_fraction_below_half: row.gq_fraction_below_half,
                    aq_median_rel_error: row.aq_median_rel_error,
                    aq_fraction_below_half: row.aq_fraction_below_half,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct QuantilesJson {
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

impl From<Quantiles> for QuantilesJson {
    fn from(q: Quantiles) -> Self {
        QuantilesJson {
            q025: q.q025,
            q50: q.q50,
            q975: q.q975,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct KSummaryJson {
    pub k: usize,
    pub fits: usize,
    pub failures: usize,
    pub nonconverged: usize,
    pub beta0_abs_error: QuantilesJson,
    pub sigma_abs_error: QuantilesJson,
    pub coverage_beta0: f64,
    pub time_mean: f64,
    pub time_sd: f64,
    pub evals_mean: f64,
    pub evals_sd: f64,
}

impl From<&KSummary> for KSummaryJson {
    fn from(s: &KSummary) -> Self {
        KSummaryJson {
            k: s.k,
            fits: s.fits,
            failures: s.failures,
            nonconverged: s.nonconverged,
            beta0_abs_error: s.beta0_abs_error.into(),
            sigma_abs_error: s.sigma_abs_error.into(),
            coverage_beta0: s.coverage_beta0,
            time_mean: s.time_mean,
            time_sd: s.time_sd,
            evals_mean: s.evals_mean,
            evals_sd: s.evals_sd,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimJson {
    pub groups: usize,
    pub group_size: usize,
    pub sigma: f64,
    pub beta: [f64; 4],
    pub replicates: usize,
    pub k_grid: Vec<usize>,
    pub seed: u64,
    pub level: f64,
    pub per_k: Vec<KSummaryJson>,
}

impl From<&SimStudyReport> for SimJson {
    fn from(r: &SimStudyReport) -> Self {
        let c = &r.config;
        SimJson {
            groups: c.groups,
            group_size: c.m,
            sigma: c.sigma_true,
            beta: c.beta_true,
            replicates: c.replicates,
            k_grid: c.k_grid.clone(),
            seed: c.seed,
            level: c.level,
            per_k: r.per_k.iter().map(KSummaryJson::from).collect(),
        }
    }
}
