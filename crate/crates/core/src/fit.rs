//! Maximum-likelihood fitting on the AQ (or GQ) approximate log-likelihood,
//! with observed-information standard errors and Wald intervals.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::data::{GroupedDataset, Response};
use crate::error::{Error, Result};
use crate::families::{
    ModelSpec, Parameters, PositiveTransform, Prepared, RaneffParams, ResponseDispersion,
};
use crate::inner::{AdaptOptions, GroupKernel};
use crate::marglik::{MarginalLikelihood, Method};
use crate::math::normal_quantile;
use crate::optim::{fd_hessian, maximize, OptimOptions};
use crate::par::Stopwatch;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub method: Method,
    /// Bound on ‖∇ log-likelihood‖∞ (unconstrained scale) at convergence.
    pub outer_tol: f64,
    pub max_evals: usize,
    /// Starting values; a fixed-effects-only fit with unit variances otherwise.
    pub start: Option<Parameters>,
    pub transform: PositiveTransform,
    pub inner: AdaptOptions,
    pub compute_vcov: bool,
    /// Force per-group parallelism on or off; sized automatically when `None`.
    pub parallel: Option<bool>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            method: Method::Aq,
            outer_tol: 1e-6,
            max_evals: 20_000,
            start: None,
            transform: PositiveTransform::Log,
            inner: AdaptOptions::default(),
            compute_vcov: true,
            parallel: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitDiagnostics {
    /// ‖∇‖∞ of the objective at the returned point, unconstrained scale.
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

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params_hat: Parameters,
    pub parameter_names: Vec<String>,
    /// Reporting scale: β as is, log of positive parameters.
    pub estimates: Vec<f64>,
    pub log_scale: Vec<bool>,
    pub loglik: f64,
    pub vcov: Option<DMatrix<f64>>,
    pub std_errors: Option<Vec<f64>>,
    pub k: usize,
    pub method: Method,
    pub n_loglik_evals: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }

    /// Estimate on the natural scale.
    pub fn natural(&self, i: usize) -> f64 {
        if self.log_scale[i] {
            self.estimates[i].exp()
        } else {
            self.estimates[i]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaldInterval {
    pub name: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub std_error: f64,
    /// Interval formed on the log scale and exponentiated.
    pub log_scale: bool,
}

pub fn fit(
    data: &GroupedDataset,
    spec: &ModelSpec,
    k: usize,
    opts: &FitOptions,
) -> Result<FitResult> {
    let clock = Stopwatch::start();
    if !(opts.outer_tol > 0.0) {
        return Err(Error::range("outer_tol", opts.outer_tol, "> 0"));
    }
    let mut ml = MarginalLikelihood::new(data, *spec, k, opts.method)?;
    ml.inner = opts.inner.clone();
    if let Some(par) = opts.parallel {
        ml.parallel = par;
    }
    let start = match &opts.start {
        Some(s) => {
            s.validate(spec)?;
            s.clone()
        }
        None => glm_start(data, spec)?,
    };
    let t = opts.transform;
    let theta0 = start.to_unconstrained(spec, t)?;

    let optim_opts = OptimOptions {
        grad_tol: opts.outer_tol,
        max_evals: opts.max_evals,
        ..OptimOptions::default()
    };
    let res = maximize(
        |th| {
            let p = Parameters::from_unconstrained(spec, th, t).ok()?;
            ml.loglik(&p).ok()
        },
        &theta0,
        &optim_opts,
    );
    if !res.f.is_finite() {
        return Err(Error::InvalidParameters(
            "approximate log-likelihood could not be evaluated near the starting values".into(),
        ));
    }
    let n_loglik_evals = ml.stats().evaluations;
    let params_hat = Parameters::from_unconstrained(spec, &res.x, t)?;

    // Re-evaluate at the optimum so the reported value and inner counters are exact.
    ml.warm_start = true;
    let at_hat = ml.evaluate(&params_hat)?;
    let inner_nonconverged = at_hat
        .adaptations
        .as_ref()
        .map_or(0, |a| a.iter().filter(|a| !a.converged).count());

    let estimates = params_hat.to_unconstrained(spec, PositiveTransform::Log)?;
    let mut diagnostics = FitDiagnostics {
        grad_norm: res.grad_norm(),
        optimizer_iterations: res.iterations,
        simplex_restarts: res.simplex_restarts,
        inner_nonconverged,
        ..FitDiagnostics::default()
    };

    let (vcov, std_errors) = if opts.compute_vcov {
        let before = ml.stats().evaluations;
        let out = vcov_from_hessian(
            |th| {
                let p = Parameters::from_unconstrained(spec, th, PositiveTransform::Log).ok()?;
                ml.loglik(&p).ok()
            },
            &estimates,
        );
        diagnostics.hessian_evals = ml.stats().evaluations - before;
        match out {
            Ok(v) => {
                let se = v.diagonal().iter().map(|d| d.sqrt()).collect();
                (Some(v), Some(se))
            }
            Err(msg) => {
                diagnostics.vcov_message = Some(msg);
                (None, None)
            }
        }
    } else {
        (None, None)
    };

    let stats = ml.stats();
    diagnostics.failed_evaluations = stats.failed_evaluations;
    diagnostics.inner_iterations = stats.inner_iterations;
    diagnostics.jitter_count = stats.jitter_count;

    Ok(FitResult {
        params_hat,
        parameter_names: spec.parameter_names(data.fixed_names()),
        estimates,
        log_scale: spec.log_scale_mask(),
        loglik: at_hat.total,
        vcov,
        std_errors,
        k,
        method: opts.method,
        n_loglik_evals,
        converged: res.converged,
        wall_time: clock.seconds(),
        diagnostics,
    })
}

/// Inverse of the negated central-difference Hessian of `loglik_fn` at `theta_hat`.
/// The error string explains why no covariance could be formed.
pub fn vcov_from_hessian<F>(
    loglik_fn: F,
    theta_hat: &[f64],
) -> core::result::Result<DMatrix<f64>, String>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let h = fd_hessian(loglik_fn, theta_hat)
        .ok_or_else(|| String::from("log-likelihood could not be evaluated around the estimate"))?;
    let info = -h;
    let chol = info
        .clone()
        .cholesky()
        .ok_or_else(|| String::from("observed information is not positive definite"))?;
    let mut v = chol.inverse();
    let n = v.nrows();
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (v[(i, j)] + v[(j, i)]);
            v[(i, j)] = s;
            v[(j, i)] = s;
        }
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err("covariance has non-finite entries".into());
    }
    Ok(v)
}

/// Interval estimate ± z·SE, exponentiated when formed on the log scale.
pub fn wald_interval(
    estimate: f64,
    std_error: f64,
    level: f64,
    log_scale: bool,
) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::range("level", level, "0 < level < 1"));
    }
    let z = normal_quantile(0.5 + 0.5 * level);
    let (lo, hi) = (estimate - z * std_error, estimate + z * std_error);
    Ok(if log_scale {
        (lo.exp(), hi.exp())
    } else {
        (lo, hi)
    })
}

pub fn wald_ci(fit: &FitResult, level: f64) -> Result<Vec<WaldInterval>> {
    let se = fit.std_errors.as_ref().ok_or(Error::MissingStdErrors)?;
    (0..fit.estimates.len())
        .map(|i| {
            let log_scale = fit.log_scale[i];
            let (lower, upper) = wald_interval(fit.estimates[i], se[i], level, log_scale)?;
            Ok(WaldInterval {
                name: fit.parameter_names[i].clone(),
                estimate: fit.natural(i),
                lower,
                upper,
                std_error: se[i],
                log_scale,
            })
        })
        .collect()
}

/// Fixed-effects-only fit (random effects set to zero), with variance
/// parameters at 1.
pub fn glm_start(data: &GroupedDataset, spec: &ModelSpec) -> Result<Parameters> {
    spec.check_dataset(data)?;
    let mut base = Parameters::default_for(spec);
    base.response = match base.response {
        ResponseDispersion::Gaussian { .. } => {
            let ys: Vec<f64> = responses(data).filter_map(|y| value_of(y)).collect();
            let mean = ys.iter().sum::<f64>() / ys.len() as f64;
            let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / ys.len() as f64;
            ResponseDispersion::Gaussian {
                variance: if var > 0.0 { var } else { 1.0 },
            }
        }
        ResponseDispersion::Weibull { .. } => {
            // Exponential-model rate as the baseline start.
            let (mut events, mut exposure) = (0.0, 0.0);
            for y in responses(data) {
                if let Response::Survival { time, event } = y {
                    events += event as u8 as f64;
                    exposure += time;
                }
            }
            let rate = if events > 0.0 && exposure > 0.0 {
                events / exposure
            } else {
                1.0
            };
            ResponseDispersion::Weibull {
                baseline: rate,
                shape: 1.0,
            }
        }
        other => other,
    };
    let t = PositiveTransform::Log;
    let full = base.to_unconstrained(spec, t)?;
    let free = spec.d + spec.response.n_dispersion();
    if free == 0 {
        return Ok(base);
    }
    let tail = full[free..].to_vec();
    let zero = alloc::vec![0.0; spec.p];
    let res = maximize(
        |th| {
            let mut all = th.to_vec();
            all.extend_from_slice(&tail);
            let p = Parameters::from_unconstrained(spec, &all, t).ok()?;
            let prep = Prepared::new(spec, &p).ok()?;
            let v: f64 = data
                .groups()
                .iter()
                .map(|g| GroupKernel::new(g, spec, &p.beta, &prep).value(&zero))
                .sum();
            v.is_finite().then_some(v)
        },
        &full[..free],
        &OptimOptions {
            grad_tol: 1e-6,
            max_evals: 5_000,
            ..OptimOptions::default()
        },
    );
    let mut all = res.x;
    all.extend_from_slice(&tail);
    let mut start = Parameters::from_unconstrained(spec, &all, t)?;
    if let RaneffParams::Gaussian { cov } = &mut start.raneff {
        *cov = DMatrix::identity(spec.p, spec.p);
    }
    Ok(start)
}

fn responses(data: &GroupedDataset) -> impl Iterator<Item = Response> + '_ {
    data.groups()
        .iter()
        .flat_map(|g| g.responses.iter().copied())
}

fn value_of(y: Response) -> Option<f64> {
    match y {
        Response::Value(v) => Some(v),
        Response::Survival { .. } => None,
    }
}
