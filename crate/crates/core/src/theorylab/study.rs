//! Repeated simulation and fitting of the logistic random-intercept study.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::{fit, wald_ci, FitOptions};
use crate::math::quantile_sorted;
use crate::par::map_range;
use crate::simulate::{logistic_study_dataset, rng_for, study_spec};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct SimStudyConfig {
    pub groups: usize,
    pub m: usize,
    pub sigma_true: f64,
    /// (intercept, x, t, x·t).
    pub beta_true: [f64; 4],
    pub replicates: usize,
    pub k_grid: Vec<usize>,
    pub seed: u64,
    pub level: f64,
    pub max_evals: usize,
}

impl Default for SimStudyConfig {
    fn default() -> Self {
        SimStudyConfig {
            groups: 100,
            m: 3,
            sigma_true: 1.0,
            beta_true: [-1.0, 1.0, 0.5, -0.5],
            replicates: 50,
            k_grid: alloc::vec![1, 2, 4],
            seed: 20221,
            level: 0.95,
            max_evals: 20_000,
        }
    }
}

/// One fit of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFit {
    pub replicate: usize,
    pub k: usize,
    pub beta0_hat: f64,
    pub beta0_se: f64,
    pub sigma_hat: f64,
    pub covered: bool,
    pub converged: bool,
    pub wall_time: f64,
    pub n_loglik_evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

impl Quantiles {
    fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        Quantiles {
            q025: quantile_sorted(&v, 0.025),
            q50: quantile_sorted(&v, 0.5),
            q975: quantile_sorted(&v, 0.975),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSummary {
    pub k: usize,
    pub fits: usize,
    pub failures: usize,
    pub nonconverged: usize,
    pub beta0_abs_error: Quantiles,
    pub sigma_abs_error: Quantiles,
    pub coverage_beta0: f64,
    pub time_mean: f64,
    pub time_sd: f64,
    pub evals_mean: f64,
    pub evals_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStudyReport {
    pub config: SimStudyConfig,
    pub per_k: Vec<KSummary>,
    pub fits: Vec<ReplicateFit>,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn simulate_study(config: &SimStudyConfig) -> Result<SimStudyReport> {
    if config.replicates == 0 {
        return Err(Error::range("replicates", 0, ">= 1"));
    }
    if config.k_grid.is_empty() || config.k_grid.contains(&0) {
        return Err(Error::InvalidSpec(
            "k grid must be non-empty with k >= 1".into(),
        ));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(Error::range("level", config.level, "0 < level < 1"));
    }
    if config.beta_true.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidParameters("beta_true must be finite".into()));
    }
    let spec = study_spec();
    let opts = FitOptions {
        max_evals: config.max_evals,
        parallel: Some(false),
        ..FitOptions::default()
    };

    // Each replicate yields one outcome per k, in k_grid order.
    let per_rep = map_range(
        config.replicates,
        true,
        |r| -> Result<Vec<Option<ReplicateFit>>> {
            let mut rng = rng_for(config.seed.wrapping_add(r as u64), 0);
            let data = logistic_study_dataset(
                config.groups,
                config.m,
                config.beta_true,
                config.sigma_true,
                &mut rng,
            )?;
            Ok(config
                .k_grid
                .iter()
                .map(|&k| {
                    let f = fit(&data, &spec, k, &opts).ok()?;
                    let ci = wald_ci(&f, config.level).ok()?;
                    let b0 = &ci[0];
                    Some(ReplicateFit {
                        replicate: r,
                        k,
                        beta0_hat: b0.estimate,
                        beta0_se: b0.std_error,
                        sigma_hat: f.params_hat.raneff_variance()?.sqrt(),
                        covered: b0.lower <= config.beta_true[0] && config.beta_true[0] <= b0.upper,
                        converged: f.converged,
                        wall_time: f.wall_time,
                        n_loglik_evals: f.n_loglik_evals,
                    })
                })
                .collect())
        },
    );

    let mut fits = Vec::new();
    let mut failures = alloc::vec![0usize; config.k_grid.len()];
    for rep in per_rep {
        for (ki, outcome) in rep?.into_iter().enumerate() {
            match outcome {
                Some(f) => fits.push(f),
                None => failures[ki] += 1,
            }
        }
    }

    let per_k = config
        .k_grid
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let ok: Vec<&ReplicateFit> = fits.iter().filter(|f| f.k == k).collect();
            let nan = Quantiles {
                q025: f64::NAN,
                q50: f64::NAN,
                q975: f64::NAN,
            };
            if ok.is_empty() {
                return KSummary {
                    k,
                    fits: 0,
                    failures: failures[ki],
                    nonconverged: 0,
                    beta0_abs_error: nan,
                    sigma_abs_error: nan,
                    coverage_beta0: f64::NAN,
                    time_mean: f64::NAN,
                    time_sd: f64::NAN,
                    evals_mean: f64::NAN,
                    evals_sd: f64::NAN,
                };
            }
            let b_err: Vec<f64> = ok
                .iter()
                .map(|f| (f.beta0_hat - config.beta_true[0]).abs())
                .collect();
            let s_err: Vec<f64> = ok
                .iter()
                .map(|f| (f.sigma_hat - config.sigma_true).abs())
                .collect();
            let times: Vec<f64> = ok.iter().map(|f| f.wall_time).collect();
            let evals: Vec<f64> = ok.iter().map(|f| f.n_loglik_evals as f64).collect();
            let (time_mean, time_sd) = mean_sd(&times);
            let (evals_mean, evals_sd) = mean_sd(&evals);
            KSummary {
                k,
                fits: ok.len(),
                failures: failures[ki],
                nonconverged: ok.iter().filter(|f| !f.converged).count(),
                beta0_abs_error: Quantiles::of(&b_err),
                sigma_abs_error: Quantiles::of(&s_err),
                coverage_beta0: ok.iter().filter(|f| f.covered).count() as f64 / ok.len() as f64,
                time_mean,
                time_sd,
                evals_mean,
                evals_sd,
            }
        })
        .collect();

    Ok(SimStudyReport {
        config: config.clone(),
        per_k,
        fits,
    })
}
