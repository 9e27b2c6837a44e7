//! Empirical error rates of AQ and non-convergence of GQ, measured against
//! the integration oracle on simulated single groups.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::families::{ModelSpec, Parameters, Prepared};
use crate::inner::{AdaptOptions, GroupKernel};
use crate::kadvisor::rate_exponent;
use crate::marglik::{aq_kernel, gq_log_integral};
use crate::math::median;
use crate::par::map_range;
use crate::quadrature::QuadratureRule;
use crate::simulate::{intercept_covariate_group, rng_for};

use super::oracle::{oracle_group_loglik, DEFAULT_TOL};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// Coarse oracle tolerance used for the self-consistency check.
const CHECK_TOL: f64 = 1e-10;
const CHECK_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub k: usize,
    pub m_grid: Vec<usize>,
    /// Median over replicates of |log π̃ᴬQ_i − log π_i|, per m.
    pub errors: Vec<f64>,
    /// Least-squares slope of ln(error) on ln(m).
    pub slope: f64,
    /// Fitted intercept; e^intercept estimates the constant C.
    pub intercept: f64,
    pub expected_slope: f64,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GqDemoRow {
    pub m: usize,
    pub gq_median_rel_error: f64,
    pub gq_fraction_below_half: f64,
    pub aq_median_rel_error: f64,
    pub aq_fraction_below_half: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GqDemoReport {
    pub k: usize,
    pub rows: Vec<GqDemoRow>,
    pub replicates: usize,
    pub seed: u64,
}

/// Per-replicate comparison of one simulated group against the oracle.
struct Sample {
    aq: f64,
    gq: f64,
    oracle: f64,
}

fn check_grid(m_grid: &[usize], need_span: bool) -> Result<()> {
    if m_grid.is_empty() || m_grid[0] == 0 {
        return Err(Error::InvalidSpec(
            "m grid must be non-empty with m >= 1".into(),
        ));
    }
    if m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec(
            "m grid must be strictly increasing".into(),
        ));
    }
    if need_span && (m_grid.len() < 4 || m_grid[m_grid.len() - 1] < 100 * m_grid[0]) {
        return Err(Error::InvalidSpec(
            "rate estimation needs at least 4 group sizes spanning two decades".into(),
        ));
    }
    Ok(())
}

fn sample_grid(
    spec: &ModelSpec,
    params: &Parameters,
    k: usize,
    m_grid: &[usize],
    replicates: usize,
    seed: u64,
    want_gq: bool,
) -> Result<Vec<Vec<Sample>>> {
    if spec.p != 1 {
        return Err(Error::InvalidSpec(
            "oracle comparisons need a scalar random effect".into(),
        ));
    }
    if replicates == 0 {
        return Err(Error::range("replicates", 0, ">= 1"));
    }
    Prepared::new(spec, params)?;
    let rule = QuadratureRule::gauss_hermite(k, 1)?;
    let mut out = Vec::with_capacity(m_grid.len());
    for (mi, &m) in m_grid.iter().enumerate() {
        let row = map_range(replicates, true, |r| -> Result<Sample> {
            let mut rng = rng_for(seed.wrapping_add(r as u64), mi as u64);
            let g =
                intercept_covariate_group(spec, params, alloc::format!("m{m}-r{r}"), m, &mut rng)?;
            let prep = Prepared::new(spec, params)?;
            let kernel = GroupKernel::new(&g, spec, &params.beta, &prep);
            let a = kernel.adapt(&AdaptOptions::default())?;
            let aq = aq_kernel(&kernel, &rule, &a)?;
            let gq = if want_gq {
                gq_log_integral(&rule, |u| kernel.value(u))?
            } else {
                f64::NAN
            };
            let oracle = oracle_group_loglik(&g, spec, params, DEFAULT_TOL)?;
            if r == 0 {
                let coarse = oracle_group_loglik(&g, spec, params, CHECK_TOL)?;
                if !((coarse - oracle).abs() <= CHECK_AGREEMENT) {
                    return Err(Error::OracleInconsistent {
                        m,
                        coarse,
                        fine: oracle,
                    });
                }
            }
            Ok(Sample { aq, gq, oracle })
        });
        out.push(row.into_iter().collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

/// Least squares y = a + b x; returns (b, a).
pub fn ls_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

/// Median AQ log-likelihood error per group size and its log-log slope.
pub fn rate_check(
    spec: &ModelSpec,
    params: &Parameters,
    k: usize,
    m_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<RateReport> {
    check_grid(m_grid, true)?;
    let samples = sample_grid(spec, params, k, m_grid, replicates, seed, false)?;
    let mut errors = Vec::with_capacity(m_grid.len());
    let mut floors = Vec::with_capacity(m_grid.len());
    for row in &samples {
        let errs: Vec<f64> = row.iter().map(|s| (s.aq - s.oracle).abs()).collect();
        let mags: Vec<f64> = row.iter().map(|s| s.oracle.abs()).collect();
        errors.push(median(&errs));
        // What double rounding alone produces on a log-likelihood of this size.
        floors.push(100.0 * f64::EPSILON * (1.0 + median(&mags)));
    }
    let max_error = errors.iter().copied().fold(0.0, f64::max);
    if errors.iter().zip(&floors).all(|(e, f)| e <= f) || errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::RateUnidentifiable { max_error });
    }
    let lx: Vec<f64> = m_grid.iter().map(|&m| (m as f64).ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (slope, intercept) = ls_line(&lx, &ly);
    Ok(RateReport {
        k,
        m_grid: m_grid.to_vec(),
        errors,
        slope,
        intercept,
        expected_slope: -(rate_exponent(k) as f64),
        replicates,
        seed,
    })
}

/// Relative errors |π̃/π − 1| of GQ and AQ per group size.
pub fn gq_divergence_demo(
    spec: &ModelSpec,
    params: &Parameters,
    k: usize,
    m_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<GqDemoReport> {
    check_grid(m_grid, false)?;
    let samples = sample_grid(spec, params, k, m_grid, replicates, seed, true)?;
    let rows = m_grid
        .iter()
        .zip(&samples)
        .map(|(&m, row)| {
            let rel = |approx: f64, exact: f64| (approx - exact).exp_m1().abs();
            let gq: Vec<f64> = row.iter().map(|s| rel(s.gq, s.oracle)).collect();
            let aq: Vec<f64> = row.iter().map(|s| rel(s.aq, s.oracle)).collect();
            let below = |v: &[f64]| v.iter().filter(|e| **e < 0.5).count() as f64 / v.len() as f64;
            GqDemoRow {
                m,
                gq_median_rel_error: median(&gq),
                gq_fraction_below_half: below(&gq),
                aq_median_rel_error: median(&aq),
                aq_fraction_below_half: below(&aq),
            }
        })
        .collect();
    Ok(GqDemoReport {
        k,
        rows,
        replicates,
        seed,
    })
}
