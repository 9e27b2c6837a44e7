#![allow(dead_code)]

use aqfit_core::nalgebra::{DMatrix, DVector};
use aqfit_core::simulate::{intercept_covariate_group, rng_for, simulate_group};
use aqfit_core::{
    Group, GroupedDataset, ModelSpec, Parameters, RaneffFamily, RaneffParams, ResponseDispersion,
    ResponseFamily,
};
use rand::Rng;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn spec(r: ResponseFamily, g: RaneffFamily, d: usize) -> ModelSpec {
    ModelSpec::new(r, g, d, 1).unwrap()
}

/// Plausible parameters for a random-intercept model with covariate rows (1, z).
pub fn params_for(spec: &ModelSpec, beta: Vec<f64>, var: f64) -> Parameters {
    let response = match spec.response {
        ResponseFamily::GaussianIdentity => ResponseDispersion::Gaussian { variance: 0.7 },
        ResponseFamily::WeibullPh => ResponseDispersion::Weibull {
            baseline: 0.8,
            shape: 1.3,
        },
        _ => ResponseDispersion::None,
    };
    let raneff = match spec.raneff {
        RaneffFamily::Gaussian => RaneffParams::Gaussian {
            cov: DMatrix::from_element(1, 1, var),
        },
        RaneffFamily::LogGammaFrailty => RaneffParams::LogGammaFrailty { variance: var },
    };
    Parameters {
        beta,
        response,
        raneff,
    }
}

pub fn group(spec: &ModelSpec, params: &Parameters, m: usize, seed: u64) -> Group {
    let mut rng = rng_for(seed, 7);
    intercept_covariate_group(spec, params, format!("g{seed}"), m, &mut rng).unwrap()
}

pub fn dataset(
    spec: &ModelSpec,
    params: &Parameters,
    groups: usize,
    m: usize,
    seed: u64,
) -> GroupedDataset {
    let gs = (0..groups)
        .map(|i| group(spec, params, m, seed * 100_003 + i as u64))
        .collect();
    GroupedDataset::new(gs, spec.d, 1).unwrap()
}

/// Random intercept plus random slope on t = 0, 1, … (p = 2).
pub fn slope_group(
    beta: &[f64],
    cov: DMatrix<f64>,
    m: usize,
    seed: u64,
) -> (ModelSpec, Parameters, Group) {
    let spec = ModelSpec::new(
        ResponseFamily::PoissonLog,
        RaneffFamily::Gaussian,
        beta.len(),
        2,
    )
    .unwrap();
    let params = Parameters {
        beta: beta.to_vec(),
        response: ResponseDispersion::None,
        raneff: RaneffParams::Gaussian { cov },
    };
    let mut rng = rng_for(seed, 3);
    let mut x = Vec::new();
    let mut v = Vec::new();
    for j in 0..m {
        let t = j as f64 / m as f64;
        x.push(1.0);
        for _ in 1..beta.len() {
            x.push(rng.random_range(-1.0..1.0));
        }
        v.extend_from_slice(&[1.0, t]);
    }
    let g = simulate_group(&spec, &params, "s".into(), x, v, &mut rng).unwrap();
    (spec, params, g)
}

pub fn eta_rows(g: &Group, beta: &[f64]) -> Vec<f64> {
    (0..g.len())
        .map(|j| {
            g.x_row(j, beta.len())
                .iter()
                .zip(beta)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

pub fn values(g: &Group) -> Vec<f64> {
    g.responses
        .iter()
        .map(|r| match r {
            aqfit_core::Response::Value(y) => *y,
            _ => panic!("scalar response expected"),
        })
        .collect()
}

/// log N(y; Xβ, s² I + σ² 1 1ᵀ) by dense Cholesky.
pub fn lmm_group_loglik(g: &Group, beta: &[f64], s2: f64, sigma2: f64) -> f64 {
    let m = g.len();
    let r = DVector::from_iterator(
        m,
        values(g).iter().zip(eta_rows(g, beta)).map(|(y, e)| y - e),
    );
    let cov = DMatrix::from_fn(m, m, |i, j| sigma2 + if i == j { s2 } else { 0.0 });
    let ch = cov.cholesky().unwrap();
    let logdet = 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let quad = r.dot(&ch.solve(&r));
    -0.5 * (m as f64 * LN_2PI + logdet + quad)
}
