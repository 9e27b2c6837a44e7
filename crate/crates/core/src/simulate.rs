//! Drawing data from the model. All randomness comes from ChaCha8 streams so
//! that a seed reproduces the same draws on every platform.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};

use crate::data::{Group, GroupedDataset, Response};
use crate::error::{Error, Result};
use crate::families::{ModelSpec, Parameters, RaneffParams, ResponseDispersion, ResponseFamily};
use crate::math::sigmoid;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

/// Generator for (seed, stream).
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One random-effect draw u ~ g(·; σ).
pub fn draw_raneff<R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &Parameters,
    rng: &mut R,
) -> Result<Vec<f64>> {
    params.validate(spec)?;
    match &params.raneff {
        RaneffParams::Gaussian { cov } => {
            let l = cov
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NotPositiveDefinite("random-effect covariance".into()))?
                .l();
            let z: Vec<f64> = (0..spec.p).map(|_| rng.sample(StandardNormal)).collect();
            Ok((0..spec.p)
                .map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum())
                .collect())
        }
        RaneffParams::LogGammaFrailty { variance } => {
            // U ~ Gamma(1/φ, φ) has mean 1 and variance φ; b = ln U.
            let g = Gamma::new(1.0 / variance, *variance)
                .map_err(|e| Error::InvalidParameters(alloc::format!("frailty variance: {e}")))?;
            let u: f64 = g.sample(rng);
            Ok(vec![u.max(f64::MIN_POSITIVE).ln()])
        }
    }
}

/// One response given the linear predictor η (which excludes ln μ for Weibull).
pub fn draw_response<R: Rng + ?Sized>(
    family: ResponseFamily,
    dispersion: ResponseDispersion,
    eta: f64,
    rng: &mut R,
) -> Result<Response> {
    Ok(match (family, dispersion) {
        (ResponseFamily::BernoulliLogit, _) => {
            Response::Value(if rng.random::<f64>() < sigmoid(eta) {
                1.0
            } else {
                0.0
            })
        }
        (ResponseFamily::PoissonLog, _) => {
            let lambda = eta.exp();
            if lambda <= 0.0 {
                Response::Value(0.0)
            } else {
                let d = Poisson::new(lambda).map_err(|e| {
                    Error::InvalidParameters(alloc::format!("Poisson mean {lambda}: {e}"))
                })?;
                Response::Value(d.sample(rng))
            }
        }
        (ResponseFamily::GaussianIdentity, ResponseDispersion::Gaussian { variance }) => {
            let z: f64 = rng.sample(StandardNormal);
            Response::Value(eta + variance.sqrt() * z)
        }
        (ResponseFamily::WeibullPh, ResponseDispersion::Weibull { baseline, shape }) => {
            // S(t) = exp(−t^α μ e^η): invert a unit exponential draw.
            let e: f64 = rng.sample(Exp1);
            let time = (e / (baseline * eta.exp())).powf(1.0 / shape);
            Response::Survival { time, event: true }
        }
        _ => {
            return Err(Error::InvalidParameters(alloc::format!(
                "dispersion parameters do not match family {}",
                family.name()
            )))
        }
    })
}

/// Draws u and then responses for the given design rows.
pub fn simulate_group<R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &Parameters,
    id: String,
    x: Vec<f64>,
    v: Vec<f64>,
    rng: &mut R,
) -> Result<Group> {
    let m = if spec.d > 0 {
        x.len() / spec.d
    } else {
        v.len() / spec.p
    };
    let u = draw_raneff(spec, params, rng)?;
    let mut responses = Vec::with_capacity(m);
    for j in 0..m {
        let xr = &x[j * spec.d..(j + 1) * spec.d];
        let vr = &v[j * spec.p..(j + 1) * spec.p];
        let eta = xr.iter().zip(&params.beta).map(|(a, b)| a * b).sum::<f64>()
            + vr.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        responses.push(draw_response(spec.response, params.response, eta, rng)?);
    }
    let g = Group {
        id,
        responses,
        x,
        v,
    };
    g.check_dims(spec.d, spec.p)?;
    Ok(g)
}

/// Random-intercept group of size m whose fixed-effect rows are
/// (1, z_1, …, z_{d−1}) with standard normal z.
pub fn intercept_covariate_group<R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &Parameters,
    id: String,
    m: usize,
    rng: &mut R,
) -> Result<Group> {
    if spec.p != 1 {
        return Err(Error::InvalidSpec(
            "random-intercept design needs p = 1".into(),
        ));
    }
    let mut x = Vec::with_capacity(m * spec.d);
    for _ in 0..m {
        for c in 0..spec.d {
            x.push(if c == 0 {
                1.0
            } else {
                rng.sample(StandardNormal)
            });
        }
    }
    simulate_group(spec, params, id, x, vec![1.0; m], rng)
}

pub const STUDY_FIXED_NAMES: [&str; 4] = ["intercept", "x", "t", "x:t"];

/// Logistic random-intercept study: group covariate x_i ∈ {0, 1} with
/// probability ½ each, times t_j = 0, …, m−1, rows (1, x_i, t_j, x_i t_j),
/// and U_i ~ N(0, σ²).
pub fn logistic_study_dataset<R: Rng + ?Sized>(
    groups: usize,
    m: usize,
    beta: [f64; 4],
    sigma: f64,
    rng: &mut R,
) -> Result<GroupedDataset> {
    if groups == 0 || m == 0 {
        return Err(Error::InvalidDataset(
            "study needs at least one group of one observation".into(),
        ));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::range("sigma", sigma, "> 0"));
    }
    let spec = study_spec();
    let params = Parameters::random_intercept(beta.to_vec(), sigma * sigma);
    let mut out = Vec::with_capacity(groups);
    for i in 0..groups {
        let xi = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let mut x = Vec::with_capacity(4 * m);
        for t in 0..m {
            let t = t as f64;
            x.extend_from_slice(&[1.0, xi, t, xi * t]);
        }
        out.push(simulate_group(
            &spec,
            &params,
            alloc::format!("{}", i + 1),
            x,
            vec![1.0; m],
            rng,
        )?);
    }
    GroupedDataset::with_names(
        out,
        STUDY_FIXED_NAMES.iter().map(|s| String::from(*s)).collect(),
        1,
    )
}

pub fn study_spec() -> ModelSpec {
    ModelSpec {
        response: ResponseFamily::BernoulliLogit,
        raneff: crate::families::RaneffFamily::Gaussian,
        d: 4,
        p: 1,
    }
}
