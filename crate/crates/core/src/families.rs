//! Response families f(y | η) and random-effect families g(u), with analytic
//! derivatives, plus the parameter vector θ = (β, σ) and its unconstrained maps.
//!
//! Linear predictor: η_ij = offset + x_ijᵀβ + v_ijᵀu_i, where the offset is
//! log μ for the Weibull baseline and zero otherwise.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::{GroupedDataset, Response};
use crate::error::{Error, Result};
use crate::math::{ln_factorial, ln_gamma_remainder, log1pexp, sigmoid, LN_2PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResponseFamily {
    BernoulliLogit,
    PoissonLog,
    GaussianIdentity,
    /// Proportional hazards with hazard α t^(α-1) e^η.
    WeibullPh,
}

impl ResponseFamily {
    pub const ALL: [ResponseFamily; 4] = [
        ResponseFamily::BernoulliLogit,
        ResponseFamily::PoissonLog,
        ResponseFamily::GaussianIdentity,
        ResponseFamily::WeibullPh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResponseFamily::BernoulliLogit => "bernoulli_logit",
            ResponseFamily::PoissonLog => "poisson_log",
            ResponseFamily::GaussianIdentity => "gaussian_identity",
            ResponseFamily::WeibullPh => "weibull_ph",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Number of positive response-level dispersion parameters.
    pub fn n_dispersion(self) -> usize {
        match self {
            ResponseFamily::BernoulliLogit | ResponseFamily::PoissonLog => 0,
            ResponseFamily::GaussianIdentity => 1,
            ResponseFamily::WeibullPh => 2,
        }
    }

    pub fn is_survival(self) -> bool {
        self == ResponseFamily::WeibullPh
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RaneffFamily {
    Gaussian,
    /// b = log U with U ~ Gamma(1/φ, scale φ), i.e. a mean-one multiplicative frailty.
    LogGammaFrailty,
}

impl RaneffFamily {
    pub const ALL: [RaneffFamily; 2] = [RaneffFamily::Gaussian, RaneffFamily::LogGammaFrailty];

    pub fn name(self) -> &'static str {
        match self {
            RaneffFamily::Gaussian => "gaussian",
            RaneffFamily::LogGammaFrailty => "log_gamma_frailty",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    Value,
    Gradient,
    Hessian,
}

impl DerivOrder {
    pub fn from_u8(order: u8) -> Option<Self> {
        match order {
            0 => Some(DerivOrder::Value),
            1 => Some(DerivOrder::Gradient),
            2 => Some(DerivOrder::Hessian),
            _ => None,
        }
    }

    pub(crate) fn wants_gradient(self) -> bool {
        self != DerivOrder::Value
    }

    pub(crate) fn wants_hessian(self) -> bool {
        self == DerivOrder::Hessian
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub response: ResponseFamily,
    pub raneff: RaneffFamily,
    /// Fixed-effect dimension.
    pub d: usize,
    /// Random-effect dimension.
    pub p: usize,
}

impl ModelSpec {
    pub fn new(response: ResponseFamily, raneff: RaneffFamily, d: usize, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidSpec(
                "random-effect dimension p must be at least 1".into(),
            ));
        }
        if raneff == RaneffFamily::LogGammaFrailty && p != 1 {
            return Err(Error::InvalidSpec(alloc::format!(
                "log_gamma_frailty requires p = 1, got p = {p}"
            )));
        }
        Ok(ModelSpec {
            response,
            raneff,
            d,
            p,
        })
    }

    /// Number of random-effect parameters.
    pub fn n_raneff_params(&self) -> usize {
        match self.raneff {
            RaneffFamily::Gaussian => self.p * (self.p + 1) / 2,
            RaneffFamily::LogGammaFrailty => 1,
        }
    }

    /// Dispersion dimension s.
    pub fn s(&self) -> usize {
        self.response.n_dispersion() + self.n_raneff_params()
    }

    pub fn n_params(&self) -> usize {
        self.d + self.s()
    }

    /// Labels of the reporting-scale parameter vector.
    pub fn parameter_names(&self, fixed_names: &[String]) -> Vec<String> {
        let mut names: Vec<String> = (0..self.d)
            .map(|j| {
                fixed_names
                    .get(j)
                    .cloned()
                    .unwrap_or_else(|| alloc::format!("beta{}", j + 1))
            })
            .collect();
        match self.response {
            ResponseFamily::GaussianIdentity => names.push("sigma_eps2".into()),
            ResponseFamily::WeibullPh => {
                names.push("mu".into());
                names.push("alpha".into());
            }
            _ => {}
        }
        if self.p == 1 {
            names.push("sigma2".into());
        } else {
            for i in 0..self.p {
                for j in 0..=i {
                    names.push(alloc::format!("chol[{},{}]", i + 1, j + 1));
                }
            }
        }
        names
    }

    /// Which reporting-scale coordinates are log transforms of positive parameters.
    pub fn log_scale_mask(&self) -> Vec<bool> {
        let mut mask = alloc::vec![false; self.d];
        mask.extend(core::iter::repeat_n(true, self.response.n_dispersion()));
        if self.p == 1 {
            mask.push(true);
        } else {
            for i in 0..self.p {
                for j in 0..=i {
                    mask.push(i == j);
                }
            }
        }
        mask
    }

    pub fn validate_response(&self, y: &Response) -> Result<()> {
        let family = self.response.name();
        let bad = |detail: String| Err(Error::InvalidResponse { family, detail });
        match (self.response, *y) {
            (ResponseFamily::BernoulliLogit, Response::Value(v)) => {
                if v != 0.0 && v != 1.0 {
                    return bad(alloc::format!("expected 0 or 1, got {v}"));
                }
            }
            (ResponseFamily::PoissonLog, Response::Value(v)) => {
                if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0) {
                    return bad(alloc::format!(
                        "expected a non-negative integer count, got {v}"
                    ));
                }
            }
            (ResponseFamily::GaussianIdentity, Response::Value(v)) => {
                if !v.is_finite() {
                    return bad(alloc::format!("expected a finite value, got {v}"));
                }
            }
            (ResponseFamily::WeibullPh, Response::Survival { time, .. }) => {
                if !(time.is_finite() && time > 0.0) {
                    return bad(alloc::format!("expected a positive event time, got {time}"));
                }
            }
            (ResponseFamily::WeibullPh, Response::Value(_)) => {
                return bad("expected a (time, status) pair".into());
            }
            (_, Response::Survival { .. }) => {
                return bad("expected a scalar response, got a (time, status) pair".into());
            }
        }
        Ok(())
    }

    pub fn check_dataset(&self, data: &GroupedDataset) -> Result<()> {
        if data.d() != self.d {
            return Err(Error::DimensionMismatch {
                context: "fixed-effect dimension d",
                expected: self.d,
                found: data.d(),
            });
        }
        if data.p() != self.p {
            return Err(Error::DimensionMismatch {
                context: "random-effect dimension p",
                expected: self.p,
                found: data.p(),
            });
        }
        for (i, g) in data.groups().iter().enumerate() {
            for y in &g.responses {
                self.validate_response(y)
                    .map_err(|e| e.in_group(i, &g.id))?;
            }
        }
        Ok(())
    }
}

/// Bijection between a positive parameter and the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositiveTransform {
    #[default]
    Log,
    Softplus,
}

impl PositiveTransform {
    /// Natural (positive) value to unconstrained coordinate.
    pub fn to_unconstrained(self, x: f64) -> f64 {
        match self {
            PositiveTransform::Log => x.ln(),
            PositiveTransform::Softplus => {
                if x > 30.0 {
                    x + (-(-x).exp()).ln_1p()
                } else {
                    x.exp_m1().ln()
                }
            }
        }
    }

    pub fn to_natural(self, y: f64) -> f64 {
        match self {
            PositiveTransform::Log => y.exp(),
            PositiveTransform::Softplus => log1pexp(y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResponseDispersion {
    None,
    Gaussian {
        variance: f64,
    },
    /// Hazard α t^(α-1) μ e^(xᵀβ + b).
    Weibull {
        baseline: f64,
        shape: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RaneffParams {
    Gaussian { cov: DMatrix<f64> },
    LogGammaFrailty { variance: f64 },
}

/// θ = (β, σ) on the natural scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub beta: Vec<f64>,
    pub response: ResponseDispersion,
    pub raneff: RaneffParams,
}

impl Parameters {
    /// β = 0 and unit dispersion/variance parameters.
    pub fn default_for(spec: &ModelSpec) -> Self {
        let response = match spec.response {
            ResponseFamily::BernoulliLogit | ResponseFamily::PoissonLog => ResponseDispersion::None,
            ResponseFamily::GaussianIdentity => ResponseDispersion::Gaussian { variance: 1.0 },
            ResponseFamily::WeibullPh => ResponseDispersion::Weibull {
                baseline: 1.0,
                shape: 1.0,
            },
        };
        let raneff = match spec.raneff {
            RaneffFamily::Gaussian => RaneffParams::Gaussian {
                cov: DMatrix::identity(spec.p, spec.p),
            },
            RaneffFamily::LogGammaFrailty => RaneffParams::LogGammaFrailty { variance: 1.0 },
        };
        Parameters {
            beta: alloc::vec![0.0; spec.d],
            response,
            raneff,
        }
    }

    /// Scalar random intercept N(0, σ²) with no response dispersion.
    pub fn random_intercept(beta: Vec<f64>, sigma2: f64) -> Self {
        Parameters {
            beta,
            response: ResponseDispersion::None,
            raneff: RaneffParams::Gaussian {
                cov: DMatrix::from_element(1, 1, sigma2),
            },
        }
    }

    pub fn with_response(mut self, response: ResponseDispersion) -> Self {
        self.response = response;
        self
    }

    /// Random-effect variance for p = 1 models (σ² or the frailty variance φ).
    pub fn raneff_variance(&self) -> Option<f64> {
        match &self.raneff {
            RaneffParams::Gaussian { cov } if cov.nrows() == 1 => Some(cov[(0, 0)]),
            RaneffParams::LogGammaFrailty { variance } => Some(*variance),
            _ => None,
        }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.beta.len() != spec.d {
            return Err(Error::DimensionMismatch {
                context: "beta",
                expected: spec.d,
                found: self.beta.len(),
            });
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameters("beta must be finite".into()));
        }
        let positive = |what: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameters(alloc::format!(
                    "{what} must be positive, got {x}"
                )))
            }
        };
        match (spec.response, self.response) {
            (
                ResponseFamily::BernoulliLogit | ResponseFamily::PoissonLog,
                ResponseDispersion::None,
            ) => {}
            (ResponseFamily::GaussianIdentity, ResponseDispersion::Gaussian { variance }) => {
                positive("residual variance", variance)?
            }
            (ResponseFamily::WeibullPh, ResponseDispersion::Weibull { baseline, shape }) => {
                positive("Weibull baseline mu", baseline)?;
                positive("Weibull shape alpha", shape)?;
            }
            _ => {
                return Err(Error::InvalidParameters(alloc::format!(
                    "dispersion parameters do not match family {}",
                    spec.response.name()
                )))
            }
        }
        match (&self.raneff, spec.raneff) {
            (RaneffParams::Gaussian { cov }, RaneffFamily::Gaussian) => {
                if cov.nrows() != spec.p || cov.ncols() != spec.p {
                    return Err(Error::DimensionMismatch {
                        context: "random-effect covariance",
                        expected: spec.p,
                        found: cov.nrows(),
                    });
                }
                if cov.clone().cholesky().is_none() || cov.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NotPositiveDefinite(
                        "random-effect covariance".into(),
                    ));
                }
            }
            (RaneffParams::LogGammaFrailty { variance }, RaneffFamily::LogGammaFrailty) => {
                positive("frailty variance", *variance)?
            }
            _ => {
                return Err(Error::InvalidParameters(alloc::format!(
                    "random-effect parameters do not match family {}",
                    spec.raneff.name()
                )))
            }
        }
        Ok(())
    }

    /// σ on the natural scale: response dispersion followed by the random-effect
    /// variance (p = 1) or the lower triangle of Σ, row-major (p > 1).
    pub fn sigma_natural(&self) -> Vec<f64> {
        let mut out = Vec::new();
        match self.response {
            ResponseDispersion::None => {}
            ResponseDispersion::Gaussian { variance } => out.push(variance),
            ResponseDispersion::Weibull { baseline, shape } => {
                out.push(baseline);
                out.push(shape);
            }
        }
        match &self.raneff {
            RaneffParams::Gaussian { cov } => {
                for i in 0..cov.nrows() {
                    for j in 0..=i {
                        out.push(cov[(i, j)]);
                    }
                }
            }
            RaneffParams::LogGammaFrailty { variance } => out.push(*variance),
        }
        out
    }

    /// Packs θ as (β, transformed dispersions, random-effect coordinates). For p = 1
    /// the random-effect coordinate is the transformed variance; for p > 1 it is the
    /// lower Cholesky factor of Σ with transformed diagonal.
    pub fn to_unconstrained(&self, spec: &ModelSpec, t: PositiveTransform) -> Result<Vec<f64>> {
        self.validate(spec)?;
        let mut out = self.beta.clone();
        match self.response {
            ResponseDispersion::None => {}
            ResponseDispersion::Gaussian { variance } => out.push(t.to_unconstrained(variance)),
            ResponseDispersion::Weibull { baseline, shape } => {
                out.push(t.to_unconstrained(baseline));
                out.push(t.to_unconstrained(shape));
            }
        }
        match &self.raneff {
            RaneffParams::Gaussian { cov } if spec.p == 1 => {
                out.push(t.to_unconstrained(cov[(0, 0)]))
            }
            RaneffParams::Gaussian { cov } => {
                let l = cov
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::NotPositiveDefinite("random-effect covariance".into()))?
                    .l();
                for i in 0..spec.p {
                    for j in 0..=i {
                        out.push(if i == j {
                            t.to_unconstrained(l[(i, i)])
                        } else {
                            l[(i, j)]
                        });
                    }
                }
            }
            RaneffParams::LogGammaFrailty { variance } => out.push(t.to_unconstrained(*variance)),
        }
        Ok(out)
    }

    pub fn from_unconstrained(
        spec: &ModelSpec,
        theta: &[f64],
        t: PositiveTransform,
    ) -> Result<Self> {
        if theta.len() != spec.n_params() {
            return Err(Error::DimensionMismatch {
                context: "unconstrained parameter vector",
                expected: spec.n_params(),
                found: theta.len(),
            });
        }
        let (beta, rest) = theta.split_at(spec.d);
        let (disp, re) = rest.split_at(spec.response.n_dispersion());
        let response = match spec.response {
            ResponseFamily::BernoulliLogit | ResponseFamily::PoissonLog => ResponseDispersion::None,
            ResponseFamily::GaussianIdentity => ResponseDispersion::Gaussian {
                variance: t.to_natural(disp[0]),
            },
            ResponseFamily::WeibullPh => ResponseDispersion::Weibull {
                baseline: t.to_natural(disp[0]),
                shape: t.to_natural(disp[1]),
            },
        };
        let raneff = match spec.raneff {
            RaneffFamily::LogGammaFrailty => RaneffParams::LogGammaFrailty {
                variance: t.to_natural(re[0]),
            },
            RaneffFamily::Gaussian if spec.p == 1 => RaneffParams::Gaussian {
                cov: DMatrix::from_element(1, 1, t.to_natural(re[0])),
            },
            RaneffFamily::Gaussian => {
                let mut l = DMatrix::zeros(spec.p, spec.p);
                let mut it = re.iter();
                for i in 0..spec.p {
                    for j in 0..=i {
                        let c = *it.next().expect("length checked above");
                        l[(i, j)] = if i == j { t.to_natural(c) } else { c };
                    }
                }
                RaneffParams::Gaussian {
                    cov: &l * l.transpose(),
                }
            }
        };
        let params = Parameters {
            beta: beta.to_vec(),
            response,
            raneff,
        };
        params.validate(spec)?;
        Ok(params)
    }
}

/// Log-density of one response and its η-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaDerivs {
    pub value: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
}

/// Log-density of the random effect and its u-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct RaneffDerivs {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub hessian: Option<DMatrix<f64>>,
}

/// log f(y | η) for the spec's response family. For `weibull_ph`, η already
/// contains the log-baseline offset.
pub fn response_logdensity(
    spec: &ModelSpec,
    y: &Response,
    eta: f64,
    params: &Parameters,
    order: DerivOrder,
) -> Result<EtaDerivs> {
    spec.validate_response(y)?;
    if !eta.is_finite() {
        return Err(Error::InvalidParameters(alloc::format!(
            "linear predictor must be finite, got {eta}"
        )));
    }
    let prep = Prepared::new(spec, params)?;
    let (value, d1, d2) = prep.response_eval(y, eta, order);
    Ok(EtaDerivs {
        value,
        d1: order.wants_gradient().then_some(d1),
        d2: order.wants_hessian().then_some(d2),
    })
}

/// log g(u; σ) for the spec's random-effect family.
pub fn raneff_logdensity(
    spec: &ModelSpec,
    u: &[f64],
    params: &Parameters,
    order: DerivOrder,
) -> Result<RaneffDerivs> {
    if u.len() != spec.p {
        return Err(Error::DimensionMismatch {
            context: "random effect u",
            expected: spec.p,
            found: u.len(),
        });
    }
    let prep = Prepared::new(spec, params)?;
    let p = spec.p;
    let mut grad = alloc::vec![0.0; p];
    let mut hess = alloc::vec![0.0; p * p];
    let value = prep.raneff_eval(u, order, &mut grad, &mut hess);
    Ok(RaneffDerivs {
        value,
        gradient: order.wants_gradient().then_some(grad),
        hessian: order
            .wants_hessian()
            .then(|| DMatrix::from_row_slice(p, p, &hess)),
    })
}

#[derive(Debug, Clone)]
enum ResponsePrep {
    Bernoulli,
    Poisson,
    Gaussian { inv_var: f64, log_norm: f64 },
    Weibull { shape: f64, ln_shape: f64 },
}

#[derive(Debug, Clone)]
enum RaneffPrep {
    Gaussian { precision: Vec<f64>, log_norm: f64 },
    LogGamma { a: f64, log_norm: f64 },
}

/// Per-θ constants hoisted out of the per-observation loops.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub(crate) p: usize,
    pub(crate) offset: f64,
    response: ResponsePrep,
    raneff: RaneffPrep,
}

impl Prepared {
    pub(crate) fn new(spec: &ModelSpec, params: &Parameters) -> Result<Self> {
        params.validate(spec)?;
        let (offset, response) = match params.response {
            ResponseDispersion::None => match spec.response {
                ResponseFamily::BernoulliLogit => (0.0, ResponsePrep::Bernoulli),
                _ => (0.0, ResponsePrep::Poisson),
            },
            ResponseDispersion::Gaussian { variance } => (
                0.0,
                ResponsePrep::Gaussian {
                    inv_var: 1.0 / variance,
                    log_norm: -0.5 * (LN_2PI + variance.ln()),
                },
            ),
            ResponseDispersion::Weibull { baseline, shape } => (
                baseline.ln(),
                ResponsePrep::Weibull {
                    shape,
                    ln_shape: shape.ln(),
                },
            ),
        };
        let raneff = match &params.raneff {
            RaneffParams::Gaussian { cov } => {
                let chol = cov
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::NotPositiveDefinite("random-effect covariance".into()))?;
                let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                let inv = chol.inverse();
                let mut precision = Vec::with_capacity(spec.p * spec.p);
                for i in 0..spec.p {
                    for j in 0..spec.p {
                        precision.push(inv[(i, j)]);
                    }
                }
                RaneffPrep::Gaussian {
                    precision,
                    log_norm: -0.5 * (spec.p as f64 * LN_2PI + logdet),
                }
            }
            RaneffParams::LogGammaFrailty { variance } => {
                let a = 1.0 / variance;
                RaneffPrep::LogGamma {
                    a,
                    // a ln a − a − lnΓ(a), without the O(a ln a) cancellation.
                    log_norm: 0.5 * (a.ln() - LN_2PI) - ln_gamma_remainder(a),
                }
            }
        };
        Ok(Prepared {
            p: spec.p,
            offset,
            response,
            raneff,
        })
    }

    /// (value, d/dη, d²/dη²). Assumes a validated response.
    #[inline]
    pub(crate) fn response_eval(
        &self,
        y: &Response,
        eta: f64,
        order: DerivOrder,
    ) -> (f64, f64, f64) {
        match (&self.response, *y) {
            (ResponsePrep::Bernoulli, Response::Value(y)) => {
                let value = y * eta - log1pexp(eta);
                if order == DerivOrder::Value {
                    return (value, 0.0, 0.0);
                }
                let mu = sigmoid(eta);
                (value, y - mu, -mu * (1.0 - mu))
            }
            (ResponsePrep::Poisson, Response::Value(y)) => {
                let mu = eta.exp();
                (y * eta - mu - ln_factorial(y), y - mu, -mu)
            }
            (ResponsePrep::Gaussian { inv_var, log_norm }, Response::Value(y)) => {
                let r = y - eta;
                (log_norm - 0.5 * r * r * inv_var, r * inv_var, -inv_var)
            }
            (ResponsePrep::Weibull { shape, ln_shape }, Response::Survival { time, event }) => {
                let cum_hazard = (shape * time.ln() + eta).exp();
                let delta = if event { 1.0 } else { 0.0 };
                let value = delta * (ln_shape + (shape - 1.0) * time.ln() + eta) - cum_hazard;
                (value, delta - cum_hazard, -cum_hazard)
            }
            _ => (f64::NAN, f64::NAN, f64::NAN),
        }
    }

    /// Writes log g(u) derivatives into `grad` (len p) and `hess` (p×p row-major)
    /// when requested; returns the value.
    #[inline]
    pub(crate) fn raneff_eval(
        &self,
        u: &[f64],
        order: DerivOrder,
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> f64 {
        let p = self.p;
        match &self.raneff {
            RaneffPrep::Gaussian {
                precision,
                log_norm,
            } => {
                let mut quad = 0.0;
                for i in 0..p {
                    let mut pu = 0.0;
                    for j in 0..p {
                        pu += precision[i * p + j] * u[j];
                    }
                    quad += u[i] * pu;
                    if order.wants_gradient() {
                        grad[i] = -pu;
                    }
                }
                if order.wants_hessian() {
                    for (h, q) in hess.iter_mut().zip(precision) {
                        *h = -q;
                    }
                }
                log_norm - 0.5 * quad
            }
            RaneffPrep::LogGamma { a, log_norm } => {
                // a b − a e^b + a = a (b − expm1 b): O(1) near the mode for any a.
                let b = u[0];
                let em1 = b.exp_m1();
                if order.wants_gradient() {
                    grad[0] = -a * em1;
                }
                if order.wants_hessian() {
                    hess[0] = -a * (em1 + 1.0);
                }
                log_norm + a * (b - em1)
            }
        }
    }
}
