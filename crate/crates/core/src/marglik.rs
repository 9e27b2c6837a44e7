//! Quadrature approximations of each group's marginal likelihood
//! π_i(y_i; θ) = ∫ exp ℓ_i(u) du and their product over groups.
//!
//! Everything is accumulated in log space: a group contribution is a
//! log-sum-exp over nodes of ℓ_i(node) + log ω(z), so no ℓ_i value is ever
//! exponentiated on its own.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::data::{Group, GroupedDataset};
use crate::error::{Error, Result};
use crate::families::{ModelSpec, Parameters, Prepared};
use crate::inner::{AdaptOptions, Adaptation, GroupKernel};
use crate::math::logsumexp;
use crate::par::map_range;
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Adaptive Gauss–Hermite quadrature.
    Aq,
    /// Non-adaptive Gauss–Hermite quadrature.
    Gq,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Aq => "aq",
            Method::Gq => "gq",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aq" => Some(Method::Aq),
            "gq" => Some(Method::Gq),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoglikBreakdown {
    pub per_group: Vec<f64>,
    pub total: f64,
    pub method: Method,
    pub k: usize,
    /// Per-group adaptations (AQ only).
    pub adaptations: Option<Vec<Adaptation>>,
}

/// log Σ_z exp(log_f(L z + mode)) ω(z) + log|L| for an arbitrary log-integrand.
pub fn aq_log_integral<F>(
    rule: &QuadratureRule,
    mode: &[f64],
    chol_inv: &DMatrix<f64>,
    logdet_l: f64,
    mut log_f: F,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let p = rule.dim();
    if mode.len() != p || chol_inv.nrows() != p || chol_inv.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: "adaptation vs quadrature rule",
            expected: p,
            found: mode.len(),
        });
    }
    let mut u = alloc::vec![0.0; p];
    let mut terms = Vec::with_capacity(rule.len());
    for (i, (z, log_w)) in rule.nodes().enumerate() {
        for a in 0..p {
            let mut s = mode[a];
            for b in 0..=a {
                s += chol_inv[(a, b)] * z[b];
            }
            u[a] = s;
        }
        let t = log_f(&u) + log_w;
        if t.is_nan() {
            return Err(Error::NonFinite { node: i });
        }
        terms.push(t);
    }
    Ok(logdet_l + logsumexp(&terms))
}

/// log Σ_z exp(log_f(z)) ω(z) for an arbitrary log-integrand.
pub fn gq_log_integral<F>(rule: &QuadratureRule, mut log_f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut terms = Vec::with_capacity(rule.len());
    for (i, (z, log_w)) in rule.nodes().enumerate() {
        let t = log_f(z) + log_w;
        if t.is_nan() {
            return Err(Error::NonFinite { node: i });
        }
        terms.push(t);
    }
    Ok(logsumexp(&terms))
}

fn check_rule(rule: &QuadratureRule, spec: &ModelSpec) -> Result<()> {
    if rule.dim() != spec.p {
        return Err(Error::DimensionMismatch {
            context: "quadrature rule dimension",
            expected: spec.p,
            found: rule.dim(),
        });
    }
    Ok(())
}

fn check_group(group: &Group, spec: &ModelSpec) -> Result<()> {
    group.check_dims(spec.d, spec.p)?;
    group
        .responses
        .iter()
        .try_for_each(|y| spec.validate_response(y))
}

/// log π̃ᴬQ_i = log|L| + log Σ_z π_i(y_i, L z + û) ω(z).
pub fn aq_group_loglik(
    group: &Group,
    spec: &ModelSpec,
    params: &Parameters,
    rule: &QuadratureRule,
    adaptation: &Adaptation,
) -> Result<f64> {
    check_rule(rule, spec)?;
    check_group(group, spec)?;
    let prep = Prepared::new(spec, params)?;
    let kernel = GroupKernel::new(group, spec, &params.beta, &prep);
    aq_kernel(&kernel, rule, adaptation)
}

/// log π̃ᴳQ_i = log Σ_z π_i(y_i, z) ω(z).
pub fn gq_group_loglik(
    group: &Group,
    spec: &ModelSpec,
    params: &Parameters,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_rule(rule, spec)?;
    check_group(group, spec)?;
    let prep = Prepared::new(spec, params)?;
    let kernel = GroupKernel::new(group, spec, &params.beta, &prep);
    gq_log_integral(rule, |u| kernel.value(u))
}

pub(crate) fn aq_kernel(
    kernel: &GroupKernel<'_>,
    rule: &QuadratureRule,
    a: &Adaptation,
) -> Result<f64> {
    aq_log_integral(rule, &a.mode, &a.chol_inv, a.logdet_l, |u| kernel.value(u))
}

/// Approximate log π(y; θ) = Σ_i log π̃_i with a k-point (per coordinate) rule.
pub fn total_loglik(
    data: &GroupedDataset,
    spec: &ModelSpec,
    params: &Parameters,
    k: usize,
    method: Method,
) -> Result<LoglikBreakdown> {
    let mut eval = MarginalLikelihood::new(data, *spec, k, method)?;
    eval.warm_start = false;
    eval.evaluate(params)
}

/// Counters accumulated across likelihood evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub inner_iterations: usize,
    pub jitter_count: usize,
}

/// Reusable approximate log-likelihood for one dataset, rule and method. Keeps
/// the previous evaluation's modes as starting points for the next.
#[derive(Debug, Clone)]
pub struct MarginalLikelihood<'a> {
    data: &'a GroupedDataset,
    spec: ModelSpec,
    rule: QuadratureRule,
    method: Method,
    pub inner: AdaptOptions,
    pub warm_start: bool,
    pub parallel: bool,
    modes: Vec<Option<Vec<f64>>>,
    stats: EvalStats,
}

impl<'a> MarginalLikelihood<'a> {
    pub fn new(
        data: &'a GroupedDataset,
        spec: ModelSpec,
        k: usize,
        method: Method,
    ) -> Result<Self> {
        spec.check_dataset(data)?;
        let rule = QuadratureRule::gauss_hermite(k, spec.p)?;
        // Fan out only when the per-evaluation work dwarfs the scheduling cost.
        let work = data.n() * (rule.len() + 8);
        Ok(MarginalLikelihood {
            data,
            spec,
            rule,
            method,
            inner: AdaptOptions::default(),
            warm_start: true,
            parallel: work >= 50_000,
            modes: alloc::vec![None; data.len()],
            stats: EvalStats::default(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn data(&self) -> &GroupedDataset {
        self.data
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn stats(&self) -> EvalStats {
        self.stats
    }

    pub fn evaluate(&mut self, params: &Parameters) -> Result<LoglikBreakdown> {
        self.stats.evaluations += 1;
        let out = self.evaluate_inner(params);
        if out.is_err() {
            self.stats.failed_evaluations += 1;
        }
        out
    }

    /// Total approximate log-likelihood only.
    pub fn loglik(&mut self, params: &Parameters) -> Result<f64> {
        self.evaluate(params).map(|b| b.total)
    }

    fn evaluate_inner(&mut self, params: &Parameters) -> Result<LoglikBreakdown> {
        let prep = Prepared::new(&self.spec, params)?;
        let groups = self.data.groups();
        let spec = &self.spec;
        let rule = &self.rule;
        let method = self.method;
        let modes = &self.modes;
        let warm = self.warm_start;
        let inner = &self.inner;

        let results: Vec<Result<(f64, Option<Adaptation>)>> =
            map_range(groups.len(), self.parallel, |i| {
                let g = &groups[i];
                let kernel = GroupKernel::new(g, spec, &params.beta, &prep);
                let r = match method {
                    Method::Gq => gq_log_integral(rule, |u| kernel.value(u)).map(|v| (v, None)),
                    Method::Aq => {
                        let mut opts = inner.clone();
                        if warm {
                            opts.start = modes[i].clone();
                        }
                        kernel
                            .adapt(&opts)
                            .and_then(|a| aq_kernel(&kernel, rule, &a).map(|v| (v, Some(a))))
                    }
                };
                r.map_err(|e| e.in_group(i, &g.id))
            });

        let mut per_group = Vec::with_capacity(groups.len());
        let mut adaptations = Vec::new();
        for r in results {
            let (v, a) = r?;
            per_group.push(v);
            if let Some(a) = a {
                adaptations.push(a);
            }
        }
        let total = per_group.iter().sum();
        let adaptations = if method == Method::Aq {
            for (slot, a) in self.modes.iter_mut().zip(&adaptations) {
                self.stats.inner_iterations += a.iterations;
                self.stats.jitter_count += a.jittered as usize;
                *slot = Some(a.mode.clone());
            }
            Some(adaptations)
        } else {
            None
        };
        Ok(LoglikBreakdown {
            per_group,
            total,
            method,
            k: rule.order(),
            adaptations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Response;
    use crate::families::{RaneffFamily, ResponseFamily};
    use crate::inner::adapt;
    use crate::math::SQRT_2PI;
    use alloc::vec;

    #[test]
    fn gq_misses_far_mass() {
        // ∫ exp(-(u-10)²/2) du = √(2π), but a 5-point rule sees almost none of it.
        let rule = QuadratureRule::gauss_hermite(5, 1).unwrap();
        let log_val = gq_log_integral(&rule, |u| -0.5 * (u[0] - 10.0) * (u[0] - 10.0)).unwrap();
        assert!(log_val.exp() <= 1e-9);
        assert!((log_val.exp() / SQRT_2PI - 1.0).abs() > 0.5);
    }

    #[test]
    fn gq_on_standard_normal_integrand_is_exact() {
        // v = 0 rows: observations do not load on u, so π_i(y, u) = c · φ(u).
        let spec =
            ModelSpec::new(ResponseFamily::BernoulliLogit, RaneffFamily::Gaussian, 1, 1).unwrap();
        let g = Group {
            id: "g".into(),
            responses: vec![Response::Value(1.0), Response::Value(0.0)],
            x: vec![0.3, -1.2],
            v: vec![0.0, 0.0],
        };
        let th = Parameters::random_intercept(vec![0.7], 1.0);
        let log_c = (0.21 - crate::math::log1pexp(0.21)) + (-crate::math::log1pexp(-0.84));
        for k in 1..=12 {
            let rule = QuadratureRule::gauss_hermite(k, 1).unwrap();
            let v = gq_group_loglik(&g, &spec, &th, &rule).unwrap();
            assert!((v - log_c).abs() < 1e-13, "k={k}");
            let a = adapt(&g, &spec, &th, &AdaptOptions::default()).unwrap();
            let aq = aq_group_loglik(&g, &spec, &th, &rule, &a).unwrap();
            assert!(
                (aq - v).abs() < 1e-13,
                "GQ and AQ coincide when û = 0, H = 1"
            );
        }
    }

    #[test]
    fn nan_nodes_are_reported() {
        let rule = QuadratureRule::gauss_hermite(3, 1).unwrap();
        let e = gq_log_integral(&rule, |u| if u[0] > 0.0 { f64::NAN } else { 0.0 });
        assert_eq!(e, Err(Error::NonFinite { node: 2 }));
    }

    #[test]
    fn method_names() {
        assert_eq!(Method::parse("AQ"), Some(Method::Aq));
        assert_eq!(Method::parse(Method::Gq.name()), Some(Method::Gq));
        assert_eq!(Method::parse("laplace"), None);
    }
}
