//! Per-group joint log-likelihood ℓ_i(u) = Σ_j log f(y_ij | η_ij) + log g(u) and the
//! adaptation (mode û, negative Hessian H, lower Cholesky L of H⁻¹) that recentres
//! and rescales the quadrature rule.

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::data::Group;
use crate::error::{Error, Result};
use crate::families::{DerivOrder, ModelSpec, Parameters, Prepared};

#[derive(Debug, Clone, PartialEq)]
pub struct JointEval {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub hessian: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptOptions {
    /// Convergence threshold on ‖∇ℓ_i‖∞.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point; zero when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        AdaptOptions {
            tol: 1e-8,
            max_iter: 50,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adaptation {
    pub mode: Vec<f64>,
    pub neg_hessian: DMatrix<f64>,
    /// Lower-triangular L with L Lᵀ = H⁻¹.
    pub chol_inv: DMatrix<f64>,
    /// log |L| = -½ log det H.
    pub logdet_l: f64,
    /// ℓ_i(û).
    pub loglik_at_mode: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Whether a diagonal jitter was needed to make H positive definite.
    pub jittered: bool,
}

const MAX_HALVINGS: usize = 30;

/// ℓ_i specialised to one group and one θ: the fixed part of every linear
/// predictor is computed once.
pub(crate) struct GroupKernel<'a> {
    group: &'a Group,
    prep: &'a Prepared,
    eta0: Vec<f64>,
    p: usize,
}

impl<'a> GroupKernel<'a> {
    pub(crate) fn new(
        group: &'a Group,
        spec: &ModelSpec,
        beta: &[f64],
        prep: &'a Prepared,
    ) -> Self {
        let d = spec.d;
        let eta0 = (0..group.len())
            .map(|j| {
                let x = group.x_row(j, d);
                prep.offset + x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        GroupKernel {
            group,
            prep,
            eta0,
            p: spec.p,
        }
    }

    /// Value of ℓ_i(u); fills `grad` (len p) and `hess` (p×p row-major) as requested.
    pub(crate) fn eval(
        &self,
        u: &[f64],
        order: DerivOrder,
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> f64 {
        let p = self.p;
        let mut value = self.prep.raneff_eval(u, order, grad, hess);
        for (j, (y, &eta0)) in self.group.responses.iter().zip(&self.eta0).enumerate() {
            let v = self.group.v_row(j, p);
            let mut eta = eta0;
            for (vi, ui) in v.iter().zip(u) {
                eta += vi * ui;
            }
            let (f, d1, d2) = self.prep.response_eval(y, eta, order);
            value += f;
            if order.wants_gradient() {
                for (g, vi) in grad.iter_mut().zip(v) {
                    *g += d1 * vi;
                }
            }
            if order.wants_hessian() {
                for a in 0..p {
                    let s = d2 * v[a];
                    for b in 0..p {
                        hess[a * p + b] += s * v[b];
                    }
                }
            }
        }
        value
    }

    pub(crate) fn value(&self, u: &[f64]) -> f64 {
        self.eval(u, DerivOrder::Value, &mut [], &mut [])
    }

    pub(crate) fn adapt(&self, opts: &AdaptOptions) -> Result<Adaptation> {
        let p = self.p;
        let mut u = match &opts.start {
            Some(s) if s.len() == p && s.iter().all(|c| c.is_finite()) => s.clone(),
            Some(s) if s.len() != p => {
                return Err(Error::DimensionMismatch {
                    context: "adaptation start",
                    expected: p,
                    found: s.len(),
                })
            }
            _ => alloc::vec![0.0; p],
        };
        let mut grad = alloc::vec![0.0; p];
        let mut hess = alloc::vec![0.0; p * p];
        let mut trial = alloc::vec![0.0; p];

        let mut f = self.eval(&u, DerivOrder::Hessian, &mut grad, &mut hess);
        if !f.is_finite() && opts.start.is_some() {
            u.iter_mut().for_each(|c| *c = 0.0);
            f = self.eval(&u, DerivOrder::Hessian, &mut grad, &mut hess);
        }
        let mut iterations = 0;
        let mut converged = false;
        while iterations < opts.max_iter {
            if !f.is_finite() {
                break;
            }
            let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let step = newton_direction(&grad, &hess, p);
            // Predicted increase below what rounding lets ℓ_i resolve.
            let rounding = 64.0 * f64::EPSILON * (1.0 + f.abs());
            let decrement: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
            if gnorm <= opts.tol || decrement.abs() <= rounding {
                // Polish: one more Newton step takes the mode to rounding level, so
                // ℓ_i(û) and H(û) do not depend on the starting point.
                for i in 0..p {
                    trial[i] = u[i] + step[i];
                }
                let f_new = self.value(&trial);
                if f_new >= f - rounding {
                    u.copy_from_slice(&trial);
                }
                converged = true;
                break;
            }
            iterations += 1;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                for i in 0..p {
                    trial[i] = u[i] + t * step[i];
                }
                let f_new = self.value(&trial);
                if f_new.is_finite() && f_new >= f {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            u.copy_from_slice(&trial);
            f = self.eval(&u, DerivOrder::Hessian, &mut grad, &mut hess);
        }
        if !converged {
            let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            return Err(Error::InnerNonConvergence {
                iterations,
                grad_norm,
                last: u,
            });
        }

        let loglik_at_mode = self.eval(&u, DerivOrder::Hessian, &mut grad, &mut hess);
        let neg = DMatrix::from_fn(p, p, |i, j| -0.5 * (hess[i * p + j] + hess[j * p + i]));
        let (chol, neg_hessian, jittered) = match neg.clone().cholesky() {
            Some(c) => (c, neg, false),
            None => {
                let max_diag = neg.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
                let mut bumped = neg;
                for i in 0..p {
                    bumped[(i, i)] += 1e-8 * (1.0 + max_diag);
                }
                let c = bumped.clone().cholesky().ok_or_else(|| {
                    Error::NotPositiveDefinite("negative Hessian at the mode".into())
                })?;
                (c, bumped, true)
            }
        };
        let logdet_l = -chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let chol_inv = chol
            .inverse()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("inverse negative Hessian".into()))?
            .l();
        Ok(Adaptation {
            mode: u,
            neg_hessian,
            chol_inv,
            logdet_l,
            loglik_at_mode,
            converged,
            iterations,
            jittered,
        })
    }
}

/// Solves (-hess) δ = grad, falling back to a Levenberg shift when -hess is not
/// positive definite away from the mode.
fn newton_direction(grad: &[f64], hess: &[f64], p: usize) -> Vec<f64> {
    let neg = DMatrix::from_fn(p, p, |i, j| -0.5 * (hess[i * p + j] + hess[j * p + i]));
    let g = nalgebra::DVector::from_column_slice(grad);
    if let Some(c) = neg.clone().cholesky() {
        return c.solve(&g).iter().copied().collect();
    }
    let scale = neg.diagonal().iter().fold(1.0f64, |m, d| m.max(d.abs()));
    let mut shift = 1e-6 * scale;
    for _ in 0..40 {
        let mut m = neg.clone();
        for i in 0..p {
            m[(i, i)] += shift;
        }
        if let Some(c) = m.cholesky() {
            return c.solve(&g).iter().copied().collect();
        }
        shift *= 10.0;
    }
    grad.iter().map(|gi| gi / scale).collect()
}

fn check_group(group: &Group, spec: &ModelSpec) -> Result<()> {
    group.check_dims(spec.d, spec.p)?;
    for y in &group.responses {
        spec.validate_response(y)?;
    }
    Ok(())
}

/// ℓ_i(y_i, u; θ) and its u-derivatives up to `order`.
pub fn group_joint_loglik(
    group: &Group,
    spec: &ModelSpec,
    params: &Parameters,
    u: &[f64],
    order: DerivOrder,
) -> Result<JointEval> {
    check_group(group, spec)?;
    if u.len() != spec.p {
        return Err(Error::DimensionMismatch {
            context: "random effect u",
            expected: spec.p,
            found: u.len(),
        });
    }
    let prep = Prepared::new(spec, params)?;
    let kernel = GroupKernel::new(group, spec, &params.beta, &prep);
    let p = spec.p;
    let mut grad = alloc::vec![0.0; p];
    let mut hess = alloc::vec![0.0; p * p];
    let value = kernel.eval(u, order, &mut grad, &mut hess);
    Ok(JointEval {
        value,
        gradient: order.wants_gradient().then_some(grad),
        hessian: order
            .wants_hessian()
            .then(|| DMatrix::from_row_slice(p, p, &hess)),
    })
}

/// Newton ascent to the mode of ℓ_i with step halving, then the curvature there.
pub fn adapt(
    group: &Group,
    spec: &ModelSpec,
    params: &Parameters,
    opts: &AdaptOptions,
) -> Result<Adaptation> {
    check_group(group, spec)?;
    let prep = Prepared::new(spec, params)?;
    GroupKernel::new(group, spec, &params.beta, &prep).adapt(opts)
}
