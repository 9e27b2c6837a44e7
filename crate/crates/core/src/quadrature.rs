//! Gauss–Hermite rules with respect to the standard-normal kernel exp(-‖z‖²/2).
//!
//! One-dimensional nodes are the roots of the probabilists' Hermite polynomial
//! He_k, found as eigenvalues of the Jacobi matrix (Golub–Welsch) and polished
//! by Newton steps on the orthonormal three-term recurrence. Kernel weights come
//! from the Christoffel function at the polished nodes, which keeps full
//! relative accuracy in the far tails where eigenvector components underflow.
//!
//! A rule also carries the *adapted* weights ω(z) = v·exp(‖z‖²/2) used by the
//! quadrature approximations of group integrals; with k = 1 these reduce to the
//! Laplace constant (2π)^(p/2).

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::math::SQRT_2PI;

/// Largest supported number of points per coordinate.
pub const MAX_ORDER: usize = 200;
/// Largest supported number of nodes in a product rule.
pub const MAX_NODES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    order: usize,
    /// Node coordinates, `dim` per node, last coordinate varying fastest.
    points: Vec<f64>,
    kernel_weights: Vec<f64>,
    log_adapted: Vec<f64>,
}

impl QuadratureRule {
    /// The k-point rule in one dimension.
    pub fn hermite(k: usize) -> Result<Self> {
        hermite_rule(k)
    }

    /// The k^p-point product rule in p dimensions.
    pub fn gauss_hermite(k: usize, p: usize) -> Result<Self> {
        product_rule(&hermite_rule(k)?, p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per coordinate.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.kernel_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel_weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn kernel_weight(&self, i: usize) -> f64 {
        self.kernel_weights[i]
    }

    pub fn kernel_weights(&self) -> &[f64] {
        &self.kernel_weights
    }

    /// log ω(z_i) = log v_i + ‖z_i‖²/2.
    pub fn log_adapted_weight(&self, i: usize) -> f64 {
        self.log_adapted[i]
    }

    /// Nodes paired with log ω (not the kernel weight).
    pub fn nodes(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.log_adapted.iter().copied())
    }

    fn from_parts(dim: usize, order: usize, points: Vec<f64>, kernel_weights: Vec<f64>) -> Self {
        let log_adapted = points
            .chunks_exact(dim)
            .zip(&kernel_weights)
            .map(|(z, &v)| v.ln() + 0.5 * z.iter().map(|c| c * c).sum::<f64>())
            .collect();
        QuadratureRule {
            dim,
            order,
            points,
            kernel_weights,
            log_adapted,
        }
    }
}

/// Orthonormal Hermite values h̃_{k-1}(x), h̃_k(x) and Σ_{n<k} h̃_n(x)².
fn orthonormal_hermite(k: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum_sq = 0.0;
    for n in 0..k {
        sum_sq += cur * cur;
        let next = (x * cur - (n as f64).sqrt() * prev) / ((n + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (prev, cur, sum_sq)
}

pub fn hermite_rule(k: usize) -> Result<QuadratureRule> {
    if k == 0 || k > MAX_ORDER {
        return Err(Error::range("k", k, "1 ≤ k ≤ 200"));
    }
    if k == 1 {
        return Ok(QuadratureRule::from_parts(
            1,
            1,
            alloc::vec![0.0],
            alloc::vec![SQRT_2PI],
        ));
    }

    // Jacobi matrix of He_n: zero diagonal, off-diagonal sqrt(n).
    let mut jacobi = DMatrix::<f64>::zeros(k, k);
    for n in 1..k {
        let b = (n as f64).sqrt();
        jacobi[(n, n - 1)] = b;
        jacobi[(n - 1, n)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nodes.sort_by(f64::total_cmp);

    let sqrt_k = (k as f64).sqrt();
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (h_km1, h_k, _) = orthonormal_hermite(k, *x);
            let step = h_k / (sqrt_k * h_km1);
            *x -= step;
            if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
    }

    for i in 0..k / 2 {
        let j = k - 1 - i;
        let half = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -half;
        nodes[j] = half;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| SQRT_2PI / orthonormal_hermite(k, x).2)
        .collect();
    for i in 0..k / 2 {
        let j = k - 1 - i;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }

    Ok(QuadratureRule::from_parts(1, k, nodes, weights))
}

pub fn product_rule(base: &QuadratureRule, p: usize) -> Result<QuadratureRule> {
    if p == 0 {
        return Err(Error::range("p", p, "p ≥ 1"));
    }
    if base.dim != 1 {
        return Err(Error::DimensionMismatch {
            context: "product_rule base rule",
            expected: 1,
            found: base.dim,
        });
    }
    if p == 1 {
        return Ok(base.clone());
    }
    let k = base.len();
    let nodes = (k as u128).checked_pow(p as u32).unwrap_or(u128::MAX);
    if nodes > MAX_NODES as u128 {
        return Err(Error::NodeBudget {
            nodes,
            budget: MAX_NODES,
        });
    }
    let nodes = nodes as usize;

    let mut points = Vec::with_capacity(nodes * p);
    let mut weights = Vec::with_capacity(nodes);
    let mut digits = alloc::vec![0usize; p];
    for _ in 0..nodes {
        let mut w = 1.0;
        for &d in &digits {
            points.push(base.points[d]);
            w *= base.kernel_weights[d];
        }
        weights.push(w);
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < k {
                break;
            }
            *slot = 0;
        }
    }
    Ok(QuadratureRule::from_parts(p, base.order, points, weights))
}

/// ω(z_i) = v_i · exp(‖z_i‖²/2).
pub fn adapted_weight(rule: &QuadratureRule, index: usize) -> Result<f64> {
    if index >= rule.len() {
        return Err(Error::NodeIndex {
            index,
            len: rule.len(),
        });
    }
    Ok(rule.log_adapted[index].exp())
}
