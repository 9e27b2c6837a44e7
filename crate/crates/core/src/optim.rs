//! Derivative-free maximization: BFGS on central finite-difference gradients,
//! with a Nelder–Mead fallback when the line search stalls.
//!
//! Objectives return `None` where they cannot be evaluated; such points are
//! treated as −∞ and rejected by both line search and simplex.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimOptions {
    /// Stop when ‖∇f‖∞ falls below this.
    pub grad_tol: f64,
    /// Budget of objective evaluations, gradient evaluations included.
    pub max_evals: usize,
    /// Largest ‖step‖∞ tried by the line search.
    pub max_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            grad_tol: 1e-6,
            max_evals: 20_000,
            max_step: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub converged: bool,
    pub evals: usize,
    pub iterations: usize,
    pub simplex_restarts: usize,
}

impl OptimResult {
    pub fn grad_norm(&self) -> f64 {
        inf_norm(&self.grad)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Counts evaluations and maps failures to −∞.
struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> Option<f64>> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        match (self.f)(x) {
            Some(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Central-difference gradient with h_j = ∛ε · (1 + |x_j|). `None` if any
/// probe fails.
pub fn fd_gradient<F>(mut f: F, x: &[f64]) -> Option<Vec<f64>>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let mut xt = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for j in 0..x.len() {
        let h = f64::EPSILON.cbrt() * (1.0 + x[j].abs());
        xt[j] = x[j] + h;
        let hi = h_eff(x[j], xt[j]);
        let fp = f(&xt)?;
        xt[j] = x[j] - h;
        let lo = h_eff(x[j], xt[j]);
        let fm = f(&xt)?;
        xt[j] = x[j];
        g[j] = (fp - fm) / (hi + lo);
    }
    g.iter().all(|v| v.is_finite()).then_some(g)
}

// Actual representable step, so the difference quotient uses the true spacing.
fn h_eff(x: f64, xt: f64) -> f64 {
    (xt - x).abs()
}

/// Central-difference Hessian with h_j = ε^(1/4) · (1 + |x_j|).
pub fn fd_hessian<F>(mut f: F, x: &[f64]) -> Option<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let n = x.len();
    let h: Vec<f64> = x
        .iter()
        .map(|xi| f64::EPSILON.powf(0.25) * (1.0 + xi.abs()))
        .collect();
    let f0 = f(x)?;
    let mut xt = x.to_vec();
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        xt[i] = x[i] + h[i];
        let fp = f(&xt)?;
        xt[i] = x[i] - h[i];
        let fm = f(&xt)?;
        xt[i] = x[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                xt[i] = x[i] + si * h[i];
                xt[j] = x[j] + sj * h[j];
                let v = f(&xt);
                xt[i] = x[i];
                xt[j] = x[j];
                v
            };
            let fpp = corner(1.0, 1.0)?;
            let fpm = corner(1.0, -1.0)?;
            let fmp = corner(-1.0, 1.0)?;
            let fmm = corner(-1.0, -1.0)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess.iter().all(|v| v.is_finite()).then_some(hess)
}

/// Maximizes `f` from `x0`.
pub fn maximize<F>(f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let mut obj = Counted { f, evals: 0 };
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = obj.call(&x);
    let mut iterations = 0;
    let mut simplex_restarts = 0;

    if n == 0 {
        return OptimResult {
            x,
            f: fx,
            grad: Vec::new(),
            converged: fx.is_finite(),
            evals: obj.evals,
            iterations,
            simplex_restarts,
        };
    }

    let mut grad = gradient(&mut obj, &x, fx);
    let mut b_inv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;

    loop {
        if !fx.is_finite() || grad.is_none() {
            // Nothing to descend along; let the simplex search for a usable region.
            if simplex_restarts >= 3 || obj.evals >= opts.max_evals {
                break;
            }
            simplex_restarts += 1;
            let (xs, fs) = nelder_mead(&mut obj, &x, fx, opts.max_evals);
            x = xs;
            fx = fs;
            grad = gradient(&mut obj, &x, fx);
            b_inv = DMatrix::identity(n, n);
            fresh = true;
            continue;
        }
        let g = grad.clone().unwrap();
        if inf_norm(&g) <= opts.grad_tol || obj.evals >= opts.max_evals {
            break;
        }
        iterations += 1;

        // Ascent direction d = B⁻¹ g.
        let mut d: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| b_inv[(i, j)] * g[j]).sum())
            .collect();
        let mut slope = dot(&g, &d);
        if !(slope > 0.0) {
            b_inv = DMatrix::identity(n, n);
            d = g.clone();
            slope = dot(&g, &d);
            fresh = true;
        }
        let big = inf_norm(&d);
        if big > opts.max_step {
            let s = opts.max_step / big;
            d.iter_mut().for_each(|v| *v *= s);
            slope *= s;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            if xn == x {
                break;
            }
            let fnew = obj.call(&xn);
            if fnew >= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }

        match accepted {
            Some((xn, fnew)) => {
                let gn = gradient(&mut obj, &xn, fnew);
                if let Some(gn) = &gn {
                    // Minimization form: s = Δx, y = −Δg.
                    let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = g.iter().zip(gn).map(|(a, b)| a - b).collect();
                    let sy = dot(&s, &y);
                    if sy > 1e-10 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                        if fresh {
                            let scale = sy / dot(&y, &y);
                            b_inv = DMatrix::identity(n, n) * scale;
                            fresh = false;
                        }
                        bfgs_update(&mut b_inv, &s, &y, sy);
                    }
                }
                x = xn;
                fx = fnew;
                grad = gn;
            }
            None if !fresh => {
                b_inv = DMatrix::identity(n, n);
                fresh = true;
            }
            None => {
                if simplex_restarts >= 3 {
                    break;
                }
                simplex_restarts += 1;
                let (xs, fs) = nelder_mead(&mut obj, &x, fx, opts.max_evals);
                if fs > fx {
                    x = xs;
                    fx = fs;
                    grad = gradient(&mut obj, &x, fx);
                } else if simplex_restarts >= 2 {
                    break;
                }
                b_inv = DMatrix::identity(n, n);
                fresh = true;
            }
        }
    }

    let grad = grad.unwrap_or_else(|| vec![f64::NAN; n]);
    let converged = fx.is_finite() && inf_norm(&grad) <= opts.grad_tol;
    OptimResult {
        x,
        f: fx,
        grad,
        converged,
        evals: obj.evals,
        iterations,
        simplex_restarts,
    }
}

fn gradient<F: FnMut(&[f64]) -> Option<f64>>(
    obj: &mut Counted<F>,
    x: &[f64],
    fx: f64,
) -> Option<Vec<f64>> {
    if !fx.is_finite() {
        return None;
    }
    fd_gradient(
        |z| {
            let v = obj.call(z);
            v.is_finite().then_some(v)
        },
        x,
    )
}

/// H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ.
fn bfgs_update(h: &mut DMatrix<f64>, s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| h[(i, j)] * y[j]).sum())
        .collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] +=
                -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Nelder–Mead maximization around `x0`; returns the best vertex.
fn nelder_mead<F: FnMut(&[f64]) -> Option<f64>>(
    obj: &mut Counted<F>,
    x0: &[f64],
    f0: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let budget = obj.evals
        + (200 * n * n)
            .max(400)
            .min(max_evals.saturating_sub(obj.evals));
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for j in 0..n {
        let mut v = x0.to_vec();
        v[j] += 0.25 * (1.0 + x0[j].abs());
        let fv = obj.call(&v);
        simplex.push((v, fv));
    }
    let by_desc = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
    };
    while obj.evals < budget {
        by_desc(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best.is_finite()
            && worst.is_finite()
            && (best - worst).abs() <= 1e-12 * (1.0 + best.abs())
        {
            break;
        }
        let mut c = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi / n as f64;
            }
        }
        let along = |t: f64, w: &[f64]| -> Vec<f64> {
            c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
        };
        let w = simplex[n].0.clone();
        let xr = along(-1.0, &w);
        let fr = obj.call(&xr);
        if fr > simplex[0].1 {
            let xe = along(-2.0, &w);
            let fe = obj.call(&xe);
            simplex[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr > worst {
                let xc = along(-0.5, &w);
                let fc = obj.call(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5, &w);
                let fc = obj.call(&xc);
                (xc, fc)
            };
            if fc > worst.max(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (v, fv) in simplex.iter_mut().skip(1) {
                    for (vi, bi) in v.iter_mut().zip(&x_best) {
                        *vi = bi + 0.5 * (*vi - bi);
                    }
                    *fv = obj.call(v);
                }
            }
        }
    }
    by_desc(&mut simplex);
    simplex.swap_remove(0)
}
