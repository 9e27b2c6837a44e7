//! Brute-force one-dimensional integration, independent of the Hermite rules.

use crate::data::Group;
use crate::error::{Error, Result};
use crate::families::{ModelSpec, Parameters, Prepared};
use crate::inner::{AdaptOptions, GroupKernel};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

pub const DEFAULT_TOL: f64 = 1e-12;

/// Panels the interval is cut into before adaptive refinement starts.
const PANELS: usize = 64;
const MAX_DEPTH: u32 = 40;
/// Log-integrand (relative to its peak) below which the tails are ignored.
const TAIL_CUTOFF: f64 = -80.0;

/// log ∫ exp(log_f(u)) du for a unimodal log-integrand peaked near `center`
/// with spread `scale`. The integral of exp(log_f − log_f(center)) is computed
/// by adaptive Simpson to absolute tolerance `tol` over center ± 15·scale,
/// widened until both ends fall below e^(−80).
pub fn oracle_log_integral<F>(mut log_f: F, center: f64, scale: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::range("tol", tol, "> 0"));
    }
    if !(scale > 0.0 && scale.is_finite() && center.is_finite()) {
        return Err(Error::InvalidParameters(alloc::format!(
            "oracle needs a finite center and positive scale, got {center} and {scale}"
        )));
    }
    let peak = log_f(center);
    if !peak.is_finite() {
        return Err(Error::NonFinite { node: 0 });
    }
    let mut g = |u: f64| {
        let v = log_f(u) - peak;
        if v.is_nan() {
            0.0
        } else {
            v.exp()
        }
    };

    let mut lo = center - 15.0 * scale;
    let mut hi = center + 15.0 * scale;
    let mut step = 15.0 * scale;
    for _ in 0..60 {
        if !(g(lo) > TAIL_CUTOFF.exp()) {
            break;
        }
        step *= 2.0;
        lo -= step;
    }
    let mut step = 15.0 * scale;
    for _ in 0..60 {
        if !(g(hi) > TAIL_CUTOFF.exp()) {
            break;
        }
        step *= 2.0;
        hi += step;
    }

    let width = (hi - lo) / PANELS as f64;
    let mut total = 0.0;
    let mut a = lo;
    let mut fa = g(a);
    for i in 0..PANELS {
        let b = if i + 1 == PANELS {
            hi
        } else {
            lo + (i + 1) as f64 * width
        };
        let c = 0.5 * (a + b);
        let (fb, fc) = (g(b), g(c));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
        total += simpson(
            &mut g,
            a,
            b,
            fa,
            fc,
            fb,
            whole,
            tol / PANELS as f64,
            MAX_DEPTH,
        );
        a = b;
        fa = fb;
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::NonFinite { node: 0 });
    }
    Ok(peak + total.ln())
}

#[allow(clippy::too_many_arguments)]
fn simpson<G: FnMut(f64) -> f64>(
    g: &mut G,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// log π_i(y_i; θ) by brute-force integration over the scalar random effect.
pub fn oracle_group_loglik(
    group: &Group,
    spec: &ModelSpec,
    params: &Parameters,
    tol: f64,
) -> Result<f64> {
    if spec.p != 1 {
        return Err(Error::InvalidSpec(alloc::format!(
            "the integration oracle is one-dimensional, got p = {}",
            spec.p
        )));
    }
    group.check_dims(spec.d, spec.p)?;
    group
        .responses
        .iter()
        .try_for_each(|y| spec.validate_response(y))?;
    let prep = Prepared::new(spec, params)?;
    let kernel = GroupKernel::new(group, spec, &params.beta, &prep);
    let a = kernel.adapt(&AdaptOptions::default())?;
    let sd = a.chol_inv[(0, 0)];
    oracle_log_integral(|u| kernel.value(&[u]), a.mode[0], sd, tol)
}
