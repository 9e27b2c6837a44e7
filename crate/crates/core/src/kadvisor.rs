//! Recommended number of quadrature points per random-effect coordinate,
//! k(M, m) = ⌈1.5 log_m M − 2⌉, and the error-rate exponent r(k) = ⌊(k+2)/3⌋.

use crate::error::{Error, Result};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointCount {
    Finite(usize),
    /// Groups of size one: no finite k makes the AQ error vanish with M.
    Unbounded,
}

impl PointCount {
    pub fn finite(self) -> Option<usize> {
        match self {
            PointCount::Finite(k) => Some(k),
            PointCount::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KRecommendation {
    /// Number of groups M.
    pub groups: u64,
    /// Smallest group size m.
    pub min_group_size: u64,
    pub k: PointCount,
    pub rate_r: Option<u32>,
    /// m^(−r(k)).
    pub eps_star: Option<f64>,
}

impl KRecommendation {
    /// True when the recommendation asks for more than the Laplace approximation.
    pub fn avoid_laplace(&self) -> bool {
        !matches!(self.k, PointCount::Finite(1))
    }

    pub fn guidance(&self) -> &'static str {
        match self.k {
            PointCount::Unbounded => {
                "groups of size 1: AQ error does not shrink with M; use as many points as is affordable"
            }
            PointCount::Finite(1) => "the Laplace approximation (k = 1) is sufficient",
            PointCount::Finite(_) => "use more than one point; the Laplace approximation is not sufficient",
        }
    }
}

/// r(k) = ⌊(k+2)/3⌋.
pub fn rate_exponent(k: usize) -> u32 {
    ((k + 2) / 3) as u32
}

pub fn recommend_k(groups: u64, min_group_size: u64) -> Result<KRecommendation> {
    if groups == 0 {
        return Err(Error::range("groups", groups, "M >= 1"));
    }
    if min_group_size == 0 {
        return Err(Error::range("min_group_size", min_group_size, "m >= 1"));
    }
    if min_group_size == 1 {
        return Ok(KRecommendation {
            groups,
            min_group_size,
            k: PointCount::Unbounded,
            rate_r: None,
            eps_star: None,
        });
    }
    let raw = 1.5 * (groups as f64).ln() / (min_group_size as f64).ln() - 2.0;
    let nearest = raw.round();
    let c = if (raw - nearest).abs() <= 1e-9 {
        nearest
    } else {
        raw.ceil()
    };
    let k = if c < 1.0 { 1 } else { c as usize };
    let r = rate_exponent(k);
    Ok(KRecommendation {
        groups,
        min_group_size,
        k: PointCount::Finite(k),
        rate_r: Some(r),
        eps_star: Some((min_group_size as f64).powi(-(r as i32))),
    })
}

/// Largest M with M^(−1/2) ≥ m^(−r(k)), i.e. m^(2 r(k)).
pub fn max_groups_for_k(min_group_size: u64, k: usize) -> Result<u64> {
    if min_group_size < 2 {
        return Err(Error::range("min_group_size", min_group_size, "m >= 2"));
    }
    if k == 0 {
        return Err(Error::range("k", k, "k >= 1"));
    }
    min_group_size
        .checked_pow(2 * rate_exponent(k))
        .ok_or_else(|| Error::Overflow(alloc::format!("{min_group_size}^(2 r({k})) exceeds u64")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k_of(m_groups: u64, m: u64) -> usize {
        recommend_k(m_groups, m).unwrap().k.finite().unwrap()
    }

    #[test]
    fn published_values() {
        let table = [
            (294, 2, 11),
            (100, 7, 2),
            (100, 14, 1),
            (200, 3, 6),
            (200, 5, 3),
            (1000, 3, 8),
            (10000, 10, 4),
            (38, 2, 6),
            (100, 6, 2),
        ];
        for (mm, m, k) in table {
            assert_eq!(k_of(mm, m), k, "k({mm},{m})");
        }
    }

    #[test]
    fn singletons_are_unbounded() {
        let r = recommend_k(100, 1).unwrap();
        assert_eq!(r.k, PointCount::Unbounded);
        assert!(r.avoid_laplace());
        assert_eq!(r.rate_r, None);
    }

    #[test]
    fn clamps_to_one() {
        for m in 2..50 {
            assert_eq!(k_of(1, m), 1);
        }
    }

    #[test]
    fn exact_integer_guard() {
        // 1.5 · log_10(10000) − 2 = 4 exactly in real arithmetic.
        assert_eq!(k_of(10000, 10), 4);
        // 1.5 · log_2(16) − 2 = 4.
        assert_eq!(k_of(16, 2), 4);
    }

    #[test]
    fn zero_inputs_rejected() {
        assert!(recommend_k(0, 2).is_err());
        assert!(recommend_k(5, 0).is_err());
    }

    #[test]
    fn eps_star_and_rate() {
        let r = recommend_k(294, 2).unwrap();
        assert_eq!(r.rate_r, Some(4));
        assert_eq!(r.eps_star, Some(1.0 / 16.0));
    }

    #[test]
    fn laplace_narrative() {
        assert!(recommend_k(100, 7).unwrap().avoid_laplace());
        assert!(!recommend_k(100, 14).unwrap().avoid_laplace());
    }

    #[test]
    fn max_groups() {
        assert_eq!(max_groups_for_k(5, 5).unwrap(), 625);
        assert_eq!(max_groups_for_k(2, 1).unwrap(), 4);
        assert_eq!(max_groups_for_k(10, 4).unwrap(), 10000);
        assert!(matches!(max_groups_for_k(10, 60), Err(Error::Overflow(_))));
        assert!(max_groups_for_k(1, 3).is_err());
        assert!(max_groups_for_k(3, 0).is_err());
    }
}
