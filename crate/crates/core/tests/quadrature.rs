use aqfit_core::{adapted_weight, hermite_rule, product_rule, QuadratureRule};
use proptest::prelude::*;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

// E[Z^j] for Z ~ N(0,1): (j-1)!! for even j.
fn normal_moment(j: u32) -> f64 {
    if j % 2 == 1 {
        return 0.0;
    }
    (1..j).step_by(2).map(|i| i as f64).product()
}

fn moment_sum(rule: &QuadratureRule, j: u32) -> (f64, f64) {
    let mut s = 0.0;
    let mut scale = 0.0;
    for (i, v) in rule.kernel_weights().iter().enumerate() {
        let z = rule.node(i);
        let t = v * z[0].powi(j as i32);
        s += t;
        scale += t.abs();
    }
    (s, scale)
}

#[test]
fn exact_to_degree_2k_minus_1() {
    for k in 1..=20 {
        let rule = hermite_rule(k).unwrap();
        for j in 0..2 * k as u32 {
            let (got, scale) = moment_sum(&rule, j);
            let want = SQRT_2PI * normal_moment(j);
            // odd moments vanish, so measure those against the size of the terms
            let err = if want == 0.0 {
                got.abs() / scale.max(1.0)
            } else {
                (got / want - 1.0).abs()
            };
            assert!(err < 1e-10, "k={k} j={j}: {got} vs {want}");
        }
    }
}

#[test]
fn not_exact_at_degree_2k() {
    for k in 1..=8 {
        let rule = hermite_rule(k).unwrap();
        let j = 2 * k as u32;
        let (got, _) = moment_sum(&rule, j);
        assert!(
            (got / (SQRT_2PI * normal_moment(j)) - 1.0).abs() > 1e-6,
            "k={k}"
        );
    }
}

#[test]
fn five_point_cube_mass() {
    let r = product_rule(&hermite_rule(5).unwrap(), 3).unwrap();
    assert_eq!(r.len(), 125);
    let total: f64 = r.kernel_weights().iter().sum();
    let want = (2.0 * std::f64::consts::PI).powf(1.5);
    assert!((total / want - 1.0).abs() < 1e-12);
}

#[test]
fn laplace_constant_in_two_dims() {
    let r = QuadratureRule::gauss_hermite(1, 2).unwrap();
    let w = adapted_weight(&r, 0).unwrap();
    assert!((w - 2.0 * std::f64::consts::PI).abs() < 1e-14);
    assert!(adapted_weight(&r, 1).is_err());
}

proptest! {
    #[test]
    fn total_mass_is_gaussian_normaliser(k in 1usize..=12, p in 1usize..=3) {
        let r = QuadratureRule::gauss_hermite(k, p).unwrap();
        prop_assert_eq!(r.len(), k.pow(p as u32));
        let total: f64 = r.kernel_weights().iter().sum();
        let want = (2.0 * std::f64::consts::PI).powf(p as f64 / 2.0);
        prop_assert!((total / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_nodes_share_weights(k in 1usize..=40) {
        let r = hermite_rule(k).unwrap();
        let nodes: Vec<(f64, f64)> = (0..k).map(|i| (r.node(i)[0], r.kernel_weight(i))).collect();
        for &(z, v) in &nodes {
            prop_assert!(v > 0.0);
            let (_, vm) = nodes
                .iter()
                .copied()
                .min_by(|a, b| (a.0 + z).abs().total_cmp(&(b.0 + z).abs()))
                .unwrap();
            let mirror = nodes.iter().map(|n| (n.0 + z).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(mirror <= 1e-13 * (1.0 + z.abs()));
            prop_assert!((vm / v - 1.0).abs() < 1e-11);
        }
        prop_assert_eq!(nodes.iter().any(|n| n.0 == 0.0), k % 2 == 1);
    }

    // Mixed monomials z1^a z2^b factor into coordinate moments.
    #[test]
    fn product_rule_is_exact_on_monomials(k in 1usize..=8, a in 0u32..16, b in 0u32..16) {
        prop_assume!(a < 2 * k as u32 && b < 2 * k as u32);
        let r = QuadratureRule::gauss_hermite(k, 2).unwrap();
        let mut s = 0.0;
        let mut scale = 0.0;
        for (i, v) in r.kernel_weights().iter().enumerate() {
            let z = r.node(i);
            let t = v * z[0].powi(a as i32) * z[1].powi(b as i32);
            s += t;
            scale += t.abs();
        }
        let want = 2.0 * std::f64::consts::PI * normal_moment(a) * normal_moment(b);
        if want == 0.0 {
            prop_assert!(s.abs() <= 1e-12 * scale.max(1.0));
        } else {
            prop_assert!((s / want - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn adapted_weight_folds_in_the_kernel(k in 1usize..=30, i in 0usize..30) {
        prop_assume!(i < k);
        let r = hermite_rule(k).unwrap();
        let z = r.node(i)[0];
        let w = adapted_weight(&r, i).unwrap();
        let want = r.kernel_weight(i) * (0.5 * z * z).exp();
        prop_assert!((w / want - 1.0).abs() < 1e-12);
        prop_assert!((r.log_adapted_weight(i) - want.ln()).abs() < 1e-12 * (1.0 + want.ln().abs()));
    }
}
