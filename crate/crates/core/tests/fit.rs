mod common;

use aqfit_core::simulate::{logistic_study_dataset, rng_for, study_spec};
use aqfit_core::{
    fit, wald_ci, FitOptions, GroupedDataset, Method, PositiveTransform, RaneffFamily,
    ResponseDispersion, ResponseFamily,
};
use common::*;
use proptest::prelude::*;

/// Balanced one-way layout: ML estimates of (μ, s², σ²) in closed form.
fn one_way_mle(data: &GroupedDataset) -> (f64, f64, f64) {
    let gs = data.groups();
    let big_m = gs.len() as f64;
    let m = gs[0].len() as f64;
    let means: Vec<f64> = gs
        .iter()
        .map(|g| values(g).iter().sum::<f64>() / m)
        .collect();
    let grand = means.iter().sum::<f64>() / big_m;
    let ssw: f64 = gs
        .iter()
        .zip(&means)
        .map(|(g, mu)| values(g).iter().map(|y| (y - mu).powi(2)).sum::<f64>())
        .sum();
    let ssb: f64 = m * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let s2 = ssw / (big_m * (m - 1.0));
    let sigma2 = (ssb / big_m - s2) / m;
    (grand, s2, sigma2)
}

#[test]
fn linear_mixed_model_mle() {
    let s = spec(ResponseFamily::GaussianIdentity, RaneffFamily::Gaussian, 1);
    let mut p = params_for(&s, vec![2.0], 1.5);
    p.response = ResponseDispersion::Gaussian { variance: 0.5 };
    let data = dataset(&s, &p, 40, 5, 2);
    let (mu, s2, sigma2) = one_way_mle(&data);
    assert!(sigma2 > 0.0);
    for k in [1, 3] {
        let f = fit(&data, &s, k, &FitOptions::default()).unwrap();
        assert!(f.converged);
        let got = &f.params_hat;
        assert!((got.beta[0] - mu).abs() < 1e-5, "{} vs {mu}", got.beta[0]);
        let ResponseDispersion::Gaussian { variance } = got.response else {
            panic!()
        };
        assert!((variance - s2).abs() < 1e-5, "{variance} vs {s2}");
        assert!((got.raneff_variance().unwrap() - sigma2).abs() < 1e-5);
        // observed information for μ: M / (σ² + s²/m)
        let se = f.std_errors.as_ref().unwrap()[0];
        let want = ((sigma2 + s2 / 5.0) / 40.0).sqrt();
        assert!((se / want - 1.0).abs() < 1e-3, "{se} vs {want}");
    }
}

#[test]
fn logistic_fit_covers_the_truth() {
    let beta = [-1.0, 1.0, 0.5, -0.5];
    let data = logistic_study_dataset(200, 6, beta, 1.0, &mut rng_for(7, 0)).unwrap();
    let f = fit(&data, &study_spec(), 5, &FitOptions::default()).unwrap();
    assert!(f.converged);
    let se = f.std_errors.clone().unwrap();
    for (j, b) in beta.iter().enumerate() {
        assert!(
            (f.estimates[j] - b).abs() < 4.0 * se[j],
            "beta{j}: {} ± {}",
            f.estimates[j],
            se[j]
        );
    }
    let ci = wald_ci(&f, 0.95).unwrap();
    let sig = &ci[4];
    assert_eq!(sig.name, "sigma2");
    assert!(sig.lower < 1.0 && 1.0 < sig.upper, "{sig:?}");
}

#[test]
fn names_do_not_depend_on_k() {
    let data =
        logistic_study_dataset(40, 4, [-1.0, 1.0, 0.5, -0.5], 1.0, &mut rng_for(3, 0)).unwrap();
    let names: Vec<Vec<String>> = [1, 2, 7]
        .iter()
        .map(|&k| {
            fit(&data, &study_spec(), k, &FitOptions::default())
                .unwrap()
                .parameter_names
        })
        .collect();
    assert_eq!(names[0], ["intercept", "x", "t", "x:t", "sigma2"]);
    assert!(names.iter().all(|n| *n == names[0]));
}

#[test]
fn gq_fits_too() {
    let data =
        logistic_study_dataset(60, 4, [-1.0, 1.0, 0.5, -0.5], 1.0, &mut rng_for(4, 0)).unwrap();
    let opts = FitOptions {
        method: Method::Gq,
        ..FitOptions::default()
    };
    let g = fit(&data, &study_spec(), 15, &opts).unwrap();
    let a = fit(&data, &study_spec(), 15, &FitOptions::default()).unwrap();
    assert_eq!(g.method, Method::Gq);
    // small groups and unit variance: both rules are accurate here
    assert!(
        (g.loglik - a.loglik).abs() < 1e-3,
        "{} vs {}",
        g.loglik,
        a.loglik
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn transform_does_not_change_the_estimate(seed in 0u64..1000, sigma in 0.7f64..2.0) {
        let data = logistic_study_dataset(80, 5, [-1.0, 1.0, 0.5, -0.5], sigma, &mut rng_for(seed, 0)).unwrap();
        let run = |t| fit(&data, &study_spec(), 3, &FitOptions { transform: t, compute_vcov: false, ..FitOptions::default() }).unwrap();
        let a = run(PositiveTransform::Log);
        let b = run(PositiveTransform::Softplus);
        prop_assume!(a.params_hat.raneff_variance().unwrap() > 0.05);
        for i in 0..a.estimates.len() {
            prop_assert!((a.natural(i) - b.natural(i)).abs() <= 1e-4, "{}: {} vs {}", a.parameter_names[i], a.natural(i), b.natural(i));
        }
    }

    #[test]
    fn fitting_is_deterministic(seed in 0u64..1000, parallel: bool) {
        let data = logistic_study_dataset(50, 3, [-1.0, 1.0, 0.5, -0.5], 1.0, &mut rng_for(seed, 0)).unwrap();
        let opts = FitOptions { parallel: Some(parallel), ..FitOptions::default() };
        let mut a = fit(&data, &study_spec(), 2, &opts).unwrap();
        let mut b = fit(&data, &study_spec(), 2, &opts).unwrap();
        a.wall_time = 0.0;
        b.wall_time = 0.0;
        prop_assert_eq!(a, b);
    }
}
