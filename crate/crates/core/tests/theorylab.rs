use aqfit_core::theorylab::{
    gq_divergence_demo, rate_check, simulate_study, SimStudyConfig, SimStudyReport,
};
use aqfit_core::{recommend_k, ModelSpec, Parameters, RaneffFamily, ResponseFamily};

fn bernoulli() -> (ModelSpec, Parameters) {
    let s = ModelSpec::new(ResponseFamily::BernoulliLogit, RaneffFamily::Gaussian, 2, 1).unwrap();
    (s, Parameters::random_intercept(vec![-0.5, 0.5], 1.0))
}

fn without_times(mut r: SimStudyReport) -> SimStudyReport {
    for f in &mut r.fits {
        f.wall_time = 0.0;
    }
    for s in &mut r.per_k {
        s.time_mean = 0.0;
        s.time_sd = 0.0;
    }
    r
}

#[test]
fn three_more_points_buy_one_order() {
    let (s, p) = bernoulli();
    let grid = [10, 30, 100, 300, 1000];
    let a = rate_check(&s, &p, 1, &grid, 60, 5).unwrap();
    let b = rate_check(&s, &p, 4, &grid, 60, 5).unwrap();
    for r in [&a, &b] {
        assert!(r.errors.iter().all(|e| *e > 0.0));
        assert!(r.slope.is_finite());
    }
    let step = b.slope - a.slope;
    assert!((step + 1.0).abs() <= 0.6, "{} -> {}", a.slope, b.slope);
}

#[test]
fn reports_are_reproducible() {
    let (s, p) = bernoulli();
    let grid = [5, 20, 80, 500];
    assert_eq!(
        rate_check(&s, &p, 2, &grid, 12, 9).unwrap(),
        rate_check(&s, &p, 2, &grid, 12, 9).unwrap()
    );
    assert_ne!(
        rate_check(&s, &p, 2, &grid, 12, 9).unwrap().errors,
        rate_check(&s, &p, 2, &grid, 12, 10).unwrap().errors
    );
    let g = |seed| gq_divergence_demo(&s, &p, 3, &[1, 50, 400], 20, seed).unwrap();
    assert_eq!(g(1), g(1));

    let config = SimStudyConfig {
        groups: 40,
        replicates: 6,
        k_grid: vec![1, 3],
        ..SimStudyConfig::default()
    };
    let a = without_times(simulate_study(&config).unwrap());
    let b = without_times(simulate_study(&config).unwrap());
    assert_eq!(a, b);
}

#[test]
fn gq_falls_behind_as_groups_grow() {
    let (s, p) = bernoulli();
    let r = gq_divergence_demo(&s, &p, 5, &[1, 30, 1000], 40, 3).unwrap();
    let first = &r.rows[0];
    let last = &r.rows[2];
    assert!(first.gq_fraction_below_half >= 0.9);
    assert!(last.gq_fraction_below_half < first.gq_fraction_below_half);
    assert!(last.aq_fraction_below_half == 1.0);
    assert!(last.aq_median_rel_error < 1e-4);
}

#[test]
fn study_summaries_are_well_formed() {
    let k = recommend_k(100, 3).unwrap().k.finite().unwrap();
    let config = SimStudyConfig {
        sigma_true: 3.0,
        replicates: 20,
        k_grid: vec![1, k],
        ..SimStudyConfig::default()
    };
    let r = simulate_study(&config).unwrap();
    for s in &r.per_k {
        assert!((0.0..=1.0).contains(&s.coverage_beta0));
        for q in [s.beta0_abs_error, s.sigma_abs_error] {
            assert!(q.q025 <= q.q50 && q.q50 <= q.q975);
        }
        assert_eq!(s.fits + s.failures, 20);
    }
    // large σ: the Laplace fit is the worse one
    assert!(
        r.per_k[1].beta0_abs_error.q50 <= r.per_k[0].beta0_abs_error.q50,
        "{:?}",
        r.per_k
    );
}
