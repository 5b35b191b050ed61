use approx::assert_relative_eq;
use proptest::prelude::*;
use xmeter_core::attribution::{attribute, AttributionVector, Method};
use xmeter_core::bench::{token_benchmark, ParkFunction, PARK_POINT};
use xmeter_core::metrics::{
    attribution_report, complexity, effective_complexity, expected_restriction_loss_estimate,
    monotonicity, non_sensitivity, perturbation_test, ExpectationConfig,
};
use xmeter_core::model::ConstantModel;
use xmeter_core::{gradient, FeatureDistribution, LossFunction, Model, Prediction};

fn park_cfg(seed: u64) -> ExpectationConfig {
    ExpectationConfig::new(
        FeatureDistribution::uniform(6, 0.0, 1.0).unwrap(),
        LossFunction::SquaredError,
        seed,
    )
}

fn park(x: &[f64]) -> f64 {
    (2.0 / 3.0) * (x[0] + x[1]).exp() - x[3] * x[2].sin() + x[2]
}

#[test]
fn park_matches_formula_and_central_differences() {
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..1000 {
        let x: Vec<f64> = (0..6).map(|_| next()).collect();
        let Prediction::Scalar(y) = ParkFunction.predict(&x).unwrap() else {
            panic!()
        };
        assert_relative_eq!(y, park(&x), max_relative = 1e-14);
        let g = gradient(&ParkFunction, &x, 0).unwrap();
        for i in 0..6 {
            let h = 1e-6;
            let (mut up, mut down) = (x.clone(), x.clone());
            up[i] += h;
            down[i] -= h;
            let fd = (park(&up) - park(&down)) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-7, "d/dx{i}: {} vs {fd}", g[i]);
        }
    }
}

/// Composite Simpson rule on [0, 1].
fn simpson(f: impl Fn(f64) -> f64, intervals: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    let inner: f64 = (1..intervals)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h))
        .sum();
    (f(0.0) + inner + f(1.0)) * h / 3.0
}

#[test]
fn first_feature_loss_matches_quadrature() {
    let y_star = park(&PARK_POINT);
    let exact = simpson(
        |u| {
            let mut x = PARK_POINT;
            x[0] = u;
            (park(&x) - y_star).powi(2)
        },
        2000,
    );
    for seed in 0..5 {
        let mut cfg = park_cfg(seed);
        cfg.n_mc_samples = 10_000;
        let est = expected_restriction_loss_estimate(&ParkFunction, &PARK_POINT, 0, &cfg).unwrap();
        assert!(
            (est.mean - exact).abs() < 3.0 * est.std_error,
            "seed {seed}: {} +- {} vs {exact}",
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn gradient_method_monotonicity_matches_published_values() {
    let cfg = park_cfg(0);
    let published = [
        (Method::Saliency, 0.99),
        (Method::InpXGrad, 0.82),
        (Method::IntGrad, 0.59),
    ];
    for (m, want) in published {
        let a = attribute(&ParkFunction, &PARK_POINT, m, 0).unwrap();
        let got = monotonicity(&a, &ParkFunction, &cfg).unwrap();
        assert!(
            (got - want).abs() <= 0.005,
            "{}: {got} vs {want}",
            m.label()
        );
    }
}

#[test]
fn park_report_cells() {
    let cfg = park_cfg(0);
    let expect = [
        (Method::Saliency, 3),
        (Method::InpXGrad, 3),
        (Method::IntGrad, 4),
    ];
    for (m, ec) in expect {
        let a = attribute(&ParkFunction, &PARK_POINT, m, 0).unwrap();
        let r = attribution_report(&a, &ParkFunction, 0.01, &cfg).unwrap();
        assert_eq!(
            (r.complexity, r.non_sensitivity, r.effective_complexity),
            (4, 0, ec),
            "{}",
            m.label()
        );
        assert!(!r.saturated);
        assert_eq!(r.e_vector[4], 0.0);
        assert_eq!(r.e_vector[5], 0.0);
    }
    let r = attribution_report(
        &attribute(&ParkFunction, &PARK_POINT, Method::Random, 4).unwrap(),
        &ParkFunction,
        0.01,
        &cfg,
    )
    .unwrap();
    assert_eq!((r.complexity, r.non_sensitivity), (6, 2));
    assert_eq!(r.attribution_seed, Some(4));
}

#[test]
fn metrics_are_invariant_to_positive_scaling() {
    let cfg = park_cfg(1);
    for m in Method::ALL {
        let a = attribute(&ParkFunction, &PARK_POINT, m, 2).unwrap();
        let base = attribution_report(&a, &ParkFunction, 0.01, &cfg).unwrap();
        for factor in [1e-6, 0.5, 3.0, 1e5] {
            let s = attribution_report(&a.scaled(factor), &ParkFunction, 0.01, &cfg).unwrap();
            assert_eq!(s.complexity, base.complexity);
            assert_eq!(s.monotonicity, base.monotonicity);
            assert_eq!(s.non_sensitivity, base.non_sensitivity);
            assert_eq!(s.effective_complexity, base.effective_complexity);
        }
    }
}

#[test]
fn effective_complexity_does_not_grow_with_epsilon() {
    let mut cfg = park_cfg(3);
    cfg.n_mc_samples = 1000;
    for m in Method::ALL {
        let a = attribute(&ParkFunction, &PARK_POINT, m, 5).unwrap();
        let ks: Vec<usize> = [1e-4, 1e-3, 0.01, 0.05, 0.2, 1.0, 10.0]
            .iter()
            .map(|&eps| {
                effective_complexity(&a, &ParkFunction, eps, &cfg)
                    .unwrap()
                    .k
            })
            .collect();
        assert!(ks.windows(2).all(|w| w[1] <= w[0]), "{}: {ks:?}", m.label());
    }
}

#[test]
fn constant_model_has_effective_complexity_one() {
    let model = ConstantModel::new(4, Prediction::Label(2));
    let cfg = ExpectationConfig::new(
        FeatureDistribution::uniform(4, -1.0, 1.0).unwrap(),
        LossFunction::ZeroOne,
        0,
    );
    let a = AttributionVector::new(vec![0.1; 4], vec![0.4, -1.0, 0.0, 2.0], "any").unwrap();
    for eps in [1e-9, 0.5] {
        let ec = effective_complexity(&a, &model, eps, &cfg).unwrap();
        assert_eq!((ec.k, ec.saturated), (1, false));
    }
}

#[test]
fn zero_attributions_on_constant_model_are_consistent() {
    let model = ConstantModel::new(3, Prediction::Scalar(1.5));
    let cfg = ExpectationConfig::new(
        FeatureDistribution::uniform(3, 0.0, 1.0).unwrap(),
        LossFunction::SquaredError,
        0,
    );
    let a = AttributionVector::new(vec![0.5; 3], vec![0.0; 3], "zero").unwrap();
    assert_eq!(complexity(&a), 0);
    assert_eq!(non_sensitivity(&a, &model, &cfg).unwrap(), 0);
    assert!(monotonicity(&a, &model, &cfg).is_err());
}

#[test]
fn keeping_every_feature_always_passes_the_perturbation_test() {
    let (data, model) = token_benchmark(0).unwrap();
    for row in [0, 123, 999] {
        let x = data.row(row).to_vec();
        for m in [Method::Saliency, Method::Random] {
            let a = attribute(&model, &x, m, row as u64).unwrap();
            for seed in 0..3 {
                assert_eq!(
                    perturbation_test(&a, &model, x.len(), &data, 50, seed).unwrap(),
                    1.0
                );
            }
        }
    }
}

#[test]
fn perturbation_test_rejects_oversized_k() {
    let (data, model) = token_benchmark(0).unwrap();
    let a = attribute(&model, data.row(0), Method::Saliency, 0).unwrap();
    assert!(perturbation_test(&a, &model, data.n_features() + 1, &data, 10, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn doubling_samples_stays_within_three_standard_errors(
        seed in 0u64..1000,
        feature in 0usize..4,
        point in proptest::collection::vec(0.0f64..1.0, 6),
    ) {
        let mut cfg = park_cfg(seed);
        cfg.n_mc_samples = 2000;
        let small = expected_restriction_loss_estimate(&ParkFunction, &point, feature, &cfg).unwrap();
        cfg.n_mc_samples = 4000;
        let large = expected_restriction_loss_estimate(&ParkFunction, &point, feature, &cfg).unwrap();
        prop_assert!((large.mean - small.mean).abs() <= 3.0 * small.std_error + 1e-15);
    }
}
