mod common;

use fallrisk::solver::{fit, objective, ConstraintSet, FitConfig, SampleWeights};
use ndarray::{concatenate, Array1, Axis};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_concave_on_feasible_segments(seed in any::<u64>(), lambda in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let mut rng = common::rng(seed);
        let (x, y) = common::logistic_instance(&mut rng, 80, &[4.0, 6.0, 3.0], 7.0);
        let w = SampleWeights::balanced(&y).unwrap();
        let config = FitConfig::default().with_lambda(lambda);
        let a = Array1::from_shape_fn(3, |_| rng.random_range(0.0..15.0));
        let b = Array1::from_shape_fn(3, |_| rng.random_range(0.0..15.0));
        let mid = &a * t + &b * (1.0 - t);
        let f = |beta: &Array1<f64>| objective(x.view(), &y, w.view(), beta.view(), &config).unwrap();
        prop_assert!(f(&mid) >= t * f(&a) + (1.0 - t) * f(&b) - 1e-12);
    }

    #[test]
    fn ascent_is_monotone_and_feasible(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let mut rng = common::rng(seed);
        let (x, y) = common::logistic_instance(&mut rng, 150, &[9.0, 2.0, 5.0, 6.0], 8.0);
        let constraints = ConstraintSet::from_chains(&[vec![0, 1, 2]]);
        let config = FitConfig {
            record_trace: true,
            init: Some(vec![5.0, 1.0, 0.0, 3.0]),
            ..FitConfig::default().with_lambda(lambda)
        };
        let fitted = fit(x.view(), &y, &constraints, &config).unwrap();
        prop_assert!(fitted.metadata.converged);
        let trace = fitted.trace.unwrap();
        for pair in trace.windows(2) {
            prop_assert!(pair[1].0 >= pair[0].0, "objective fell from {} to {}", pair[0].0, pair[1].0);
        }
        for (_, beta) in &trace {
            prop_assert!(beta.iter().all(|&b| b >= -config.tol));
            prop_assert!(constraints.max_violation(beta.view()) <= config.tol);
        }
    }

    #[test]
    fn replicating_every_row_leaves_the_argmax(seed in any::<u64>(), copies in 2usize..4) {
        let mut rng = common::rng(seed);
        let (x, y) = common::logistic_instance(&mut rng, 120, &[3.0, 8.0, 4.0], 7.0);
        let views: Vec<_> = (0..copies).map(|_| x.view()).collect();
        let xr = concatenate(Axis(0), &views).unwrap();
        let yr: Vec<bool> = (0..copies).flat_map(|_| y.iter().copied()).collect();
        let constraints = ConstraintSet::new([(0, 1)]);
        let a = fit(x.view(), &y, &constraints, &FitConfig::default()).unwrap();
        let b = fit(xr.view(), &yr, &constraints, &FitConfig::default()).unwrap();
        let diff = (&a.beta - &b.beta).iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-6, "{}", diff);
    }

    #[test]
    fn objective_scales_with_weights(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut rng = common::rng(seed);
        let (x, y) = common::logistic_instance(&mut rng, 60, &[5.0, 5.0], 6.0);
        let w = SampleWeights::balanced(&y).unwrap().into_inner();
        let beta = Array1::from_shape_fn(2, |_| rng.random_range(0.0..12.0));
        let config = FitConfig::default();
        let base = objective(x.view(), &y, w.view(), beta.view(), &config).unwrap();
        let scaled = objective(x.view(), &y, (&w * c).view(), beta.view(), &config).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-12 * base.abs().max(1.0) * c.max(1.0));
    }
}

#[test]
fn fitted_beta_is_continuous_in_lambda() {
    let mut rng = common::rng(77);
    let (x, y) = common::logistic_instance(&mut rng, 3000, &[3.0, 7.0, 4.0, 9.0], 9.5);
    let constraints = ConstraintSet::new([(0, 1), (2, 3)]);
    let at = |lambda: f64| fit(x.view(), &y, &constraints, &FitConfig::default().with_lambda(lambda)).unwrap().beta;
    let mut prev_step = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4] {
        let step = (&at(0.5 + eps) - &at(0.5)).iter().map(|v| v.abs()).fold(0.0, f64::max);
        // locally Lipschitz: the change shrinks with the perturbation
        assert!(step <= 50.0 * eps, "eps {eps}: change {step}");
        assert!(step < prev_step);
        prev_step = step;
    }
}

#[test]
fn balanced_weights_sum_to_one_per_class() {
    let mut rng = common::rng(5);
    let y: Vec<bool> = (0..101).map(|_| rng.random_bool(0.3)).collect();
    let w = SampleWeights::balanced(&y).unwrap().into_inner();
    let pos: f64 = w.iter().zip(&y).filter(|(_, &v)| v).map(|(w, _)| w).sum();
    let neg: f64 = w.iter().zip(&y).filter(|(_, &v)| !v).map(|(w, _)| w).sum();
    assert!((pos - 1.0).abs() < 1e-12 && (neg - 1.0).abs() < 1e-12);
}
