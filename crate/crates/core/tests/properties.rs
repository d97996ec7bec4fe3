use dcf_core::{
    bootstrap_draws, critical_value, p_value, run_test, BootstrapDraws, Sample64, TestConfig,
};
use proptest::prelude::*;

fn sample(n: usize, p: usize, values: &[f64]) -> Sample64 {
    Sample64::from_row_major(n, p, values[..n * p].to_vec()).unwrap()
}

fn pair() -> impl Strategy<Value = (Sample64, Sample64, u64)> {
    (2usize..25, 2usize..25, 1usize..12, any::<u64>()).prop_flat_map(|(n, m, p, seed)| {
        (
            proptest::collection::vec(-5.0f64..5.0, n * p),
            proptest::collection::vec(-5.0f64..5.0, m * p),
        )
            .prop_map(move |(xs, ys)| (sample(n, p, &xs), sample(m, p, &ys), seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn common_shift_leaves_test_unchanged(
        (x, y, seed) in pair(),
        shift in proptest::collection::vec(-50.0f64..50.0, 12),
    ) {
        let config = TestConfig::new(0.05, 200, seed).unwrap();
        let p = x.p();
        let sx = Sample64::from_row_major(x.n(), p, (0..x.n() * p).map(|k| x.row(k / p)[k % p] + shift[k % p]).collect()).unwrap();
        let sy = Sample64::from_row_major(y.n(), p, (0..y.n() * p).map(|k| y.row(k / p)[k % p] + shift[k % p]).collect()).unwrap();
        let a = run_test(&x, &y, &config).unwrap();
        let b = run_test(&sx, &sy, &config).unwrap();
        let tol = 1e-9 * (1.0 + a.statistic.max(a.critical_value));
        prop_assert!((a.statistic - b.statistic).abs() <= tol);
        prop_assert!((a.critical_value - b.critical_value).abs() <= tol);
        if (a.statistic - a.critical_value).abs() > tol {
            prop_assert_eq!(a.reject, b.reject);
        }
    }

    #[test]
    fn positive_scaling_is_equivariant((x, y, seed) in pair(), c in 0.01f64..100.0) {
        let config = TestConfig::new(0.1, 200, seed).unwrap();
        let a = run_test(&x, &y, &config).unwrap();
        let b = run_test(&x.map(|v| v * c).unwrap(), &y.map(|v| v * c).unwrap(), &config).unwrap();
        prop_assert!((b.statistic - c * a.statistic).abs() <= 1e-12 * (c * a.statistic).max(1e-300));
        prop_assert!((b.critical_value - c * a.critical_value).abs() <= 1e-12 * (c * a.critical_value).max(1e-300));
    }

    #[test]
    fn alpha_monotone(values in proptest::collection::vec(0.0f64..10.0, 100..300), a1 in 0.001f64..0.999, a2 in 0.001f64..0.999) {
        let draws = BootstrapDraws::from_values(values).unwrap();
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        prop_assert!(critical_value(&draws, lo) >= critical_value(&draws, hi));
    }

    #[test]
    fn quantile_and_p_value_agree((x, y, seed) in pair(), alpha in 0.01f64..0.5) {
        let config = TestConfig::new(alpha, 200, seed).unwrap();
        let draws = bootstrap_draws(&x, &y, &config).unwrap();
        let stat = dcf_core::test_statistic(&x, &y).unwrap();
        prop_assume!(!draws.values().contains(&stat));
        let reject = stat >= critical_value(&draws, alpha);
        let p = p_value(&draws, stat);
        if reject != (p <= alpha) {
            prop_assert!((p - alpha).abs() < 1.0 / draws.len() as f64);
        }
    }
}
