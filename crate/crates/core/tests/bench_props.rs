use proptest::prelude::*;
use soa_core::bench::{abs_rel_errors, ols_origin};

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// Closed-form slope against a brute-force scan of the squared loss.
    #[test]
    fn ols_matches_grid_search(xs in prop::collection::vec(0.1..1.0f64, 5..40), noise in prop::collection::vec(-0.05..0.05f64, 40)) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| 0.3 * x + e).collect();
        let r = ols_origin(&xs, &ys).unwrap();
        let loss = |b: f64| xs.iter().zip(&ys).map(|(x, y)| (y - b * x).powi(2)).sum::<f64>();
        let (mut best, mut best_loss) = (0.0, f64::INFINITY);
        let mut b = 0.2;
        while b <= 0.4 {
            let l = loss(b);
            if l < best_loss {
                best = b;
                best_loss = l;
            }
            b += 1e-6;
        }
        prop_assert!((r.beta - best).abs() < 1e-5);
    }

    #[test]
    fn relative_error_is_scale_invariant(pairs in prop::collection::vec((0.01..1.0f64, 0.01..1.0f64), 1..50), c in 0.5..4.0f64) {
        let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = abs_rel_errors(&p, &a).unwrap();
        let ps: Vec<f64> = p.iter().map(|v| v * c).collect();
        let as_: Vec<f64> = a.iter().map(|v| v * c).collect();
        let scaled = abs_rel_errors(&ps, &as_).unwrap();
        prop_assert!((base.relative - scaled.relative).abs() <= 1e-12 * base.relative.max(1.0));
    }

    #[test]
    fn self_regression_has_unit_slope(xs in prop::collection::vec(0.001..10.0f64, 2..60)) {
        prop_assert_eq!(ols_origin(&xs, &xs).unwrap().beta, 1.0);
    }
}
