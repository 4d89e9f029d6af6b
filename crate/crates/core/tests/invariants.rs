use bibeta::{
    attainable_correlation_range, exact_correlation, exact_covariance, fit_beta_marginal,
    hyp3f2_unit, product_moment, BivariateBetaParams, RngStream,
};
use proptest::prelude::*;

// Raw moment of Beta(p, q): prod_{i<k} (p + i) / (p + q + i).
fn beta_raw_moment(p: f64, q: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |m, i| m * (p + i as f64) / (p + q + i as f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn attainable_range_is_inside_the_unit_interval(
        a1 in 0.5f64..20.0,
        a2 in 0.5f64..20.0,
        b1 in 0.5f64..20.0,
        b2 in 0.5f64..20.0,
    ) {
        let (lo, hi) = attainable_correlation_range(a1, a2, b1, b2).unwrap();
        prop_assert_eq!(lo, 0.0);
        prop_assert!(hi > 0.0 && hi < 1.0, "r_max = {}", hi);
    }

    #[test]
    fn marginal_moments_ignore_the_shared_split(
        a1 in 0.5f64..8.0,
        a2 in 0.5f64..8.0,
        b1 in 0.5f64..8.0,
        b2 in 0.5f64..8.0,
        d1 in 0.4f64..3.0,
        d2 in 0.4f64..3.0,
        k in 1u32..5,
    ) {
        let p = BivariateBetaParams::new(a1, a2, b1, b2, d1, d2).unwrap();
        let want_x = beta_raw_moment(p.a1(), p.a2(), k);
        let got_x = product_moment(&p, k, 0).unwrap();
        prop_assert!(got_x.converged);
        prop_assert!(
            (got_x.value - want_x).abs() <= 1e-8 * want_x,
            "E(X^{}) = {} vs {}", k, got_x.value, want_x
        );
        let want_y = beta_raw_moment(p.b1(), p.b2(), k);
        let got_y = product_moment(&p, 0, k).unwrap();
        prop_assert!(got_y.converged);
        prop_assert!(
            (got_y.value - want_y).abs() <= 1e-8 * want_y,
            "E(Y^{}) = {} vs {}", k, got_y.value, want_y
        );
    }

    #[test]
    fn shared_shapes_induce_positive_dependence(
        a1 in 0.5f64..8.0,
        a2 in 0.5f64..8.0,
        b1 in 0.5f64..8.0,
        b2 in 0.5f64..8.0,
        d1 in 0.3f64..4.0,
        d2 in 0.3f64..4.0,
    ) {
        let p = BivariateBetaParams::new(a1, a2, b1, b2, d1, d2).unwrap();
        let cov = exact_covariance(&p).unwrap();
        let r = exact_correlation(&p).unwrap();
        prop_assert!(cov.converged && r.converged);
        prop_assert!(cov.value > 0.0, "covariance {}", cov.value);
        prop_assert!(r.value < 1.0, "correlation {}", r.value);
    }

    #[test]
    fn beta_marginal_fit_round_trips(
        p in 0.5f64..50.0,
        q in 0.5f64..50.0,
    ) {
        let s = p + q;
        let mean = p / s;
        let var = p * q / (s * s * (s + 1.0));
        let m = fit_beta_marginal(mean, var).unwrap();
        prop_assert!((m.p() - p).abs() <= 1e-9 * p, "p {} vs {}", m.p(), p);
        prop_assert!((m.q() - q).abs() <= 1e-9 * q, "q {} vs {}", m.q(), q);
    }

    #[test]
    fn series_with_positive_arguments_is_at_least_one(
        a in 0.5f64..6.0,
        b in 0.5f64..6.0,
        c in 0.5f64..6.0,
        extra1 in 0.3f64..4.0,
        extra2 in 0.3f64..4.0,
    ) {
        // lower parameters exceed the uppers they pair with, so the
        // margin e1 + e2 - c stays positive when extra1 + extra2 > c;
        // keep it above 0.3 for fast certification
        let c = c.min(extra1 + extra2 - 0.3).max(0.3);
        let e1 = a + extra1;
        let e2 = b + extra2;
        let eval = hyp3f2_unit(a, b, c, e1, e2, 1e-10).unwrap();
        prop_assert!(eval.converged);
        prop_assert!(eval.value >= 1.0, "series value {}", eval.value);
    }

    #[test]
    fn unit_draws_stay_strictly_interior(seed in any::<u64>()) {
        let mut s = RngStream::new(seed, 0);
        for _ in 0..64 {
            let u = s.open01();
            prop_assert!(u > 0.0 && u < 1.0);
        }
    }
}
