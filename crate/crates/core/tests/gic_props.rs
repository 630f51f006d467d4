use proptest::prelude::*;
use wasscont::gic::{
    corner_c1_prime, corner_report, delta, hk_inner_curve, outer_bound, outer_bound_r1,
    outer_curve, Constraint, GicParams,
};

fn gains() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    // a in (0,1], powers in (0.1,10]
    (0.0f64..1.0, 0.0f64..3.0, 0.0f64..9.9, 0.0f64..9.9)
        .prop_map(|(a, b, p1, p2)| (1.0 - a, b, 10.0 - p1, 10.0 - p2))
}

fn both(a: f64, b: f64, p1: f64, p2: f64) -> [GicParams; 2] {
    [Constraint::AlmostSure, Constraint::Average].map(|c| GicParams::new(a, b, p1, p2, c).unwrap())
}

/// Largest `R₁` of the inner curve at `r2`, by linear interpolation between
/// its samples.
fn hk_r1_at(points: &[(f64, f64)], r2: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let (lo, hi) = (y0.min(y1), y0.max(y1));
        if r2 < lo || r2 > hi {
            return None;
        }
        Some(if hi == lo {
            x0.max(x1)
        } else {
            x0 + (x1 - x0) * (r2 - y0) / (y1 - y0)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn outer_bound_meets_the_corner_at_full_rate((a, b, p1, p2) in gains()) {
        for params in both(a, b, p1, p2) {
            let (c1p, _) = corner_c1_prime(a, b, p1, p2).unwrap();
            prop_assert!((outer_bound_r1(&params, params.c2()).unwrap() - c1p).abs() <= 1e-9);
            let sato = 0.5 * (1.0 + p1 / (1.0 + p2)).ln();
            prop_assert!((outer_bound(&params, params.c2()).unwrap().sato_kramer - sato).abs() <= 1e-12);
        }
    }

    #[test]
    fn delta_vanishes_at_full_rate_and_decreases((a, b, p1, p2) in gains()) {
        for params in both(a, b, p1, p2) {
            let (lo, hi) = (params.c2_tilde(), params.c2());
            prop_assert_eq!(delta(&params, hi).unwrap(), 0.0);
            let mut prev = f64::INFINITY;
            for i in 0..=50 {
                let r2 = lo + (hi - lo) * i as f64 / 50.0;
                let d = delta(&params, r2).unwrap();
                prop_assert!(d >= 0.0);
                prop_assert!(d <= prev + 1e-12);
                prev = d;
            }
        }
    }

    #[test]
    fn average_power_bound_is_looser((a, b, p1, p2) in gains(), frac in 0.0f64..=1.0) {
        let [as_, avg] = both(a, b, p1, p2);
        let r2 = as_.c2_tilde() + frac * (as_.c2() - as_.c2_tilde());
        prop_assert!(delta(&avg, r2).unwrap() >= delta(&as_, r2).unwrap());
        prop_assert!(outer_bound_r1(&avg, r2).unwrap() >= outer_bound_r1(&as_, r2).unwrap() - 1e-12);
    }

    #[test]
    fn rates_outside_the_interval_are_refused((a, b, p1, p2) in gains()) {
        for params in both(a, b, p1, p2) {
            prop_assert!(outer_bound_r1(&params, params.c2() + 1e-6).is_err());
            prop_assert!(outer_bound_r1(&params, params.c2_tilde() - 1e-6).is_err());
        }
    }

    #[test]
    fn corner_report_is_ordered(a in 0.0f64..=1.0, b in 0.0f64..4.0, p1 in 0.1f64..10.0, p2 in 0.1f64..10.0) {
        let r = corner_report(&GicParams::new(a, b, p1, p2, Constraint::AlmostSure).unwrap()).unwrap();
        prop_assert!(r.c2_tilde <= r.c2);
        prop_assert!(r.c1_prime <= r.c1 + 1e-15);
        prop_assert!(r.c2_prime <= r.c2 + 1e-15);
        prop_assert!(r.c1_prime >= 0.0 && r.c2_prime >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outer_curve_dominates_the_inner_curve((a, b, p1, p2) in gains()) {
        for params in both(a, b, p1, p2) {
            let inner = hk_inner_curve(&params, 400).unwrap();
            for &(r1, r2) in &inner.points {
                prop_assert!(outer_bound_r1(&params, r2).unwrap() >= r1 - 1e-9);
            }
            // And from the outer side, at the outer curve's own sample points.
            for &(r1_out, r2) in &outer_curve(&params, 200).unwrap().points {
                if let Some(r1_in) = hk_r1_at(&inner.points, r2) {
                    prop_assert!(r1_out >= r1_in - 1e-9);
                }
            }
        }
    }
}
