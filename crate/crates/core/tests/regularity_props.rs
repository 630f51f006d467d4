mod common;

use common::rng;
use proptest::prelude::*;
use rand::Rng;
use wasscont::infomeasures::diff_entropy_1d;
use wasscont::quadrature::QuadratureSpec;
use wasscont::regularity::{
    best_bound, delta_ppr, gaussian_smoothing_regularity, gradient_excess, shift_regularity,
    symmetric_kl_bound, w2lip_delta, RegularityParams,
};
use wasscont::transport::wp_quantile_1d;
use wasscont::verify::dirichlet_uniform;
use wasscont::GaussianMixture1D;

fn atoms(seed: u64) -> GaussianMixture1D {
    let r = &mut rng(seed);
    let count = r.random_range(2..=4usize);
    let pts: Vec<f64> = (0..count).map(|_| r.random_range(-2.0..2.0)).collect();
    GaussianMixture1D::atoms(&pts, &dirichlet_uniform(r, count)).unwrap()
}

fn entropy(m: &GaussianMixture1D) -> (f64, f64) {
    let r = diff_entropy_1d(m, &QuadratureSpec::default()).unwrap();
    assert!(r.converged);
    (r.value, r.error_estimate)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bounds_are_homogeneous_in_the_distance(
        c1 in 0.01f64..10.0,
        c2 in 0.0f64..10.0,
        m2_u in 0.0f64..10.0,
        m2_v in 0.0f64..10.0,
        w in 0.0f64..5.0,
        lambda in 0.0f64..10.0,
        sigma_sq in 0.1f64..4.0,
        p in 0.0f64..5.0,
        n in 1usize..=4,
    ) {
        let reg = RegularityParams::new(c1, c2).unwrap();
        prop_assert!(close(
            delta_ppr(&reg, m2_u, m2_v, lambda * w).unwrap(),
            lambda * delta_ppr(&reg, m2_u, m2_v, w).unwrap()
        ));
        prop_assert!(close(
            symmetric_kl_bound(&reg, m2_u, m2_v, lambda * w).unwrap(),
            lambda * symmetric_kl_bound(&reg, m2_u, m2_v, w).unwrap()
        ));
        prop_assert!(close(
            w2lip_delta(sigma_sq, p, n, lambda * w).unwrap(),
            lambda * w2lip_delta(sigma_sq, p, n, w).unwrap()
        ));
        prop_assert!(close(
            best_bound(sigma_sq, p, m2_u, m2_u, lambda * w).unwrap(),
            lambda * best_bound(sigma_sq, p, m2_u, m2_u, w).unwrap()
        ));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn smoothed_mixtures_meet_their_gradient_bound(sigma_sq in 0.5f64..2.0, seed in any::<u64>()) {
        let b = atoms(seed);
        let reg = gaussian_smoothing_regularity(sigma_sq, b.abs_first_moment()).unwrap();
        let half = 10.0 * (sigma_sq.sqrt() + b.max_abs_mean());
        prop_assert!(gradient_excess(&b.convolve(sigma_sq), &reg, half, 2001).unwrap() <= 0.0);
    }

    #[test]
    fn one_sided_gap_needs_only_the_reference_regular(
        sigma_sq in 0.5f64..2.0,
        s_sq in 0.5f64..2.0,
        seed in any::<u64>(),
    ) {
        let v = atoms(seed).convolve(sigma_sq);
        let u = atoms(seed.wrapping_add(1)).convolve(s_sq);
        let reg = gaussian_smoothing_regularity(sigma_sq, atoms(seed).abs_first_moment()).unwrap();
        let bound = delta_ppr(&reg, u.second_moment(), v.second_moment(), wp_quantile_1d(&u, &v, 2).unwrap()).unwrap();
        let ((hu, eu), (hv, ev)) = (entropy(&u), entropy(&v));
        prop_assert!(hu - hv + eu + ev <= bound + 1e-7, "{} > {}", hu - hv, bound);
    }

    #[test]
    fn two_sided_gap_between_smoothed_mixtures(sigma_sq in 0.5f64..2.0, seed in any::<u64>()) {
        let (bu, bv) = (atoms(seed), atoms(seed.wrapping_add(3)));
        let (u, v) = (bu.convolve(sigma_sq), bv.convolve(sigma_sq));
        let reg = gaussian_smoothing_regularity(sigma_sq, bu.abs_first_moment().max(bv.abs_first_moment())).unwrap();
        let bound = delta_ppr(&reg, u.second_moment(), v.second_moment(), wp_quantile_1d(&u, &v, 2).unwrap()).unwrap();
        let ((hu, eu), (hv, ev)) = (entropy(&u), entropy(&v));
        prop_assert!((hu - hv).abs() + eu + ev <= bound + 1e-7);
    }

    #[test]
    fn best_constants_dominate_under_equal_moments(sigma_sq in 0.5f64..2.0, seed in any::<u64>()) {
        let b = atoms(seed);
        let other = atoms(seed.wrapping_add(5));
        // Rescale the other atoms so both smoothed laws share a second moment.
        let other = other.scale((b.second_moment() / other.second_moment()).sqrt());
        let (u, v) = (other.convolve(sigma_sq), b.convolve(sigma_sq));
        prop_assert!((u.second_moment() - v.second_moment()).abs() <= 1e-9);
        let sup = b.max_abs_mean();
        let w1 = wp_quantile_1d(&u, &v, 1).unwrap();
        let w2 = wp_quantile_1d(&u, &v, 2).unwrap();
        let best = best_bound(sigma_sq, sup, u.second_moment(), v.second_moment(), w1).unwrap();
        let gaussian = RegularityParams::new(3.0 / sigma_sq, 0.0).unwrap();
        let reg = shift_regularity(&gaussian, sup).unwrap();
        let ppr = delta_ppr(&reg, u.second_moment(), v.second_moment(), w2).unwrap();
        prop_assert!(best <= ppr + 1e-9, "{} > {}", best, ppr);
    }
}
