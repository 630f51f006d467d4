mod common;

use common::{random_channel, random_pmf, random_two_input, rng};
use proptest::prelude::*;
use rand::Rng;
use wasscont::discrete_ic::{
    block_conditional_entropies, chang_one_sided_ub, discrete_corner, entropy_gap_fano_ub,
    eta_kl_two_input, eta_tv, eta_tv_two_input, fc_envelope, g_from_fc, mean_conditional_dbar,
    mod3_mix, prop_dbar_bounds,
};
use wasscont::domain::index_decode;
use wasscont::infomeasures::{kl_discrete, shannon_entropy};
use wasscont::transport::{dbar, dbar_contraction_ub, marton_dbar_ub};
use wasscont::{Channel, Pmf, TwoInputChannel};

/// Exact joint law of `(X^n, Y^n)` flattened as a single-letter pmf.
fn joint_xy(w: &TwoInputChannel, p_x: &Pmf, p_a: &Pmf) -> Pmf {
    let n = p_x.n();
    let ny = w.y_size().pow(n as u32);
    let mut joint = vec![0.0; p_x.len() * ny];
    for (xi, &px) in p_x.probs().iter().enumerate() {
        let x = index_decode(xi, w.x_size(), n);
        for (ai, &pa) in p_a.probs().iter().enumerate() {
            let a = index_decode(ai, w.a_size(), n);
            for yi in 0..ny {
                let y = index_decode(yi, w.y_size(), n);
                let lik: f64 = (0..n).map(|j| w.row(x[j], a[j])[y[j]]).product();
                joint[xi * ny + yi] += px * pa * lik;
            }
        }
    }
    Pmf::from_weights(joint.len(), 1, joint).unwrap()
}

fn mutual_information(w: &TwoInputChannel, p_x: &Pmf, p_a: &Pmf) -> f64 {
    let y = w.output_law(p_x, p_a).unwrap();
    shannon_entropy(p_x) + shannon_entropy(&y) - shannon_entropy(&joint_xy(w, p_x, p_a))
}

fn alphabets(seed: u64) -> (usize, usize, usize, usize) {
    let r = &mut rng(seed ^ 0xa1fa);
    (
        r.random_range(2..=3),
        r.random_range(2..=3),
        r.random_range(2..=3),
        r.random_range(1..=2),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn entropy_gap_below_fano_of_dbar(shape in prop::sample::select(vec![(2usize, 2usize), (3, 1), (3, 2)]), seed in any::<u64>()) {
        let (k, n) = shape;
        let r = &mut rng(seed);
        let p = random_pmf(r, k, n, true);
        let q = random_pmf(r, k, n, true);
        let gap = (shannon_entropy(&p) - shannon_entropy(&q)).abs();
        prop_assert!(gap <= entropy_gap_fano_ub(&p, &q).unwrap() + 1e-10);
    }

    #[test]
    fn dbar_controls_output_entropy_divergence_and_information(seed in any::<u64>()) {
        let (xs, as_, ys, n) = alphabets(seed);
        let r = &mut rng(seed);
        let w = random_two_input(r, xs, as_, ys, 0.02);
        let p_x = random_pmf(r, xs, n, false);
        let p_a = random_pmf(r, as_, n, false);
        let p_at = random_pmf(r, as_, n, false);
        let y = w.output_law(&p_x, &p_a).unwrap();
        let yt = w.output_law(&p_x, &p_at).unwrap();
        let mean_d = mean_conditional_dbar(&w, &p_x, &p_a, &p_at).unwrap();
        let b = prop_dbar_bounds(&w, &y, &yt, dbar(&y, &yt).unwrap(), mean_d).unwrap();
        prop_assert!((shannon_entropy(&y) - shannon_entropy(&yt)).abs() <= b.h_bound + 1e-10);
        let sym = kl_discrete(&y, &yt).unwrap() + kl_discrete(&yt, &y).unwrap();
        prop_assert!(sym <= b.d_bound + 1e-10);
        let gap_i = (mutual_information(&w, &p_x, &p_a) - mutual_information(&w, &p_x, &p_at)).abs();
        prop_assert!(gap_i <= b.i_bound + 1e-10, "{} > {}", gap_i, b.i_bound);
    }

    #[test]
    fn kernels_contract_dbar(k in 2usize..=3, n in 1usize..=2, out in 2usize..=3, seed in any::<u64>()) {
        let r = &mut rng(seed);
        let p = random_pmf(r, k, n, true);
        let q = random_pmf(r, k, n, true);
        let kernels: Vec<Channel> = (0..n).map(|_| random_channel(r, k, out, 0.0)).collect();
        let d = dbar(&p, &q).unwrap();
        let pushed = dbar(
            &Channel::push_forward_product(&kernels, &p).unwrap(),
            &Channel::push_forward_product(&kernels, &q).unwrap(),
        )
        .unwrap();
        prop_assert!(pushed <= dbar_contraction_ub(d, &kernels).unwrap() + 1e-10);
    }

    #[test]
    fn bsc_coefficient(delta in 0.0f64..=1.0) {
        let c = Channel::bsc(delta).unwrap();
        prop_assert!((eta_tv(&c) - (1.0 - 2.0 * delta).abs()).abs() <= 1e-15);
    }

    #[test]
    fn output_dbar_chains_through_the_input(seed in any::<u64>()) {
        let (xs, as_, ys, n) = alphabets(seed);
        let r = &mut rng(seed);
        let w = random_two_input(r, xs, as_, ys, 0.02);
        let p_x = random_pmf(r, xs, n, false);
        let p_a = random_pmf(r, as_, n, true);
        let p0 = random_pmf(r, as_, 1, false);
        let p_at = Pmf::product(&vec![p0.clone(); n]).unwrap();
        let d_y = dbar(&w.output_law(&p_x, &p_a).unwrap(), &w.output_law(&p_x, &p_at).unwrap()).unwrap();
        let eta = eta_tv_two_input(&w);
        let d_a = dbar(&p_a, &p_at).unwrap();
        let kl_a = kl_discrete(&p_a, &p_at).unwrap();
        prop_assert!(d_y <= eta * d_a + 1e-10);
        prop_assert!(eta * d_a <= eta * marton_dbar_ub(kl_a, n) + 1e-10);
        // Same chain through the divergence, with the contraction constant at one.
        prop_assert!(d_y <= marton_dbar_ub(kl_a, n) + 1e-10);
    }

    #[test]
    fn one_sided_entropy_gap_against_products(k in 2usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let r = &mut rng(seed);
        let p = random_pmf(r, k, n, true);
        let qs: Vec<Pmf> = (0..n).map(|_| random_pmf(r, k, 1, false)).collect();
        let q = Pmf::product(&qs).unwrap();
        let kl = kl_discrete(&p, &q).unwrap();
        prop_assert!(shannon_entropy(&p) - shannon_entropy(&q) <= chang_one_sided_ub(kl, n, k).unwrap() + 1e-10);
    }

    #[test]
    fn discrete_corner_invariants(seed in any::<u64>()) {
        let p2 = random_pmf(&mut rng(seed), 3, 1, false);
        let r = discrete_corner(&p2).unwrap();
        let h2 = shannon_entropy(&p2);
        prop_assert!(r.c2 >= 0.0);
        prop_assert!((0.0..=1.0).contains(&r.q_star));
        prop_assert!((r.c1_prime + r.c2 - (3f64.ln() - h2)).abs() <= 1e-12);
        let mix = mod3_mix(r.q_star, p2.probs());
        for (a, b) in mix.iter().zip(r.p3.probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let grid = (0..=10_000)
            .map(|i| shannon_entropy(&Pmf::letter(mod3_mix(i as f64 / 1e4, p2.probs()).to_vec()).unwrap()) - h2)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(r.c2 >= grid - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eta_kl_estimate_is_a_coefficient(seed in any::<u64>()) {
        let (xs, as_, ys, _) = alphabets(seed);
        let r = &mut rng(seed);
        let w = random_two_input(r, xs, as_, ys, 0.02);
        let p0 = random_pmf(r, as_, 1, false);
        let est = eta_kl_two_input(&w, &p0, 40).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&est.value));
    }

    #[test]
    fn envelope_invariants(xs in 2usize..=3, as_ in 2usize..=3, bs in 2usize..=3, seed in any::<u64>()) {
        let r = &mut rng(seed);
        let ax = random_channel(r, xs, as_, 0.02);
        let ba = random_channel(r, as_, bs, 0.02);
        let curve = fc_envelope(&ax, &ba, 60).unwrap();
        prop_assert!(curve.check_invariants(1e-12).is_ok());
        prop_assert_eq!(curve.knots[0], (0.0, 0.0));
        for w in curve.knots.windows(2) {
            prop_assert!(w[1].0 > w[0].0 && w[1].1 >= w[0].1 - 1e-12);
        }
        if let Ok(g) = g_from_fc(&curve) {
            prop_assert_eq!(g.eval(0.0), 0.0);
            for w in g.knots.windows(2) {
                prop_assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
            }
        }
    }

    #[test]
    fn envelope_tensorizes_over_two_letters(xs in 2usize..=3, as_ in 2usize..=3, bs in 2usize..=3, seed in any::<u64>()) {
        let r = &mut rng(seed);
        let ax = random_channel(r, xs, as_, 0.02);
        let ba = random_channel(r, as_, bs, 0.02);
        let joint = random_pmf(r, xs, 2, true);
        let curve = fc_envelope(&ax, &ba, 80).unwrap();
        let (h_xa, h_xb) = block_conditional_entropies(&joint, &ax, &ba).unwrap();
        let t = (h_xb / 2.0 + curve.grid_err_t).min(curve.t_max);
        prop_assert!(h_xa <= 2.0 * (curve.eval(t) + curve.grid_err_f) + 1e-10);
    }
}
