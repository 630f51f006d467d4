//! Entropy, divergence and mutual information, discrete and 1-D continuous.
//!
//! Everything is in nats.

use crate::domain::{Channel, GaussianMixture1D, Pmf};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadResult, QuadratureSpec};

pub(crate) fn xlnx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

pub(crate) fn entropy_weights(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlnx(x)).sum::<f64>()
}

/// `D(p‖q)` on raw weights; `+∞` when `p` is not absolutely continuous.
pub(crate) fn kl_weights(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
    }
    total.max(0.0)
}

/// Binary entropy `h_b(x)` in nats.
pub fn binary_entropy(x: f64) -> f64 {
    -xlnx(x) - xlnx(1.0 - x)
}

pub fn shannon_entropy(p: &Pmf) -> f64 {
    entropy_weights(p.probs())
}

/// `D(P‖Q)`; `+∞` if `supp P ⊄ supp Q`.
pub fn kl_discrete(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::mismatch(format!(
            "pmfs of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(kl_weights(p.probs(), q.probs()))
}

pub fn mutual_info_discrete(input: &Pmf, channel: &Channel) -> Result<f64> {
    let out = channel.push_forward(input.probs())?;
    let noise: f64 = input
        .probs()
        .iter()
        .zip(channel.rows())
        .map(|(&px, row)| px * entropy_weights(row))
        .sum();
    Ok((entropy_weights(&out) - noise).max(0.0))
}

fn require_smooth(p: &GaussianMixture1D, name: &str) -> Result<()> {
    if p.has_atoms() {
        return Err(Error::domain(format!(
            "{name} has an atom; smooth it first"
        )));
    }
    Ok(())
}

fn integration_range(ms: &[&GaussianMixture1D], tail_sigma: f64) -> (f64, f64, Vec<f64>) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut breaks = Vec::new();
    for m in ms {
        let (a, b) = m.mean_range();
        lo = lo.min(a - tail_sigma * m.max_std());
        hi = hi.max(b + tail_sigma * m.max_std());
        breaks.extend(m.components().iter().map(|c| c.mean));
    }
    (lo, hi, breaks)
}

/// `h(P) = −∫ f ln f`. A non-converged result is returned with
/// `converged = false` rather than as an error.
pub fn diff_entropy_1d(p: &GaussianMixture1D, spec: &QuadratureSpec) -> Result<QuadResult> {
    spec.validate()?;
    require_smooth(p, "mixture")?;
    let (lo, hi, breaks) = integration_range(&[p], spec.tail_sigma);
    Ok(integrate(
        |x| {
            let l = p.ln_pdf(x);
            -l.exp() * l
        },
        lo,
        hi,
        &breaks,
        spec,
    ))
}

/// `D(P‖Q) = ∫ f ln(f/g)`.
pub fn kl_1d(
    p: &GaussianMixture1D,
    q: &GaussianMixture1D,
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    spec.validate()?;
    require_smooth(p, "P")?;
    require_smooth(q, "Q")?;
    let (lo, hi, breaks) = integration_range(&[p, q], spec.tail_sigma);
    let mut r = integrate(
        |x| {
            let lf = p.ln_pdf(x);
            let f = lf.exp();
            if f == 0.0 {
                0.0
            } else {
                f * (lf - q.ln_pdf(x))
            }
        },
        lo,
        hi,
        &breaks,
        spec,
    );
    r.value = r.value.max(0.0);
    Ok(r)
}

/// Closed-form `h(N(μ, σ²)) = ½ ln(2πeσ²)`.
pub fn gaussian_entropy(var: f64) -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln()
}

pub fn convolve_with_gaussian(p: &GaussianMixture1D, sigma_sq: f64) -> Result<GaussianMixture1D> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::domain(format!(
            "sigma_sq must be positive, got {sigma_sq}"
        )));
    }
    Ok(p.convolve(sigma_sq))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcaveMax {
    pub argmax: f64,
    pub max: f64,
    /// The midpoint-concavity check failed and a dense grid was used.
    pub fallback: bool,
}

const CONCAVITY_SAMPLES: usize = 64;
const FALLBACK_GRID: usize = 100_000;

/// Maximizes a concave function on `[0, 1]` by golden-section search down to
/// an interval of width `tol`.
pub fn capacity_1d_concave<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<ConcaveMax> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tol must be positive, got {tol}")));
    }
    let h = 1.0 / CONCAVITY_SAMPLES as f64;
    let samples: Vec<f64> = (0..=CONCAVITY_SAMPLES).map(|i| f(i as f64 * h)).collect();
    let concave = samples
        .windows(3)
        .all(|w| 2.0 * w[1] >= w[0] + w[2] - 1e-12 * (1.0 + w[1].abs()));
    if !concave {
        let (argmax, max) = (0..=FALLBACK_GRID)
            .map(|i| {
                let x = i as f64 / FALLBACK_GRID as f64;
                (x, f(x))
            })
            .fold((0.0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        return Ok(ConcaveMax {
            argmax,
            max,
            fallback: true,
        });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let mut best = (x, f(x));
    for (e, fe) in [(0.0, samples[0]), (1.0, samples[CONCAVITY_SAMPLES])] {
        if fe > best.1 {
            best = (e, fe);
        }
    }
    Ok(ConcaveMax {
        argmax: best.0,
        max: best.1,
        fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Component;
    use std::f64::consts::LN_2;

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&Pmf::point_mass(3, 1, 2).unwrap()), 0.0);
        let u = Pmf::uniform(5, 1).unwrap();
        assert!((shannon_entropy(&u) - 5f64.ln()).abs() < 1e-15);
        let d = Pmf::letter(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((shannon_entropy(&d) - 1.5 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        let p = Pmf::letter(vec![0.3, 0.7]).unwrap();
        assert_eq!(kl_discrete(&p, &p).unwrap(), 0.0);
        let one = Pmf::letter(vec![0.0, 1.0]).unwrap();
        let half = Pmf::letter(vec![0.5, 0.5]).unwrap();
        assert!((kl_discrete(&one, &half).unwrap() - LN_2).abs() < 1e-15);
        let zero = Pmf::letter(vec![1.0, 0.0]).unwrap();
        assert_eq!(kl_discrete(&p, &zero).unwrap(), f64::INFINITY);
        assert!(kl_discrete(&p, &Pmf::uniform(3, 1).unwrap()).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let same = Channel::new(vec![vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        let u = Pmf::uniform(2, 1).unwrap();
        assert!(mutual_info_discrete(&u, &same).unwrap().abs() < 1e-15);
        let u4 = Pmf::uniform(4, 1).unwrap();
        let id = Channel::identity(4).unwrap();
        assert!((mutual_info_discrete(&u4, &id).unwrap() - 4f64.ln()).abs() < 1e-14);
        let bsc = Channel::bsc(0.11).unwrap();
        let want = LN_2 - binary_entropy(0.11);
        assert!((mutual_info_discrete(&u, &bsc).unwrap() - want).abs() < 1e-15);
        assert!(mutual_info_discrete(&u4, &bsc).is_err());
    }

    #[test]
    fn gaussian_differential_entropy() {
        let spec = QuadratureSpec::default();
        for v in [0.25, 1.0, 4.0] {
            let g = GaussianMixture1D::gaussian(0.7, v).unwrap();
            let r = diff_entropy_1d(&g, &spec).unwrap();
            assert!(r.converged);
            assert!(
                (r.value - gaussian_entropy(v)).abs() < 1e-9,
                "v={v}: {}",
                r.value
            );
        }
    }

    #[test]
    fn collapsed_mixture() {
        let m = GaussianMixture1D::new(vec![
            Component {
                w: 0.5,
                mean: -1e-9,
                var: 1.0,
            },
            Component {
                w: 0.5,
                mean: 1e-9,
                var: 1.0,
            },
        ])
        .unwrap();
        let r = diff_entropy_1d(&m, &QuadratureSpec::default()).unwrap();
        assert!((r.value - gaussian_entropy(1.0)).abs() < 1e-9);
    }

    #[test]
    fn atoms_are_rejected() {
        let a = GaussianMixture1D::atoms(&[0.0], &[1.0]).unwrap();
        assert!(diff_entropy_1d(&a, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn gaussian_kl() {
        let spec = QuadratureSpec::default();
        let p = GaussianMixture1D::gaussian(0.0, 1.0).unwrap();
        let q = GaussianMixture1D::gaussian(0.0, 2.0).unwrap();
        let r = kl_1d(&p, &q, &spec).unwrap();
        assert!((r.value - 0.5 * (LN_2 - 0.5)).abs() < 1e-9, "{}", r.value);
        assert!(kl_1d(&p, &p, &spec).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn convolution() {
        let atom = GaussianMixture1D::atoms(&[0.0], &[1.0]).unwrap();
        let g = convolve_with_gaussian(&atom, 1.0).unwrap();
        assert_eq!(g, GaussianMixture1D::gaussian(0.0, 1.0).unwrap());
        assert!(convolve_with_gaussian(&g, 0.0).is_err());
    }

    #[test]
    fn golden_section() {
        let r = capacity_1d_concave(|q| -(q - 0.3) * (q - 0.3), 1e-9).unwrap();
        assert!((r.argmax - 0.3).abs() < 1e-8);
        assert!(!r.fallback);
        let r = capacity_1d_concave(binary_entropy, 1e-9).unwrap();
        assert!((r.argmax - 0.5).abs() < 1e-8);
        let r = capacity_1d_concave(|q| q, 1e-9).unwrap();
        assert_eq!(r.argmax, 1.0);
    }

    #[test]
    fn non_concave_falls_back() {
        let r = capacity_1d_concave(|q| (q - 0.5).powi(2) + 0.1 * q, 1e-9).unwrap();
        assert!(r.fallback);
        assert_eq!(r.argmax, 1.0);
    }
}
