//! One-dimensional `W_p` through the quantile representation
//! `W_p^p = ∫₀¹ |F_P⁻¹(u) − F_Q⁻¹(u)|^p du`.
//!
//! The integral is taken in the Gaussian scale `u = Φ(z)`, so tail levels
//! are represented without cancellation: lower quantiles solve `F(x) = Φ(z)`
//! and upper ones solve `S(x) = Φ(−z)`. Jumps of atomic parts are placed on
//! panel boundaries.

use statrs::function::erf::erfc_inv;

use crate::domain::{std_normal_cdf, GaussianMixture1D};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};

/// Quantile levels are integrated over `z ∈ [−Z_MAX, Z_MAX]`.
const Z_MAX: f64 = 12.0;
const BRACKET_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WpResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

pub fn default_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-10,
        ..QuadratureSpec::default()
    }
}

/// Generalized inverse `inf{x : F(x) ≥ Φ(z)}`.
pub fn quantile_at(mix: &GaussianMixture1D, z: f64) -> f64 {
    let (mu_lo, mu_hi) = mix.mean_range();
    let spread = BRACKET_SIGMAS * mix.max_std();
    let mut lo = mu_lo - spread;
    let mut hi = mu_hi + spread;

    // `reached(x)` is monotone in x: false below the quantile, true at/after.
    let lower_tail = z <= 0.0;
    let target = if lower_tail {
        std_normal_cdf(z)
    } else {
        std_normal_cdf(-z)
    };
    let reached = |x: f64| {
        if lower_tail {
            mix.cdf(x) >= target
        } else {
            mix.sf(x) <= target
        }
    };
    let gap = |x: f64| {
        if lower_tail {
            mix.cdf(x) - target
        } else {
            target - mix.sf(x)
        }
    };
    let step = mix.max_std().max(1.0);
    while !reached(hi) {
        hi += step;
    }
    if reached(lo) {
        while reached(lo) {
            lo -= step;
        }
    }

    let mut x = 0.5 * (lo + hi);
    let mut prev_width = hi - lo;
    let mut use_newton = true;
    for _ in 0..400 {
        if hi - lo <= 4.0 * f64::EPSILON * (lo.abs().max(hi.abs()).max(1.0)) {
            break;
        }
        let candidate = if use_newton {
            let g = gap(x);
            let d = mix.pdf(x);
            let next = x - g / d;
            if d > 0.0 && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        if reached(candidate) {
            hi = candidate;
        } else {
            lo = candidate;
        }
        x = candidate;
        let width = hi - lo;
        use_newton = width < 0.5 * prev_width || !use_newton;
        prev_width = width;
        let g = gap(x).abs();
        if !mix.has_atoms() && g <= 1e-15 * target {
            return x;
        }
    }
    // Land exactly on an atom when the bracket has collapsed onto one.
    mix.components()
        .iter()
        .filter(|c| {
            c.var == 0.0 && (c.mean - hi).abs() <= 1e-9 * (1.0 + hi.abs()) && reached(c.mean)
        })
        .map(|c| c.mean)
        .fold(hi, f64::min)
}

/// Gaussian-scale levels at which the quantile function of `mix` jumps.
fn jump_levels(mix: &GaussianMixture1D) -> Vec<f64> {
    let mut atoms: Vec<f64> = mix
        .components()
        .iter()
        .filter(|c| c.var == 0.0)
        .map(|c| c.mean)
        .collect();
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();
    let mut levels = Vec::new();
    for a in atoms {
        let mass: f64 = mix
            .components()
            .iter()
            .filter(|c| c.var == 0.0 && c.mean == a)
            .map(|c| c.w)
            .sum();
        let below = mix.cdf(a) - mass;
        let above = mix.sf(a);
        for (lower, upper) in [(below, above + mass), (below + mass, above)] {
            levels.push(level_to_z(lower, upper));
        }
    }
    levels
}

/// `Φ⁻¹(u)` given both `u` and `1 − u`, using whichever is more accurate.
fn level_to_z(lower: f64, upper: f64) -> f64 {
    if lower <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if upper <= 0.0 {
        return f64::INFINITY;
    }
    if lower <= 0.5 {
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * lower)
    } else {
        std::f64::consts::SQRT_2 * erfc_inv(2.0 * upper)
    }
}

/// Exact `W_p^p` between two purely atomic laws by sweeping merged CDFs.
fn atomic_wp_pow(p: &GaussianMixture1D, q: &GaussianMixture1D, order: u32) -> f64 {
    let sorted = |m: &GaussianMixture1D| {
        let mut v: Vec<(f64, f64)> = m.components().iter().map(|c| (c.mean, c.w)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (xs, ys) = (sorted(p), sorted(q));
    let (mut i, mut j) = (0, 0);
    let (mut rx, mut ry) = (xs[0].1, ys[0].1);
    let mut total = 0.0;
    loop {
        let mass = rx.min(ry);
        total += mass * (xs[i].0 - ys[j].0).abs().powi(order as i32);
        rx -= mass;
        ry -= mass;
        let x_done = rx <= 0.0;
        let y_done = ry <= 0.0;
        if x_done {
            i += 1;
            if i == xs.len() {
                break;
            }
            rx += xs[i].1;
        }
        if y_done {
            j += 1;
            if j == ys.len() {
                break;
            }
            ry += ys[j].1;
        }
    }
    total
}

pub fn wp_quantile_1d_with(
    p: &GaussianMixture1D,
    q: &GaussianMixture1D,
    order: u32,
    spec: &QuadratureSpec,
) -> Result<WpResult> {
    if order != 1 && order != 2 {
        return Err(Error::domain(format!("order p = {order} not in {{1, 2}}")));
    }
    spec.validate()?;
    let inv = 1.0 / order as f64;
    if p.is_atomic() && q.is_atomic() {
        return Ok(WpResult {
            value: atomic_wp_pow(p, q, order).powf(inv),
            error_estimate: 0.0,
            converged: true,
        });
    }
    let mut breaks = vec![0.0];
    breaks.extend(jump_levels(p));
    breaks.extend(jump_levels(q));
    let breaks: Vec<f64> = breaks.into_iter().filter(|z| z.is_finite()).collect();
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let r = integrate(
        |z| {
            let d = (quantile_at(p, z) - quantile_at(q, z)).abs();
            d.powi(order as i32) * phi(z)
        },
        -Z_MAX,
        Z_MAX,
        &breaks,
        spec,
    );
    let integral = r.value.max(0.0);
    let value = integral.powf(inv);
    Ok(WpResult {
        value,
        error_estimate: (integral + r.error_estimate).powf(inv) - value,
        converged: r.converged,
    })
}

/// `W_p(P, Q)` for `p ∈ {1, 2}`; fails if the quadrature does not converge.
pub fn wp_quantile_1d(p: &GaussianMixture1D, q: &GaussianMixture1D, order: u32) -> Result<f64> {
    let r = wp_quantile_1d_with(p, q, order, &default_spec())?;
    if !r.converged {
        return Err(Error::NotCertified {
            what: format!("W_{order} quantile integral"),
            error_estimate: r.error_estimate,
        });
    }
    Ok(r.value)
}

/// Closed-form `W₂` between 1-D Gaussians.
pub fn gaussian_w2(mean1: f64, var1: f64, mean2: f64, var2: f64) -> f64 {
    let ds = var1.max(0.0).sqrt() - var2.max(0.0).sqrt();
    ((mean1 - mean2).powi(2) + ds * ds).sqrt()
}
