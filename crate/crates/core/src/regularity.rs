//! Regularity constants of smoothed densities and the entropy-gap bounds
//! built on them.
//!
//! A density `p` on `R^n` is `(c1, c2)`-regular when
//! `‖∇ ln p(x)‖ ≤ c1‖x‖ + c2` everywhere. All evaluators here are plain
//! formulas over precomputed moments and distances; none of them estimate
//! anything internally.

use serde::{Deserialize, Serialize};

use crate::domain::GaussianMixture1D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub c1: f64,
    pub c2: f64,
}

impl RegularityParams {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(Error::domain(format!("c1 must be positive, got {c1}")));
        }
        if !(c2 >= 0.0 && c2.is_finite()) {
            return Err(Error::domain(format!("c2 must be non-negative, got {c2}")));
        }
        Ok(RegularityParams { c1, c2 })
    }
}

/// Moments of the random vectors entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentData {
    /// `E‖U‖²`
    pub m2_u: f64,
    /// `E‖V‖²`
    pub m2_v: f64,
    /// `⟨E A, E B⟩`
    pub mean_dot: f64,
    /// `E‖B‖`
    pub norm1_b: f64,
    /// Almost-sure bound on `‖B‖`, e.g. `√(nP)`.
    pub sup_norm_b: f64,
}

impl MomentData {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m2_u", self.m2_u),
            ("m2_v", self.m2_v),
            ("norm1_b", self.norm1_b),
            ("sup_norm_b", self.sup_norm_b),
        ] {
            nonneg(name, v)?;
        }
        if !self.mean_dot.is_finite() {
            return Err(Error::invalid("mean_dot", "not finite"));
        }
        if self.norm1_b > self.sup_norm_b * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "norm1_b",
                format!(
                    "E‖B‖ = {} exceeds the almost-sure bound {}",
                    self.norm1_b, self.sup_norm_b
                ),
            ));
        }
        Ok(())
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::domain(format!(
            "{name} must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `Δ = (c1/2·√E‖U‖² + c1/2·√E‖V‖² + c2)·W₂(U, V)`.
///
/// Bounds `h(U) − h(V)` when `V` is regular, `|h(U) − h(V)|` when both are,
/// and each of the two divergences between them.
pub fn delta_ppr(reg: &RegularityParams, m2_u: f64, m2_v: f64, w2: f64) -> Result<f64> {
    nonneg("m2_u", m2_u)?;
    nonneg("m2_v", m2_v)?;
    nonneg("w2", w2)?;
    Ok((0.5 * reg.c1 * m2_u.sqrt() + 0.5 * reg.c1 * m2_v.sqrt() + reg.c2) * w2)
}

/// `D(P_U‖P_V) + D(P_V‖P_U) ≤ 2Δ` when both laws share the constants.
pub fn symmetric_kl_bound(reg: &RegularityParams, m2_u: f64, m2_v: f64, w2: f64) -> Result<f64> {
    Ok(2.0 * delta_ppr(reg, m2_u, m2_v, w2)?)
}

/// Constants of `B + Z` with `Z ~ N(0, σ²I)` independent of `B`:
/// `(3/σ², 4·E‖B‖/σ²)`.
pub fn gaussian_smoothing_regularity(sigma_sq: f64, norm1_b: f64) -> Result<RegularityParams> {
    positive("sigma_sq", sigma_sq)?;
    nonneg("norm1_b", norm1_b)?;
    RegularityParams::new(3.0 / sigma_sq, 4.0 * norm1_b / sigma_sq)
}

/// Constants of `B + W` when `W` has `reg` and `‖B‖ ≤ sup_norm_b` almost surely.
pub fn shift_regularity(reg: &RegularityParams, sup_norm_b: f64) -> Result<RegularityParams> {
    nonneg("sup_norm_b", sup_norm_b)?;
    RegularityParams::new(reg.c1, reg.c2 + reg.c1 * sup_norm_b)
}

/// `|h(X+Z) − h(X̃+Z)| ≤ (1/σ²)(3√(n(σ²+P)) + 4√(nP))·W₂(X, X̃)` for
/// `E‖X‖², E‖X̃‖² ≤ nP` and `Z ~ N(0, σ²I)`.
pub fn w2lip_delta(sigma_sq: f64, p: f64, n: usize, w2: f64) -> Result<f64> {
    positive("sigma_sq", sigma_sq)?;
    nonneg("P", p)?;
    nonneg("w2", w2)?;
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let n = n as f64;
    Ok((3.0 * (n * (sigma_sq + p)).sqrt() + 4.0 * (n * p).sqrt()) * w2 / sigma_sq)
}

/// `h(U) − h(B + G) ≤ (E‖U‖² − E‖V‖² + 2·sup‖B‖·W₁(U, V)) / (2σ_G²)` with
/// `V = B + G`, `G ~ N(0, σ_G²I)`. The value may be negative.
pub fn best_bound(sigma_g_sq: f64, sup_norm_b: f64, m2_u: f64, m2_v: f64, w1: f64) -> Result<f64> {
    positive("sigma_g_sq", sigma_g_sq)?;
    nonneg("sup_norm_b", sup_norm_b)?;
    nonneg("m2_u", m2_u)?;
    nonneg("m2_v", m2_v)?;
    nonneg("w1", w1)?;
    Ok((m2_u - m2_v + 2.0 * sup_norm_b * w1) / (2.0 * sigma_g_sq))
}

/// Inputs of [`cor_best_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorBestInputs {
    pub sigma_g_sq: f64,
    pub sigma_z_sq: f64,
    /// Gain in `[0, 1]` of the shared noise.
    pub c: f64,
    /// `‖B‖ ≤ sup_norm_b` almost surely; `sup_norm_b²` plays `nP`.
    pub sup_norm_b: f64,
    /// `E‖A‖²`
    pub m2_a: f64,
    /// `⟨E A, E B⟩`
    pub mean_dot: f64,
    /// `E‖G‖²`
    pub m2_g: f64,
    /// Divergence of the smoothed law from its Gaussian reference, in nats.
    pub kl_smoothed: f64,
}

/// `(m2_a + 2⟨EA,EB⟩ − m2_g) / (2(σ_G²+σ_Z²))
///   + √(2·sup²·(σ_G² + c²σ_Z²)) / (σ_G²+σ_Z²) · √D`.
pub fn cor_best_bound(x: &CorBestInputs) -> Result<f64> {
    positive("sigma_g_sq", x.sigma_g_sq)?;
    positive("sigma_z_sq", x.sigma_z_sq)?;
    if !(0.0..=1.0).contains(&x.c) {
        return Err(Error::domain(format!("c must lie in [0,1], got {}", x.c)));
    }
    nonneg("sup_norm_b", x.sup_norm_b)?;
    nonneg("m2_a", x.m2_a)?;
    nonneg("m2_g", x.m2_g)?;
    nonneg("kl_smoothed", x.kl_smoothed)?;
    if !x.mean_dot.is_finite() {
        return Err(Error::domain("mean_dot must be finite"));
    }
    let s = x.sigma_g_sq + x.sigma_z_sq;
    let moment = (x.m2_a + 2.0 * x.mean_dot - x.m2_g) / (2.0 * s);
    let transport =
        (2.0 * x.sup_norm_b.powi(2) * (x.sigma_g_sq + x.c * x.c * x.sigma_z_sq)).sqrt() / s;
    Ok(moment + transport * x.kl_smoothed.sqrt())
}

/// Largest excess `|(ln p)'(x)| − (c1|x| + c2)` over `points` equally spaced
/// nodes of `[−half_width, half_width]`. Non-positive means the constants
/// hold on the grid.
pub fn gradient_excess(
    density: &GaussianMixture1D,
    reg: &RegularityParams,
    half_width: f64,
    points: usize,
) -> Result<f64> {
    if density.has_atoms() {
        return Err(Error::domain("density has an atom"));
    }
    if points < 2 {
        return Err(Error::domain("need at least two grid points"));
    }
    positive("half_width", half_width)?;
    let step = 2.0 * half_width / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = -half_width + i as f64 * step;
            density.ln_pdf_derivative(x).abs() - (reg.c1 * x.abs() + reg.c2)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}
