//! Two-user Gaussian interference channel
//!
//! ```text
//! Y₁ = X₁ + b·X₂ + Z₁
//! Y₂ = a·X₁ + X₂ + Z₂
//! ```
//!
//! with unit-variance noise. Provides the outer bound on `R₁` near the
//! top corner, the corner-point tables, the two-MAC inner region, the
//! sum-rate bound for `b ≥ 1`, and a one-parameter Han–Kobayashi inner curve.
//! Rates are in nats.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{CurveKind, RegionCurve};

/// Slack allowed when checking `r2 ∈ [C̃₂, C₂]`, to absorb rounding in the
/// caller's computation of the endpoints. Values inside the slack are
/// clamped onto the interval.
pub const R2_ENDPOINT_TOL: f64 = 1e-12;

/// Absolute tolerance of [`MacRegion::contains`].
pub const MAC_TOL: f64 = 1e-13;

fn half_ln1p(x: f64) -> f64 {
    0.5 * x.ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    #[default]
    AlmostSure,
    Average,
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as" | "almost_sure" => Ok(Constraint::AlmostSure),
            "avg" | "average" => Ok(Constraint::Average),
            other => Err(Error::domain(format!(
                "unknown power constraint {other:?} (expected as or avg)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GicParams {
    pub a: f64,
    pub b: f64,
    pub p1: f64,
    pub p2: f64,
    pub constraint: Constraint,
}

impl GicParams {
    pub fn new(a: f64, b: f64, p1: f64, p2: f64, constraint: Constraint) -> Result<Self> {
        check_gains(a, b, p1, p2)?;
        Ok(GicParams {
            a,
            b,
            p1,
            p2,
            constraint,
        })
    }

    pub fn c1(&self) -> f64 {
        half_ln1p(self.p1)
    }

    pub fn c2(&self) -> f64 {
        half_ln1p(self.p2)
    }

    /// `½ ln(1 + P₂/(1 + a²P₁))`, user 2 treating user 1 as noise.
    pub fn c2_tilde(&self) -> f64 {
        half_ln1p(self.p2 / (1.0 + self.a * self.a * self.p1))
    }

    fn require_theorem_gain(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(Error::domain(format!(
                "a must lie in (0,1], got {}",
                self.a
            )));
        }
        Ok(())
    }
}

fn check_gains(a: f64, b: f64, p1: f64, p2: f64) -> Result<()> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    for (name, v) in [("p1", p1), ("p2", p2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
}

/// Which term of the minimum is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `A − a⁻² + 1`, which coincides with the Sato/Kramer bound.
    SatoKramer,
    /// The transport-based term involving `δ`.
    New,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterBound {
    pub r1: f64,
    pub r2: f64,
    pub a_term: f64,
    pub delta: f64,
    pub sato_kramer: f64,
    pub new: f64,
    /// Ties go to [`Branch::New`].
    pub branch: Branch,
}

fn clamp_r2(params: &GicParams, r2: f64) -> Result<f64> {
    let (lo, hi) = (params.c2_tilde(), params.c2());
    if !(r2 >= lo - R2_ENDPOINT_TOL && r2 <= hi + R2_ENDPOINT_TOL) {
        return Err(Error::domain(format!(
            "r2 = {r2} outside [C̃2, C2] = [{lo}, {hi}]"
        )));
    }
    Ok(r2.clamp(lo, hi))
}

/// `δ` (almost-sure power) or `δ'` (average power) at `r2`.
pub fn delta(params: &GicParams, r2: f64) -> Result<f64> {
    params.require_theorem_gain()?;
    let r2 = clamp_r2(params, r2)?;
    let gap = (params.c2() - r2).max(0.0);
    let (a, p1, p2) = (params.a, params.p1, params.p2);
    Ok(match params.constraint {
        Constraint::AlmostSure => gap + a * (2.0 * p1 * gap / (1.0 + p2)).sqrt(),
        Constraint::Average => {
            gap + (2.0 * gap / (1.0 + p2)).sqrt()
                * (3.0 * (1.0 + a * a * p1 + p2).sqrt() + 4.0 * a * p1.sqrt())
        }
    })
}

/// Full evaluation of the outer bound on `R₁` at `r2 ∈ [C̃₂, C₂]`.
pub fn outer_bound(params: &GicParams, r2: f64) -> Result<OuterBound> {
    params.require_theorem_gain()?;
    let r2 = clamp_r2(params, r2)?;
    let (a, p1, p2) = (params.a, params.p1, params.p2);
    let a2 = a * a;
    let a_term = (p1 + (1.0 + p2) / a2) * (-2.0 * r2).exp();
    let d = delta(params, r2)?;
    // Both terms are rewritten through the gap g = C₂ − r₂, using
    // (1 + P₂)e^{−2r₂} = e^{2g}, so that nothing of size a⁻² cancels.
    let gap = (params.c2() - r2).max(0.0);
    let grow = (2.0 * gap).exp();
    let sato = 0.5 * (p1 * grow / (1.0 + p2) + (2.0 * gap).exp_m1() / a2).ln_1p();
    // A((1 + P₂)(1 − (1 − a²)e^{−2δ}) − a²)/P₂, divided through by a².
    let e = (-2.0 * d).exp();
    let inner = (1.0 + p2) * (-(-2.0 * d).exp_m1()) / a2 + (1.0 + p2) * e - 1.0;
    let new = 0.5 * ((a2 * p1 + 1.0 + p2) / (1.0 + p2) * grow / p2 * inner).ln();
    let (r1, branch) = if new <= sato {
        (new, Branch::New)
    } else {
        (sato, Branch::SatoKramer)
    };
    Ok(OuterBound {
        r1,
        r2,
        a_term,
        delta: d,
        sato_kramer: sato,
        new,
        branch,
    })
}

pub fn outer_bound_r1(params: &GicParams, r2: f64) -> Result<f64> {
    Ok(outer_bound(params, r2)?.r1)
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(Error::domain(format!(
            "grid must be at least 2, got {grid}"
        )));
    }
    Ok(())
}

/// `grid` points with `r2` uniform on `[C̃₂, C₂]`, ending exactly at `C₂`.
pub fn outer_curve(params: &GicParams, grid: usize) -> Result<RegionCurve> {
    check_grid(grid)?;
    params.require_theorem_gain()?;
    let (lo, hi) = (params.c2_tilde(), params.c2());
    let points = (0..grid)
        .map(|i| {
            let r2 = if i + 1 == grid {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (grid - 1) as f64
            };
            Ok((outer_bound_r1(params, r2)?, r2))
        })
        .collect::<Result<_>>()?;
    Ok(RegionCurve {
        kind: CurveKind::Outer,
        points,
    })
}

/// Indices `i` where the sampled outer curve increases from `i` to `i+1`.
pub fn monotonicity_violations(curve: &RegionCurve, tol: f64) -> Vec<usize> {
    curve
        .points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].0 > w[0].0 + tol)
        .map(|(i, _)| i)
        .collect()
}

/// Han–Kobayashi rates for the Z-channel with `X₁ = U + V`, where `s` is
/// the power of the common part.
pub fn hk_point(params: &GicParams, s: f64) -> Result<RatePoint> {
    let (a2, p1, p2) = (params.a * params.a, params.p1, params.p2);
    if !(0.0..=p1).contains(&s) {
        return Err(Error::domain(format!("s = {s} outside [0, P1]")));
    }
    let private = p1 - s;
    Ok(RatePoint {
        r1: half_ln1p(private) + half_ln1p(a2 * s / (1.0 + a2 * private + p2)),
        r2: half_ln1p(p2 / (1.0 + a2 * private)),
    })
}

/// `grid` points with `s` uniform on `[0, P₁]`.
pub fn hk_inner_curve(params: &GicParams, grid: usize) -> Result<RegionCurve> {
    check_grid(grid)?;
    let points = (0..grid)
        .map(|i| {
            let s = if i + 1 == grid {
                params.p1
            } else {
                params.p1 * i as f64 / (grid - 1) as f64
            };
            hk_point(params, s).map(|p| (p.r1, p.r2))
        })
        .collect::<Result<_>>()?;
    Ok(RegionCurve {
        kind: CurveKind::Inner,
        points,
    })
}

/// Outer curve followed by the inner curve, as written to region files.
pub fn region_curves(params: &GicParams, grid: usize) -> Result<Vec<RegionCurve>> {
    Ok(vec![
        outer_curve(params, grid)?,
        hk_inner_curve(params, grid)?,
    ])
}

/// Rate pairs decodable at both receivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacRegion {
    pub r1_max: f64,
    pub r2_max: f64,
    pub sum_max: f64,
}

impl MacRegion {
    pub fn contains(&self, r1: f64, r2: f64) -> bool {
        r1 >= -MAC_TOL
            && r2 >= -MAC_TOL
            && r1 <= self.r1_max + MAC_TOL
            && r2 <= self.r2_max + MAC_TOL
            && r1 + r2 <= self.sum_max + MAC_TOL
    }
}

pub fn mac_intersection(params: &GicParams) -> MacRegion {
    let (a2, b2, p1, p2) = (
        params.a * params.a,
        params.b * params.b,
        params.p1,
        params.p2,
    );
    MacRegion {
        r1_max: half_ln1p(p1 * a2.min(1.0)),
        r2_max: half_ln1p(p2 * b2.min(1.0)),
        sum_max: half_ln1p((p1 + b2 * p2).min(p2 + a2 * p1)),
    }
}

/// `R₁ + R₂ ≤ ½ ln(1 + b²P₂ + P₁)`, valid for `b ≥ 1`.
pub fn sum_rate_bound(params: &GicParams) -> Result<f64> {
    if !(params.b >= 1.0) {
        return Err(Error::domain(format!(
            "sum-rate bound needs b >= 1, got {}",
            params.b
        )));
    }
    Ok(half_ln1p(params.b * params.b * params.p2 + params.p1))
}

fn check_corner_args(a: f64, b: f64, p1: f64, p2: f64) -> Result<()> {
    check_gains(a, b, p1, p2)?;
    if a > 1.0 {
        return Err(Error::domain(format!("a must lie in [0,1], got {a}")));
    }
    Ok(())
}

/// `C₁'(a, b) = max{R₁ : (R₁, C₂) achievable}` and the case that applied.
pub fn corner_c1_prime(a: f64, b: f64, p1: f64, p2: f64) -> Result<(f64, &'static str)> {
    check_corner_args(a, b, p1, p2)?;
    Ok(if a > 0.0 {
        (half_ln1p(a * a * p1 / (1.0 + p2)), "0<a<=1")
    } else if b == 0.0 || b >= (1.0 + p1).sqrt() {
        (half_ln1p(p1), "a=0,b=0|b>=sqrt(1+P1)")
    } else if b > 1.0 {
        (
            half_ln1p((p1 + (b * b - 1.0) * p2) / (1.0 + p2)),
            "a=0,1<b<sqrt(1+P1)",
        )
    } else {
        (half_ln1p(p1 / (1.0 + b * b * p2)), "a=0,0<b<=1")
    })
}

/// `C₂'(a, b) = max{R₂ : (C₁, R₂) achievable}` and the case that applied.
pub fn corner_c2_prime(a: f64, b: f64, p1: f64, p2: f64) -> Result<(f64, &'static str)> {
    check_corner_args(a, b, p1, p2)?;
    let threshold = ((1.0 + p1) / (1.0 + a * a * p1)).sqrt();
    Ok(if b == 0.0 || b >= threshold {
        (
            half_ln1p(p2 / (1.0 + a * a * p1)),
            "b=0|b>=sqrt((1+P1)/(1+a^2P1))",
        )
    } else if b > 1.0 {
        (
            half_ln1p(b * b * p2 / (1.0 + p1)),
            "1<b<sqrt((1+P1)/(1+a^2P1))",
        )
    } else {
        (half_ln1p(b * b * p2 / (1.0 + p1)), "0<b<=1")
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerReport {
    pub c1: f64,
    pub c2: f64,
    pub c2_tilde: f64,
    pub c1_prime: f64,
    pub c2_prime: f64,
    pub case_label: String,
}

pub fn corner_report(params: &GicParams) -> Result<CornerReport> {
    let (c1p, l1) = corner_c1_prime(params.a, params.b, params.p1, params.p2)?;
    let (c2p, l2) = corner_c2_prime(params.a, params.b, params.p1, params.p2)?;
    Ok(CornerReport {
        c1: params.c1(),
        c2: params.c2(),
        c2_tilde: params.c2_tilde(),
        c1_prime: c1p,
        c2_prime: c2p,
        case_label: format!("C1': {l1}; C2': {l2}"),
    })
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::SatoKramer => "sato_kramer",
            Branch::New => "new",
        })
    }
}
