//! Discrete-alphabet entropy continuity via Ornstein's d̄.
//!
//! Fano-type bound on entropy gaps, Lipschitz bounds for outputs of
//! memoryless two-input channels, contraction coefficients, the concave
//! envelope `F_c` of a degraded chain `X → A → B` with its inverse gap
//! function `g`, and the corner point of the additive mod-3 interference
//! channel. All values are in nats.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Channel, Pmf, TwoInputChannel};
use crate::error::{Error, Result};
use crate::infomeasures::{
    binary_entropy, capacity_1d_concave, entropy_weights, kl_weights, shannon_entropy,
};
use crate::transport::{dbar, tv_weights};

/// Fano function `F_X(x) = x ln(|X|−1) + h_b(x)`.
pub fn fano_fx(x: f64, alphabet_size: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x = {x} outside [0,1]")));
    }
    if alphabet_size < 2 {
        return Err(Error::domain(format!(
            "alphabet size must be at least 2, got {alphabet_size}"
        )));
    }
    let lead = if x > 0.0 {
        x * ((alphabet_size - 1) as f64).ln()
    } else {
        0.0
    };
    Ok(lead + binary_entropy(x))
}

/// `n · F_X(d̄(P, Q))`, which bounds `|H(P) − H(Q)|`.
pub fn entropy_gap_fano_ub(p: &Pmf, q: &Pmf) -> Result<f64> {
    let d = dbar(p, q)?;
    Ok(p.n() as f64 * fano_fx(d, p.alphabet_size())?)
}

/// `c = max ln W(y|x,a)/W(y'|x,a)`; `+∞` if some row has a zero entry.
pub fn channel_log_ratio_c(w: &TwoInputChannel) -> f64 {
    w.entries()
        .iter()
        .flatten()
        .map(|row| {
            let hi = row.iter().copied().fold(0.0, f64::max);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            if lo <= 0.0 {
                f64::INFINITY
            } else {
                (hi / lo).ln()
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbarBounds {
    pub c: f64,
    /// Bound on `|H(Y) − H(Ỹ)|`.
    pub h_bound: f64,
    /// Bound on `D(P_Y‖P_Ỹ) + D(P_Ỹ‖P_Y)`.
    pub d_bound: f64,
    /// Bound on `|I(X;Y) − I(X;Ỹ)|`.
    pub i_bound: f64,
}

/// `(c·n·d̄_Y, 2c·n·d̄_Y, 2c·n·E d̄(P_{Y|X}, P_{Ỹ|X}))`.
pub fn prop_dbar_bounds(
    w: &TwoInputChannel,
    p_y: &Pmf,
    p_y_tilde: &Pmf,
    dbar_y: f64,
    mean_conditional_dbar: f64,
) -> Result<DbarBounds> {
    p_y.same_shape(p_y_tilde)?;
    if p_y.alphabet_size() != w.y_size() {
        return Err(Error::mismatch(
            "output pmf alphabet differs from the channel's",
        ));
    }
    for (name, v) in [
        ("dbar_y", dbar_y),
        ("mean_conditional_dbar", mean_conditional_dbar),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} = {v} outside [0,1]")));
        }
    }
    let c = channel_log_ratio_c(w);
    if !c.is_finite() {
        return Err(Error::invalid(
            "channel",
            "log-ratio constant c is infinite (zero entry)",
        ));
    }
    let n = p_y.n() as f64;
    Ok(DbarBounds {
        c,
        h_bound: c * n * dbar_y,
        d_bound: 2.0 * c * n * dbar_y,
        i_bound: 2.0 * c * n * mean_conditional_dbar,
    })
}

/// `Σ_x P_X(x) d̄(P_{Y|X=x}, P_{Ỹ|X=x})` for `Y`, `Ỹ` generated by
/// `(X, A)` and `(X, Ã)`.
pub fn mean_conditional_dbar(
    w: &TwoInputChannel,
    p_x: &Pmf,
    p_a: &Pmf,
    p_a_tilde: &Pmf,
) -> Result<f64> {
    p_a.same_shape(p_a_tilde)?;
    let mut total = 0.0;
    for (xi, &px) in p_x.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        let y = w.conditional_output(xi, p_a)?;
        let yt = w.conditional_output(xi, p_a_tilde)?;
        total += px * dbar(&y, &yt)?;
    }
    Ok(total)
}

/// Dobrushin's coefficient: the largest total variation between two rows.
pub fn eta_tv(kernel: &Channel) -> f64 {
    let rows = kernel.rows();
    let mut best: f64 = 0.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            best = best.max(tv_weights(&rows[i], &rows[j]));
        }
    }
    best
}

/// `max_x η_TV(W(·|x, ·))`.
pub fn eta_tv_two_input(w: &TwoInputChannel) -> f64 {
    (0..w.x_size())
        .map(|x| eta_tv(&w.section(x)))
        .fold(0.0, f64::max)
}

/// Grid-plus-refinement estimate of the strong data-processing constant.
/// The supremum is not certified; `value` is a lower bound on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaKlEstimate {
    pub value: f64,
    pub x: usize,
    pub q0: Vec<f64>,
    pub qualifier: String,
}

/// Points with `D(Q₀‖p₀)` below this are excluded from the ratio.
const ETA_KL_MIN_DIVERGENCE: f64 = 1e-6;

/// All points `k/N` of the probability simplex in `dim` coordinates, in
/// lexicographic order of the numerators.
pub fn simplex_grid(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(dim - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(dim, resolution, &mut Vec::with_capacity(dim), &mut raw);
    let n = resolution as f64;
    raw.into_iter()
        .map(|v| v.into_iter().map(|k| k as f64 / n).collect())
        .collect()
}

fn simplex_grid_size(dim: usize, resolution: usize) -> f64 {
    // C(N + d − 1, d − 1)
    (1..dim).fold(1.0, |acc, i| acc * (resolution + i) as f64 / i as f64)
}

const MAX_GRID_POINTS: f64 = 5e6;

fn kl_ratio(section: &Channel, q0: &[f64], p0: &[f64], out_p: &[f64]) -> Option<f64> {
    let den = kl_weights(q0, p0);
    if !(den >= ETA_KL_MIN_DIVERGENCE) {
        return None;
    }
    let out_q = section.push_forward(q0).ok()?;
    Some(kl_weights(&out_q, out_p) / den)
}

/// `sup_{x, Q₀} D(Q₀W_x‖p₀W_x) / D(Q₀‖p₀)` estimated on a simplex grid,
/// then refined by a pattern search around the best grid point.
pub fn eta_kl_two_input(
    w: &TwoInputChannel,
    p0: &Pmf,
    grid_resolution: usize,
) -> Result<EtaKlEstimate> {
    if p0.n() != 1 || p0.alphabet_size() != w.a_size() {
        return Err(Error::mismatch(
            "p0 must be a single-letter pmf on the A alphabet",
        ));
    }
    if p0.probs().iter().any(|&p| p <= 0.0) {
        return Err(Error::invalid("p0", "must be strictly positive"));
    }
    if grid_resolution < 2 {
        return Err(Error::domain("grid resolution must be at least 2"));
    }
    if simplex_grid_size(w.a_size(), grid_resolution) > MAX_GRID_POINTS {
        return Err(Error::TooLarge(format!(
            "simplex grid of resolution {grid_resolution}"
        )));
    }
    let p = p0.probs();
    let grid = simplex_grid(w.a_size(), grid_resolution);
    let mut best = EtaKlEstimate {
        value: 0.0,
        x: 0,
        q0: p.to_vec(),
        qualifier: "grid lower-bound".to_string(),
    };
    for x in 0..w.x_size() {
        let section = w.section(x);
        let out_p = section.push_forward(p)?;
        let found = grid
            .par_iter()
            .map(|q| kl_ratio(&section, q, p, &out_p).unwrap_or(f64::NEG_INFINITY))
            .collect::<Vec<_>>();
        let Some((i, &r)) =
            found
                .iter()
                .enumerate()
                .fold(None, |acc: Option<(usize, &f64)>, cur| match acc {
                    Some(a) if *a.1 >= *cur.1 => Some(a),
                    _ => Some(cur),
                })
        else {
            continue;
        };
        if !r.is_finite() {
            continue;
        }
        let (q, v) = refine(
            &section,
            grid[i].clone(),
            r,
            p,
            &out_p,
            1.0 / grid_resolution as f64,
        );
        if v > best.value {
            best.value = v;
            best.x = x;
            best.q0 = q;
        }
    }
    Ok(best)
}

/// Compass search over moves `h(e_i − e_j)` inside the simplex.
fn refine(
    section: &Channel,
    mut q: Vec<f64>,
    mut value: f64,
    p0: &[f64],
    out_p: &[f64],
    h0: f64,
) -> (Vec<f64>, f64) {
    let k = q.len();
    let mut h = h0;
    while h > 1e-9 {
        let mut improved = false;
        for i in 0..k {
            for j in 0..k {
                if i == j || q[j] < h {
                    continue;
                }
                let mut cand = q.clone();
                cand[i] += h;
                cand[j] -= h;
                if let Some(r) = kl_ratio(section, &cand, p0, out_p) {
                    if r > value * (1.0 + 1e-12) {
                        let rel = (r - value) / r.abs().max(1e-300);
                        q = cand;
                        value = r;
                        improved = rel > 1e-4;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (q, value)
}

/// `√(2n·D)·ln|X|`, a one-sided bound on `H(P) − H(Q)` for product `Q`.
pub fn chang_one_sided_ub(kl_nats: f64, n: usize, alphabet_size: usize) -> Result<f64> {
    if !(kl_nats >= 0.0) {
        return Err(Error::domain(format!(
            "divergence must be non-negative, got {kl_nats}"
        )));
    }
    if n == 0 || alphabet_size == 0 {
        return Err(Error::domain("n and alphabet size must be positive"));
    }
    Ok((2.0 * n as f64 * kl_nats).sqrt() * (alphabet_size as f64).ln())
}

/// Numeric proxies for the two strictness conditions of the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Applicability {
    /// `min_{a≠a'} Σ_y min(W(y|a), W(y|a'))` over `P_{B|A}`.
    pub min_overlap: f64,
    /// `min_{x≠x'} d_TV(P_{A|X=x}, P_{A|X=x'})`.
    pub min_row_tv: f64,
    /// Output laws of distinct `a` are not mutually singular.
    pub strict1: bool,
    /// Rows of `P_{A|X}` are distinct.
    pub strict2: bool,
}

pub const STRICTNESS_MARGIN: f64 = 1e-9;

pub fn applicability(a_given_x: &Channel, b_given_a: &Channel) -> Applicability {
    let pairs = |rows: &[Vec<f64>], f: &dyn Fn(&[f64], &[f64]) -> f64| {
        let mut m = f64::INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                m = m.min(f(&rows[i], &rows[j]));
            }
        }
        m
    };
    let min_overlap = pairs(b_given_a.rows(), &|u, v| {
        u.iter().zip(v).map(|(a, b)| a.min(*b)).sum()
    });
    let min_row_tv = pairs(a_given_x.rows(), &|u, v| tv_weights(u, v));
    Applicability {
        min_overlap,
        min_row_tv,
        strict1: min_overlap > STRICTNESS_MARGIN,
        strict2: min_row_tv > STRICTNESS_MARGIN,
    }
}

/// Upper concave, nondecreasing envelope `F_c` on its knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcCurve {
    pub knots: Vec<(f64, f64)>,
    /// Largest `H(X|B)` over input laws; `F_c` is flat beyond it.
    pub t_max: f64,
    /// Bound on the error of conditional entropies from the grid, in `t`.
    pub grid_err_t: f64,
    /// Same, in `F`.
    pub grid_err_f: f64,
    pub applicability: Applicability,
}

impl FcCurve {
    /// Piecewise-linear evaluation; constant beyond the last knot.
    pub fn eval(&self, t: f64) -> f64 {
        interpolate(&self.knots, t)
    }

    /// Uniform bound on `F_c(t) − eval(t)`; envelope slopes never exceed one.
    pub fn grid_err(&self) -> f64 {
        self.grid_err_t + self.grid_err_f
    }

    /// Checks concavity, monotonicity, `F_c(0) = 0` and `F_c(t) ≤ t` on knots.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let bad = |what: &str| Err(Error::Solver(format!("F_c envelope is not {what}")));
        if self.knots.first() != Some(&(0.0, 0.0)) {
            return bad("anchored at (0,0)");
        }
        if self.knots.iter().any(|&(t, f)| f > t + tol) {
            return bad("below the diagonal");
        }
        if self
            .knots
            .windows(2)
            .any(|w| w[1].1 < w[0].1 - tol || w[1].0 <= w[0].0)
        {
            return bad("nondecreasing");
        }
        let slopes: Vec<f64> = self
            .knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        if slopes.windows(2).any(|s| s[1] > s[0] + tol) {
            return bad("concave");
        }
        Ok(())
    }
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> f64 {
    if x <= knots[0].0 {
        return knots[0].1;
    }
    for w in knots.windows(2) {
        if x <= w[1].0 {
            let s = (x - w[0].0) / (w[1].0 - w[0].0);
            return w[0].1 + s * (w[1].1 - w[0].1);
        }
    }
    knots[knots.len() - 1].1
}

/// Continuity modulus of entropy on `k` letters at total variation `tv`.
fn entropy_modulus(k: usize, tv: f64) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let tv = tv.min(1.0 - 1.0 / k as f64);
    tv * ((k - 1) as f64).ln() + binary_entropy(tv)
}

/// `H(X|A)` and `H(X|B)` for `X ~ p_x` through the chain.
fn conditional_entropies(p_x: &[f64], a_given_x: &Channel, b_given_a: &Channel) -> (f64, f64) {
    let (na, nb) = (a_given_x.output_size(), b_given_a.output_size());
    let mut joint_xa = Vec::with_capacity(p_x.len() * na);
    let mut joint_xb = Vec::with_capacity(p_x.len() * nb);
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for (x, &px) in p_x.iter().enumerate() {
        let row_a = a_given_x.row(x);
        let mut row_b = vec![0.0; nb];
        for (a, &w) in row_a.iter().enumerate() {
            let m = px * w;
            joint_xa.push(m);
            pa[a] += m;
            for (b, &v) in b_given_a.row(a).iter().enumerate() {
                row_b[b] += m * v;
            }
        }
        for (b, m) in row_b.into_iter().enumerate() {
            pb[b] += m;
            joint_xb.push(m);
        }
    }
    let h_x_a = (entropy_weights(&joint_xa) - entropy_weights(&pa)).max(0.0);
    let h_x_b = (entropy_weights(&joint_xb) - entropy_weights(&pb)).max(0.0);
    (h_x_a, h_x_b)
}

/// Upper hull of points sorted by `t`, truncated after its highest point.
fn upper_concave_nondecreasing(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.push((0.0, 0.0));
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(q.1.total_cmp(&p.1)));
    pts.dedup_by(|b, a| b.0 == a.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let top = hull
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.1 > hull[best].1 { i } else { best });
    hull.truncate(top + 1);
    hull
}

/// Sweeps `P_X` over the resolution-`grid` simplex lattice and returns the
/// upper concave, nondecreasing envelope of `(H(X|B), H(X|A))`.
pub fn fc_envelope(a_given_x: &Channel, b_given_a: &Channel, grid: usize) -> Result<FcCurve> {
    if a_given_x.output_size() != b_given_a.input_size() {
        return Err(Error::mismatch(
            "P_{A|X} outputs differ from P_{B|A} inputs",
        ));
    }
    if grid == 0 {
        return Err(Error::domain("grid must be positive"));
    }
    let nx = a_given_x.input_size();
    if simplex_grid_size(nx, grid) > MAX_GRID_POINTS {
        return Err(Error::TooLarge(format!(
            "simplex grid of resolution {grid} over {nx} letters"
        )));
    }
    let points: Vec<(f64, f64)> = simplex_grid(nx, grid)
        .par_iter()
        .map(|p| {
            let (f, t) = conditional_entropies(p, a_given_x, b_given_a);
            (t, f)
        })
        .collect();
    let t_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let knots = upper_concave_nondecreasing(points);

    // Every P_X is within this total variation of some lattice point.
    let tv = (nx - 1) as f64 / (2.0 * grid as f64);
    let (na, nb) = (a_given_x.output_size(), b_given_a.output_size());
    Ok(FcCurve {
        knots,
        t_max,
        grid_err_t: entropy_modulus(nx * nb, tv) + entropy_modulus(nb, tv),
        grid_err_f: entropy_modulus(nx * na, tv) + entropy_modulus(na, tv),
        applicability: applicability(a_given_x, b_given_a),
    })
}

/// Inverse of `t ↦ t − F_c(t)` on knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GCurve {
    pub knots: Vec<(f64, f64)>,
}

impl GCurve {
    /// Piecewise-linear; beyond the last knot `t − F_c(t)` has slope one.
    pub fn eval(&self, eps: f64) -> f64 {
        let &(e_last, g_last) = self.knots.last().expect("g has knots");
        if eps > e_last {
            return g_last + (eps - e_last);
        }
        interpolate(&self.knots, eps)
    }
}

pub fn g_from_fc(curve: &FcCurve) -> Result<GCurve> {
    let app = curve.applicability;
    if !app.strict1 {
        return Err(Error::Applicability {
            condition: "strict1".into(),
            detail: format!(
                "output laws of P_(B|A) are mutually singular (overlap {:e})",
                app.min_overlap
            ),
        });
    }
    if !app.strict2 {
        return Err(Error::Applicability {
            condition: "strict2".into(),
            detail: format!("two rows of P_(A|X) coincide (TV {:e})", app.min_row_tv),
        });
    }
    let mut knots = Vec::with_capacity(curve.knots.len());
    for &(t, f) in &curve.knots {
        let gap = t - f;
        if let Some(&(prev, _)) = knots.last() {
            if gap <= prev {
                return Err(Error::Applicability {
                    condition: "strict1/strict2".into(),
                    detail: format!(
                        "t − F_c(t) is not increasing at t = {t} (F_c(t) = t within grid error)"
                    ),
                });
            }
        }
        knots.push((gap, t));
    }
    Ok(GCurve { knots })
}

/// `H(X^n|A^n)` and `H(X^n|B^n)` for a joint law on `X^n` pushed through
/// memoryless channels.
pub fn block_conditional_entropies(
    p: &Pmf,
    a_given_x: &Channel,
    b_given_a: &Channel,
) -> Result<(f64, f64)> {
    let n = p.n();
    let ka = vec![a_given_x.clone(); n];
    let kb = vec![compose(a_given_x, b_given_a)?; n];
    let h_x = shannon_entropy(p);
    let h_a = shannon_entropy(&Channel::push_forward_product(&ka, p)?);
    let h_b = shannon_entropy(&Channel::push_forward_product(&kb, p)?);
    // H(X|A) = H(X) + H(A|X) − H(A), with H(A|X) = Σ_j H(A_j|X_j).
    let per_letter = |ch: &Channel| -> Result<f64> {
        let mut total = 0.0;
        for j in 0..n {
            let m = p.marginal(j)?;
            total += m
                .probs()
                .iter()
                .zip(ch.rows())
                .map(|(px, row)| px * entropy_weights(row))
                .sum::<f64>();
        }
        Ok(total)
    };
    let h_a_given_x = per_letter(a_given_x)?;
    let h_b_given_x = per_letter(&kb[0])?;
    Ok((
        (h_x + h_a_given_x - h_a).max(0.0),
        (h_x + h_b_given_x - h_b).max(0.0),
    ))
}

/// Channel `X → B` obtained by composing `X → A → B`.
pub fn compose(first: &Channel, second: &Channel) -> Result<Channel> {
    let rows = first
        .rows()
        .iter()
        .map(|row| second.push_forward(row))
        .collect::<Result<Vec<_>>>()?;
    Channel::new(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCornerReport {
    pub c2: f64,
    pub c1_prime: f64,
    pub q_star: f64,
    pub p3: Pmf,
    /// The concavity check failed and a grid search was used.
    pub fallback: bool,
}

/// `Q ∗ p₂` on `Z₃` with `Q = [1−q, q, 0]`.
pub fn mod3_mix(q: f64, p2: &[f64]) -> [f64; 3] {
    let qv = [1.0 - q, q, 0.0];
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        for j in 0..3 {
            *o += qv[j] * p2[(k + 3 - j) % 3];
        }
    }
    out
}

const UNIFORM_TOL: f64 = 1e-12;

/// Top corner of `Y₁ = X₁`, `Y₂ = X₁ + X₂ + Z₂ (mod 3)` with binary `X₂`
/// and `Z₂ ~ p₂`.
pub fn discrete_corner(p2: &Pmf) -> Result<DiscreteCornerReport> {
    if p2.n() != 1 || p2.alphabet_size() != 3 {
        return Err(Error::invalid(
            "p2",
            "must be a single-letter pmf on three symbols",
        ));
    }
    let p = p2.probs();
    if p.iter().all(|&v| (v - 1.0 / 3.0).abs() <= UNIFORM_TOL) {
        return Err(Error::UniformNoise {
            c2: 0.0,
            c1_prime: std::f64::consts::LN_2,
        });
    }
    if p.iter().any(|&v| v <= 0.0) {
        return Err(Error::invalid("p2", "has a zero entry, so c is infinite"));
    }
    let h2 = entropy_weights(p);
    let best = capacity_1d_concave(|q| entropy_weights(&mod3_mix(q, p)), 1e-10)?;
    let p3 = mod3_mix(best.argmax, p);
    let h3 = entropy_weights(&p3);
    Ok(DiscreteCornerReport {
        c2: h3 - h2,
        c1_prime: 3f64.ln() - h3,
        q_star: best.argmax,
        p3: Pmf::letter(p3.to_vec())?,
        fallback: best.fallback,
    })
}
