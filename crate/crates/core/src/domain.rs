//! Domain types shared by every other module: log bases, pmfs over product
//! alphabets, stochastic matrices, 1-D Gaussian mixtures and couplings.
//!
//! All quantities are stored in nats. Bits only appear at presentation time
//! through [`LogBase::from_nats`].

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Tolerance on `|Σp − 1|` accepted by every constructor.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Entries below this (after renormalization) are clamped to zero.
pub const CLAMP_BELOW: f64 = 1e-15;

/// Largest flat product space we are willing to store.
pub const MAX_PRODUCT_SIZE: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    Nats,
    #[default]
    Bits,
}

impl LogBase {
    pub fn from_nats(self, value: f64) -> f64 {
        match self {
            LogBase::Nats => value,
            LogBase::Bits => value / std::f64::consts::LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Nats => "nats",
            LogBase::Bits => "bits",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats" => Ok(LogBase::Nats),
            "bits" => Ok(LogBase::Bits),
            other => Err(Error::domain(format!("unknown log base {other:?}"))),
        }
    }
}

/// `alphabet_size^n`, or an error if it exceeds [`MAX_PRODUCT_SIZE`].
pub fn product_size(alphabet_size: usize, n: usize) -> Result<usize> {
    let mut size: usize = 1;
    for _ in 0..n {
        size = size
            .checked_mul(alphabet_size)
            .filter(|&s| s <= MAX_PRODUCT_SIZE)
            .ok_or_else(|| {
                Error::TooLarge(format!(
                    "{alphabet_size}^{n} exceeds {MAX_PRODUCT_SIZE} outcomes"
                ))
            })?;
    }
    Ok(size)
}

/// Base-`alphabet_size` positional index of a string; letter 0 is the most
/// significant digit.
pub fn index_encode(letters: &[usize], alphabet_size: usize) -> Result<usize> {
    let mut idx = 0usize;
    for (pos, &l) in letters.iter().enumerate() {
        if l >= alphabet_size {
            return Err(Error::domain(format!(
                "letter {l} at position {pos} outside alphabet of size {alphabet_size}"
            )));
        }
        idx = idx * alphabet_size + l;
    }
    Ok(idx)
}

pub fn index_decode(mut index: usize, alphabet_size: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % alphabet_size;
        index /= alphabet_size;
    }
    out
}

pub fn hamming_distance(x: &[usize], y: &[usize]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::mismatch(format!(
            "strings of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(x.iter().zip(y).filter(|(a, b)| a != b).count())
}

fn check_simplex(field: &str, probs: &[f64]) -> Result<()> {
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite()) {
        return Err(Error::invalid(
            field,
            format!("non-finite entry {p} at {i}"),
        ));
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| **p < 0.0) {
        return Err(Error::invalid(field, format!("negative entry {p} at {i}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::invalid(
            field,
            format!("not normalized (sum = {sum})"),
        ));
    }
    Ok(())
}

/// Renormalize, clamp tiny entries to zero, renormalize again.
fn tidy(mut probs: Vec<f64>) -> Vec<f64> {
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    if probs.iter().any(|&p| p > 0.0 && p < CLAMP_BELOW) {
        probs
            .iter_mut()
            .filter(|p| **p < CLAMP_BELOW)
            .for_each(|p| *p = 0.0);
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    probs
}

/// A pmf on `X^n`, stored flat in base-|X| positional order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    alphabet_size: usize,
    n: usize,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct PmfRepr {
    alphabet_size: usize,
    n: usize,
    probs: Vec<f64>,
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PmfRepr::deserialize(d)?;
        Pmf::new(r.alphabet_size, r.n, r.probs).map_err(serde::de::Error::custom)
    }
}

impl Pmf {
    pub fn new(alphabet_size: usize, n: usize, probs: Vec<f64>) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::invalid("alphabet_size", "must be positive"));
        }
        if n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        let size = product_size(alphabet_size, n)?;
        if probs.len() != size {
            return Err(Error::invalid(
                "probs",
                format!("expected {size} entries, got {}", probs.len()),
            ));
        }
        check_simplex("probs", &probs)?;
        Ok(Pmf {
            alphabet_size,
            n,
            probs: tidy(probs),
        })
    }

    /// Single-letter pmf (n = 1).
    pub fn letter(probs: Vec<f64>) -> Result<Self> {
        let k = probs.len();
        Pmf::new(k, 1, probs)
    }

    /// Normalizes non-negative weights into a pmf.
    pub fn from_weights(alphabet_size: usize, n: usize, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::invalid("weights", format!("total mass {sum}")));
        }
        Pmf::new(
            alphabet_size,
            n,
            weights.into_iter().map(|w| w / sum).collect(),
        )
    }

    pub fn uniform(alphabet_size: usize, n: usize) -> Result<Self> {
        let size = product_size(alphabet_size, n)?;
        Pmf::new(alphabet_size, n, vec![1.0 / size as f64; size])
    }

    pub fn point_mass(alphabet_size: usize, n: usize, index: usize) -> Result<Self> {
        let size = product_size(alphabet_size, n)?;
        if index >= size {
            return Err(Error::domain(format!(
                "index {index} outside {size} outcomes"
            )));
        }
        let mut probs = vec![0.0; size];
        probs[index] = 1.0;
        Pmf::new(alphabet_size, n, probs)
    }

    /// Product of single-letter pmfs over a common alphabet.
    pub fn product(letters: &[Pmf]) -> Result<Self> {
        let first = letters
            .first()
            .ok_or_else(|| Error::domain("product of zero letters"))?;
        let k = first.alphabet_size;
        if letters.iter().any(|p| p.n != 1 || p.alphabet_size != k) {
            return Err(Error::mismatch(
                "product factors must share one single-letter alphabet",
            ));
        }
        let n = letters.len();
        let size = product_size(k, n)?;
        let probs = (0..size)
            .map(|idx| {
                index_decode(idx, k, n)
                    .iter()
                    .zip(letters)
                    .map(|(&l, p)| p.probs[l])
                    .product()
            })
            .collect();
        Pmf::from_weights(k, n, probs)
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal of coordinate `j` as a single-letter pmf.
    pub fn marginal(&self, j: usize) -> Result<Pmf> {
        if j >= self.n {
            return Err(Error::domain(format!(
                "coordinate {j} outside block length {}",
                self.n
            )));
        }
        let mut out = vec![0.0; self.alphabet_size];
        for (idx, p) in self.probs.iter().enumerate() {
            out[index_decode(idx, self.alphabet_size, self.n)[j]] += p;
        }
        Pmf::from_weights(self.alphabet_size, 1, out)
    }

    pub(crate) fn same_shape(&self, other: &Pmf) -> Result<()> {
        if self.alphabet_size != other.alphabet_size || self.n != other.n {
            return Err(Error::mismatch(format!(
                "pmf over {}^{} vs {}^{}",
                self.alphabet_size, self.n, other.alphabet_size, other.n
            )));
        }
        Ok(())
    }
}

/// Stochastic matrix `rows[x][y] = P(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    input_size: usize,
    output_size: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ChannelRepr {
    input_size: usize,
    output_size: usize,
    rows: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ChannelRepr::deserialize(d)?;
        let ch = Channel::new(r.rows).map_err(serde::de::Error::custom)?;
        if ch.input_size != r.input_size || ch.output_size != r.output_size {
            return Err(serde::de::Error::custom(format!(
                "declared {}x{} channel but rows are {}x{}",
                r.input_size, r.output_size, ch.input_size, ch.output_size
            )));
        }
        Ok(ch)
    }
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let input_size = rows.len();
        if input_size == 0 {
            return Err(Error::invalid("rows", "channel needs at least one input"));
        }
        let output_size = rows[0].len();
        if output_size == 0 {
            return Err(Error::invalid("rows", "channel needs at least one output"));
        }
        let mut tidied = Vec::with_capacity(input_size);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::invalid(
                    format!("rows[{x}]"),
                    format!("length {} differs from {output_size}", row.len()),
                ));
            }
            check_simplex(&format!("rows[{x}]"), &row)?;
            tidied.push(tidy(row));
        }
        Ok(Channel {
            input_size,
            output_size,
            rows: tidied,
        })
    }

    pub fn identity(size: usize) -> Result<Self> {
        Channel::new(
            (0..size)
                .map(|i| (0..size).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn bsc(delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::domain(format!("crossover {delta} outside [0,1]")));
        }
        Channel::new(vec![vec![1.0 - delta, delta], vec![delta, 1.0 - delta]])
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    /// Output law `Σ_x p(x) W(·|x)`.
    pub fn push_forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_size {
            return Err(Error::mismatch(format!(
                "input pmf of size {} into channel with {} inputs",
                input.len(),
                self.input_size
            )));
        }
        let mut out = vec![0.0; self.output_size];
        for (px, row) in input.iter().zip(&self.rows) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += px * w;
            }
        }
        Ok(out)
    }

    /// Memoryless extension `⊗_j kernels[j]` acting on a pmf over `X^n`.
    pub fn push_forward_product(kernels: &[Channel], input: &Pmf) -> Result<Pmf> {
        let n = kernels.len();
        if n != input.n() {
            return Err(Error::mismatch(format!(
                "{n} kernels for block length {}",
                input.n()
            )));
        }
        let k_in = input.alphabet_size();
        if kernels.iter().any(|k| k.input_size != k_in) {
            return Err(Error::mismatch(
                "kernel input alphabet differs from pmf alphabet",
            ));
        }
        let k_out = kernels[0].output_size;
        if kernels.iter().any(|k| k.output_size != k_out) {
            return Err(Error::mismatch("kernels disagree on output alphabet"));
        }
        let out_size = product_size(k_out, n)?;
        let mut out = vec![0.0; out_size];
        for (xi, &px) in input.probs().iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            let x = index_decode(xi, k_in, n);
            for (yi, o) in out.iter_mut().enumerate() {
                let y = index_decode(yi, k_out, n);
                let w: f64 = (0..n).map(|j| kernels[j].rows[x[j]][y[j]]).product();
                *o += px * w;
            }
        }
        Pmf::from_weights(k_out, n, out)
    }
}

/// Per-letter two-input channel `W(y|x,a)`, stored `[x][a][y]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoInputChannel {
    x_size: usize,
    a_size: usize,
    y_size: usize,
    entries: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct TwoInputRepr {
    x_size: usize,
    a_size: usize,
    y_size: usize,
    entries: Vec<Vec<Vec<f64>>>,
}

impl<'de> Deserialize<'de> for TwoInputChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TwoInputRepr::deserialize(d)?;
        let w = TwoInputChannel::new(r.entries).map_err(serde::de::Error::custom)?;
        if (w.x_size, w.a_size, w.y_size) != (r.x_size, r.a_size, r.y_size) {
            return Err(serde::de::Error::custom(format!(
                "declared sizes ({}, {}, {}) disagree with entries ({}, {}, {})",
                r.x_size, r.a_size, r.y_size, w.x_size, w.a_size, w.y_size
            )));
        }
        Ok(w)
    }
}

impl TwoInputChannel {
    pub fn new(entries: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let x_size = entries.len();
        let a_size = entries.first().map_or(0, Vec::len);
        let y_size = entries.first().and_then(|e| e.first()).map_or(0, Vec::len);
        if x_size == 0 || a_size == 0 || y_size == 0 {
            return Err(Error::invalid(
                "entries",
                "all alphabet sizes must be positive",
            ));
        }
        let mut tidied = Vec::with_capacity(x_size);
        for (x, block) in entries.into_iter().enumerate() {
            if block.len() != a_size {
                return Err(Error::invalid(
                    format!("entries[{x}]"),
                    "ragged a dimension",
                ));
            }
            let mut rows = Vec::with_capacity(a_size);
            for (a, row) in block.into_iter().enumerate() {
                let field = format!("entries[{x}][{a}]");
                if row.len() != y_size {
                    return Err(Error::invalid(field, "ragged y dimension"));
                }
                check_simplex(&field, &row)?;
                rows.push(tidy(row));
            }
            tidied.push(rows);
        }
        Ok(TwoInputChannel {
            x_size,
            a_size,
            y_size,
            entries: tidied,
        })
    }

    /// `W(y|x,a) = P_noise(y − x − a mod m)`; requires all alphabets of size m.
    pub fn additive_mod(m: usize, noise: &[f64]) -> Result<Self> {
        if noise.len() != m {
            return Err(Error::mismatch("noise pmf size differs from modulus"));
        }
        let entries = (0..m)
            .map(|x| {
                (0..m)
                    .map(|a| (0..m).map(|y| noise[(y + 2 * m - x - a) % m]).collect())
                    .collect()
            })
            .collect();
        TwoInputChannel::new(entries)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn a_size(&self) -> usize {
        self.a_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn entries(&self) -> &[Vec<Vec<f64>>] {
        &self.entries
    }

    pub fn row(&self, x: usize, a: usize) -> &[f64] {
        &self.entries[x][a]
    }

    /// The a-indexed channel obtained by fixing the first input to `x`.
    pub fn section(&self, x: usize) -> Channel {
        Channel {
            input_size: self.a_size,
            output_size: self.y_size,
            rows: self.entries[x].clone(),
        }
    }

    /// Law of `Y^n` generated by independent `X^n ~ px`, `A^n ~ pa`.
    pub fn output_law(&self, px: &Pmf, pa: &Pmf) -> Result<Pmf> {
        let n = px.n();
        if pa.n() != n || px.alphabet_size() != self.x_size || pa.alphabet_size() != self.a_size {
            return Err(Error::mismatch(
                "input pmfs do not match the channel alphabets",
            ));
        }
        let mut out = vec![0.0; product_size(self.y_size, n)?];
        for (xi, &p) in px.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let cond = self.conditional_output(xi, pa)?;
            for (o, c) in out.iter_mut().zip(cond.probs()) {
                *o += p * c;
            }
        }
        Pmf::from_weights(self.y_size, n, out)
    }

    /// Law of `Y^n` given `X^n = x` (flat index), with `A^n ~ pa`.
    pub fn conditional_output(&self, x_index: usize, pa: &Pmf) -> Result<Pmf> {
        let n = pa.n();
        let x = index_decode(x_index, self.x_size, n);
        let kernels: Vec<Channel> = x.iter().map(|&xj| self.section(xj)).collect();
        Channel::push_forward_product(&kernels, pa)
    }
}

/// One weighted component of a 1-D Gaussian mixture; `var == 0` is an atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub w: f64,
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianMixture1D {
    components: Vec<Component>,
}

#[derive(Deserialize)]
struct MixtureRepr {
    components: Vec<Component>,
}

impl<'de> Deserialize<'de> for GaussianMixture1D {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MixtureRepr::deserialize(d)?;
        GaussianMixture1D::new(r.components).map_err(serde::de::Error::custom)
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `P(N(0,1) ≤ z)`, accurate in the lower tail.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl GaussianMixture1D {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("components", "mixture needs a component"));
        }
        for (i, c) in components.iter().enumerate() {
            let field = format!("components[{i}]");
            if !c.w.is_finite() || c.w < 0.0 {
                return Err(Error::invalid(field, format!("weight {}", c.w)));
            }
            if !c.mean.is_finite() {
                return Err(Error::invalid(field, format!("mean {}", c.mean)));
            }
            if !c.var.is_finite() || c.var < 0.0 {
                return Err(Error::invalid(field, format!("variance {}", c.var)));
            }
        }
        let sum: f64 = components.iter().map(|c| c.w).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(
                "components",
                format!("weights not normalized (sum = {sum})"),
            ));
        }
        let components = components
            .into_iter()
            .filter(|c| c.w > 0.0)
            .map(|c| Component { w: c.w / sum, ..c })
            .collect();
        Ok(GaussianMixture1D { components })
    }

    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        GaussianMixture1D::new(vec![Component { w: 1.0, mean, var }])
    }

    /// Mixture of atoms at `points` with the given (normalized) weights.
    pub fn atoms(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::mismatch("atom points and weights differ in length"));
        }
        GaussianMixture1D::new(
            points
                .iter()
                .zip(weights)
                .map(|(&mean, &w)| Component { w, mean, var: 0.0 })
                .collect(),
        )
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn has_atoms(&self) -> bool {
        self.components.iter().any(|c| c.var == 0.0)
    }

    pub fn is_atomic(&self) -> bool {
        self.components.iter().all(|c| c.var == 0.0)
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.w * c.mean).sum()
    }

    /// `Σ w (μ² + σ²)`.
    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.w * (c.mean * c.mean + c.var))
            .sum()
    }

    /// `E|X|`, using the folded-normal mean for each component.
    pub fn abs_first_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                if c.var == 0.0 {
                    c.w * c.mean.abs()
                } else {
                    let s = c.var.sqrt();
                    let folded = s
                        * (2.0 / std::f64::consts::PI).sqrt()
                        * (-c.mean * c.mean / (2.0 * c.var)).exp()
                        + c.mean * (1.0 - 2.0 * std_normal_cdf(-c.mean / s));
                    c.w * folded
                }
            })
            .sum()
    }

    pub fn max_abs_mean(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.mean.abs())
            .fold(0.0, f64::max)
    }

    pub fn mean_range(&self) -> (f64, f64) {
        self.components
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.mean), hi.max(c.mean))
            })
    }

    pub fn max_std(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.var.sqrt())
            .fold(0.0, f64::max)
    }

    pub fn min_var(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.var)
            .fold(f64::INFINITY, f64::min)
    }

    /// Exact convolution with `N(0, sigma_sq)`.
    pub fn convolve(&self, sigma_sq: f64) -> Self {
        GaussianMixture1D {
            components: self
                .components
                .iter()
                .map(|c| Component {
                    var: c.var + sigma_sq,
                    ..*c
                })
                .collect(),
        }
    }

    /// Law of `X + Y` for independent mixtures.
    pub fn sum_independent(&self, other: &Self) -> Self {
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for a in &self.components {
            for b in &other.components {
                components.push(Component {
                    w: a.w * b.w,
                    mean: a.mean + b.mean,
                    var: a.var + b.var,
                });
            }
        }
        GaussianMixture1D { components }
    }

    /// Law of `c·X`.
    pub fn scale(&self, c: f64) -> Self {
        GaussianMixture1D {
            components: self
                .components
                .iter()
                .map(|k| Component {
                    w: k.w,
                    mean: c * k.mean,
                    var: c * c * k.var,
                })
                .collect(),
        }
    }

    /// `ln p(x)` of the absolutely continuous part, factoring out the
    /// largest exponent. Atoms contribute nothing.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let mut terms = Vec::with_capacity(self.components.len());
        let mut max = f64::NEG_INFINITY;
        for c in &self.components {
            if c.var == 0.0 {
                continue;
            }
            let d = x - c.mean;
            let t = c.w.ln() - 0.5 * c.var.ln() - LN_SQRT_2PI - d * d / (2.0 * c.var);
            max = max.max(t);
            terms.push(t);
        }
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `(ln p)'(x)` computed from posterior component responsibilities.
    pub fn ln_pdf_derivative(&self, x: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let logs: Vec<(f64, f64)> = self
            .components
            .iter()
            .filter(|c| c.var > 0.0)
            .map(|c| {
                let d = x - c.mean;
                let t = c.w.ln() - 0.5 * c.var.ln() - d * d / (2.0 * c.var);
                max = max.max(t);
                (t, -d / c.var)
            })
            .collect();
        let (num, den) = logs.iter().fold((0.0, 0.0), |(num, den), &(t, g)| {
            let r = (t - max).exp();
            (num + r * g, den + r)
        });
        num / den
    }

    /// `P(X ≤ x)`; atoms count as closed on the left.
    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                c.w * if c.var == 0.0 {
                    if x >= c.mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    std_normal_cdf((x - c.mean) / c.var.sqrt())
                }
            })
            .sum()
    }

    /// `P(X > x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                c.w * if c.var == 0.0 {
                    if x < c.mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    std_normal_cdf((c.mean - x) / c.var.sqrt())
                }
            })
            .sum()
    }
}

/// Joint pmf with prescribed marginals, its transport cost, and the dual
/// potentials certifying optimality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingPlan {
    pub joint: Vec<Vec<f64>>,
    pub cost_value: f64,
    pub row_potentials: Vec<f64>,
    pub col_potentials: Vec<f64>,
}

impl CouplingPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        self.joint.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let cols = self.joint.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| self.joint.iter().map(|r| r[j]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_examples() {
        assert_eq!(index_encode(&[0, 0], 3).unwrap(), 0);
        assert_eq!(index_encode(&[1, 2], 3).unwrap(), 5);
        assert_eq!(index_encode(&[2, 2, 2], 3).unwrap(), 26);
        assert!(index_encode(&[3], 3).is_err());
    }

    #[test]
    fn index_codec_exhaustive() {
        for k in 1..=4usize {
            for n in 1..=4usize {
                let size = k.pow(n as u32);
                for idx in 0..size {
                    let letters = index_decode(idx, k, n);
                    assert_eq!(index_encode(&letters, k).unwrap(), idx);
                }
            }
        }
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&[0, 1], &[0, 1]).unwrap(), 0);
        assert_eq!(hamming_distance(&[0, 1], &[1, 0]).unwrap(), 2);
        assert_eq!(hamming_distance(&[0, 1, 2], &[0, 2, 2]).unwrap(), 1);
        assert!(hamming_distance(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn pmf_rejects_unnormalized() {
        let err = Pmf::letter(vec![0.5, 0.48]).unwrap_err();
        assert!(err.to_string().contains("not normalized"), "{err}");
    }

    #[test]
    fn pmf_clamps_tiny_entries() {
        let p = Pmf::letter(vec![1.0 - 1e-16, 1e-16]).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn product_space_cap() {
        assert!(product_size(10, 6).is_ok());
        assert!(matches!(product_size(10, 7), Err(Error::TooLarge(_))));
    }

    #[test]
    fn product_and_marginal() {
        let a = Pmf::letter(vec![0.2, 0.8]).unwrap();
        let b = Pmf::letter(vec![0.6, 0.4]).unwrap();
        let p = Pmf::product(&[a.clone(), b.clone()]).unwrap();
        assert!((p.probs()[index_encode(&[1, 0], 2).unwrap()] - 0.48).abs() < 1e-15);
        for (m, want) in [(0, &a), (1, &b)] {
            let got = p.marginal(m).unwrap();
            for (g, w) in got.probs().iter().zip(want.probs()) {
                assert!((g - w).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn channel_rows_validated() {
        assert!(Channel::new(vec![vec![0.5, 0.5], vec![0.9, 0.2]]).is_err());
        assert!(Channel::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(Channel::bsc(0.1).is_ok());
    }

    #[test]
    fn two_input_rows_validated() {
        let bad = vec![vec![vec![0.5, 0.4]]];
        assert!(TwoInputChannel::new(bad).is_err());
        let w = TwoInputChannel::additive_mod(3, &[0.8, 0.1, 0.1]).unwrap();
        assert_eq!(w.row(1, 1), &[0.1, 0.1, 0.8]);
    }

    #[test]
    fn mixture_moments_and_convolution() {
        let m = GaussianMixture1D::atoms(&[-1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert!((m.second_moment() - 2.5).abs() < 1e-15);
        let s = m.convolve(1.0);
        assert_eq!(s.components()[0].var, 1.0);
        assert_eq!(s.components()[1].w, 0.5);
        assert!((s.second_moment() - 3.5).abs() < 1e-15);
        let atom = GaussianMixture1D::atoms(&[0.0], &[1.0])
            .unwrap()
            .convolve(1.0);
        assert_eq!(atom, GaussianMixture1D::gaussian(0.0, 1.0).unwrap());
    }

    #[test]
    fn mixture_cdf_and_sf_are_complementary() {
        let m = GaussianMixture1D::new(vec![
            Component {
                w: 0.3,
                mean: -1.0,
                var: 0.5,
            },
            Component {
                w: 0.7,
                mean: 2.0,
                var: 2.0,
            },
        ])
        .unwrap();
        for x in [-3.0, -1.0, 0.0, 0.5, 4.0] {
            assert!((m.cdf(x) + m.sf(x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn folded_normal_moment() {
        let g = GaussianMixture1D::gaussian(0.0, 1.0).unwrap();
        assert!((g.abs_first_moment() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn log_base_conversion() {
        assert_eq!(LogBase::Bits.from_nats(std::f64::consts::LN_2), 1.0);
        assert_eq!(LogBase::Nats.from_nats(0.3), 0.3);
    }
}
