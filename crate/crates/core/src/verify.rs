//! Randomized verification of the inequalities in scope.
//!
//! Each family draws instances from a seeded generator, evaluates the left
//! side exactly or by quadrature and the right side from the bound, and
//! records `slack = rhs − lhs − err` where `err` is the accumulated numeric
//! error estimate. Trial `i` draws from `ChaCha8Rng::seed_from_u64(seed)`
//! with its stream set to `i`, so each trial is reproducible on its own and
//! reports do not depend on thread scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discrete_ic::{
    block_conditional_entropies, chang_one_sided_ub, discrete_corner, entropy_gap_fano_ub,
    eta_tv_two_input, fc_envelope, mean_conditional_dbar, mod3_mix, prop_dbar_bounds,
};
use crate::domain::{Channel, GaussianMixture1D, Pmf, TwoInputChannel};
use crate::error::{Error, Result};
use crate::gic::{corner_c1_prime, outer_bound_r1, Constraint, GicParams};
use crate::infomeasures::{diff_entropy_1d, entropy_weights, kl_1d, kl_discrete, shannon_entropy};
use crate::quadrature::{QuadResult, QuadratureSpec};
use crate::regularity::{
    best_bound, cor_best_bound, delta_ppr, gaussian_smoothing_regularity, gradient_excess,
    symmetric_kl_bound, w2lip_delta, CorBestInputs,
};
use crate::transport::{
    dbar, dbar_contraction_ub, dbar_tensorize_ub, marton_dbar_ub, wp_default_spec,
    wp_quantile_1d_with,
};

/// A check fails when its slack is below `−TOLERANCE`.
pub const TOLERANCE: f64 = 1e-9;

/// Smallest entry of generated channel rows.
pub const CHANNEL_FLOOR: f64 = 0.02;

/// Envelope resolution used by the `fc` family.
pub const FC_GRID: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ppr,
    W2lip,
    Best,
    CorBest,
    Jpt,
    DbarProps,
    MartonChain,
    Fc,
    GicCorner,
    DiscreteCorner,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::Ppr,
        Family::W2lip,
        Family::Best,
        Family::CorBest,
        Family::Jpt,
        Family::DbarProps,
        Family::MartonChain,
        Family::Fc,
        Family::GicCorner,
        Family::DiscreteCorner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ppr => "ppr",
            Family::W2lip => "w2lip",
            Family::Best => "best",
            Family::CorBest => "cor_best",
            Family::Jpt => "jpt",
            Family::DbarProps => "dbar_props",
            Family::MartonChain => "marton_chain",
            Family::Fc => "fc",
            Family::GicCorner => "gic_corner",
            Family::DiscreteCorner => "discrete_corner",
        }
    }

    /// Families whose left sides come from quadrature.
    pub fn is_continuous(self) -> bool {
        matches!(
            self,
            Family::Ppr | Family::W2lip | Family::Best | Family::CorBest
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s || f.name().replace('_', "-") == s)
            .ok_or_else(|| {
                let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
                Error::domain(format!(
                    "unknown family {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub trials: usize,
    pub family: Family,
    /// Multiplies every right side. Only meant for tests that make sure the
    /// harness can fail.
    #[serde(skip, default = "unit_scale")]
    pub rhs_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl TrialConfig {
    pub fn new(family: Family, trials: usize, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        Ok(TrialConfig {
            seed,
            trials,
            family,
            rhs_scale: 1.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub digest: String,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub family: Family,
    pub seed: u64,
    pub trials_run: usize,
    pub tolerance: f64,
    /// Sorted by trial index.
    pub failures: Vec<Failure>,
    pub min_slack: f64,
    /// Check attaining `min_slack`.
    pub min_slack_check: String,
    /// Sum of numeric error estimates over all checks.
    pub error_sum: f64,
    /// Every quadrature converged and the summed error is dominated by
    /// `min_slack`.
    pub certified: bool,
}

/// One inequality `lhs ≤ rhs` evaluated on an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub err: f64,
}

impl Check {
    fn exact(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Check {
            name,
            lhs,
            rhs,
            err: 0.0,
        }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs - self.err
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub checks: Vec<Check>,
    /// All quadratures behind the checks converged.
    pub converged: bool,
}

/// Randomly drawn inputs of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Instance {
    Ppr {
        b: GaussianMixture1D,
        b_other: GaussianMixture1D,
        sigma_sq: f64,
        /// Noise variance of the one-sided comparison law.
        s_sq: f64,
    },
    W2lip {
        x: GaussianMixture1D,
        x_tilde: GaussianMixture1D,
        sigma_sq: f64,
        power: f64,
    },
    Best {
        b: GaussianMixture1D,
        u_atoms: GaussianMixture1D,
        u_var: f64,
        sigma_g_sq: f64,
    },
    CorBest {
        b: GaussianMixture1D,
        a: GaussianMixture1D,
        sigma_g_sq: f64,
        sigma_z_sq: f64,
        c: f64,
    },
    Jpt {
        p: Pmf,
        q_letters: Vec<Pmf>,
    },
    DbarProps {
        w: TwoInputChannel,
        p_x: Pmf,
        p_a: Pmf,
        p_a_tilde: Pmf,
    },
    MartonChain {
        p: Pmf,
        q_letters: Vec<Pmf>,
        p_letters: Vec<Pmf>,
        kernels: Vec<Channel>,
        w: TwoInputChannel,
        p_x: Pmf,
        p_a: Pmf,
        p0: Pmf,
    },
    Fc {
        a_given_x: Channel,
        b_given_a: Channel,
        joint: Pmf,
    },
    GicCorner {
        a: f64,
        b: f64,
        p1: f64,
        p2: f64,
    },
    DiscreteCorner {
        p2: Pmf,
    },
}

impl Instance {
    /// SHA-256 of the JSON encoding, in hex.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instances serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Generator state of trial `trial`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Uniform draw from the probability simplex.
pub fn dirichlet_uniform<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn random_pmf<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize) -> Pmf {
    let len = k.pow(n as u32);
    Pmf::from_weights(k, n, dirichlet_uniform(rng, len)).expect("valid simplex draw")
}

/// Row `floor + (1 − m·floor)·D` with `D` uniform on the simplex, so every
/// entry is at least the floor.
fn floored_row<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    let scale = 1.0 - m as f64 * CHANNEL_FLOOR;
    let mut row: Vec<f64> = dirichlet_uniform(rng, m)
        .into_iter()
        .map(|d| CHANNEL_FLOOR + scale * d)
        .collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= s);
    row
}

fn random_channel<R: Rng + ?Sized>(rng: &mut R, inputs: usize, outputs: usize) -> Channel {
    Channel::new((0..inputs).map(|_| floored_row(rng, outputs)).collect()).expect("valid rows")
}

fn random_two_input<R: Rng + ?Sized>(rng: &mut R, x: usize, a: usize, y: usize) -> TwoInputChannel {
    let entries = (0..x)
        .map(|_| (0..a).map(|_| floored_row(rng, y)).collect())
        .collect();
    TwoInputChannel::new(entries).expect("valid rows")
}

/// 2–4 atoms in `[−2, 2]` with uniform simplex weights, shrunk toward zero
/// if the second moment exceeds `cap`.
fn random_atoms<R: Rng + ?Sized>(rng: &mut R, cap: f64) -> GaussianMixture1D {
    let k = rng.random_range(2..=4);
    let mut points: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..=2.0)).collect();
    let weights = dirichlet_uniform(rng, k);
    let m2: f64 = points.iter().zip(&weights).map(|(x, w)| w * x * x).sum();
    if m2 > cap {
        let s = (cap / m2).sqrt();
        points.iter_mut().for_each(|x| *x *= s);
    }
    GaussianMixture1D::atoms(&points, &weights).expect("valid atoms")
}

fn small_alphabet<R: Rng + ?Sized>(rng: &mut R, max_n: usize, max_len: usize) -> (usize, usize) {
    loop {
        let k = rng.random_range(2..=3usize);
        let n = rng.random_range(1..=max_n);
        if k.pow(n as u32) <= max_len {
            return (k, n);
        }
    }
}

/// Draws the instance of trial `trial`.
pub fn generate(family: Family, seed: u64, trial: usize) -> Instance {
    let rng = &mut trial_rng(seed, trial);
    match family {
        Family::Ppr => Instance::Ppr {
            b: random_atoms(rng, 4.0),
            b_other: random_atoms(rng, 4.0),
            sigma_sq: rng.random_range(0.5..=2.0),
            s_sq: rng.random_range(0.5..=2.0),
        },
        Family::W2lip => {
            let power = rng.random_range(0.5..=4.0);
            Instance::W2lip {
                x: random_atoms(rng, power),
                x_tilde: random_atoms(rng, power),
                sigma_sq: rng.random_range(0.5..=2.0),
                power,
            }
        }
        Family::Best => Instance::Best {
            b: random_atoms(rng, 4.0),
            u_atoms: random_atoms(rng, 4.0),
            u_var: rng.random_range(0.5..=2.0),
            sigma_g_sq: rng.random_range(0.5..=2.0),
        },
        Family::CorBest => Instance::CorBest {
            b: random_atoms(rng, 4.0),
            a: random_atoms(rng, 4.0),
            sigma_g_sq: rng.random_range(0.5..=2.0),
            sigma_z_sq: rng.random_range(0.5..=2.0),
            c: rng.random_range(0.2..=1.0),
        },
        Family::Jpt => {
            let (k, n) = small_alphabet(rng, 3, 27);
            Instance::Jpt {
                p: random_pmf(rng, k, n),
                q_letters: (0..n).map(|_| random_pmf(rng, k, 1)).collect(),
            }
        }
        Family::DbarProps => {
            let n = rng.random_range(1..=2usize);
            let (xs, as_, ys) = (
                rng.random_range(2..=3usize),
                rng.random_range(2..=3usize),
                rng.random_range(2..=3usize),
            );
            Instance::DbarProps {
                w: random_two_input(rng, xs, as_, ys),
                p_x: random_pmf(rng, xs, n),
                p_a: random_pmf(rng, as_, n),
                p_a_tilde: random_pmf(rng, as_, n),
            }
        }
        Family::MartonChain => {
            let (k, n) = small_alphabet(rng, 3, 27);
            let (xs, as_, ys) = (
                rng.random_range(2..=3usize),
                rng.random_range(2..=3usize),
                rng.random_range(2..=3usize),
            );
            let m = rng.random_range(1..=2usize);
            Instance::MartonChain {
                p: random_pmf(rng, k, n),
                q_letters: (0..n).map(|_| random_pmf(rng, k, 1)).collect(),
                p_letters: (0..n).map(|_| random_pmf(rng, k, 1)).collect(),
                kernels: (0..n).map(|_| random_channel(rng, k, k)).collect(),
                w: random_two_input(rng, xs, as_, ys),
                p_x: random_pmf(rng, xs, m),
                p_a: random_pmf(rng, as_, m),
                p0: random_pmf(rng, as_, 1),
            }
        }
        Family::Fc => {
            let (xs, as_, bs) = (
                rng.random_range(2..=3usize),
                rng.random_range(2..=3usize),
                rng.random_range(2..=3usize),
            );
            Instance::Fc {
                a_given_x: random_channel(rng, xs, as_),
                b_given_a: random_channel(rng, as_, bs),
                joint: random_pmf(rng, xs, 2),
            }
        }
        Family::GicCorner => Instance::GicCorner {
            a: 1.0 - rng.random_range(0.0..1.0),
            b: rng.random_range(0.0..=3.0),
            p1: 10.0 - rng.random_range(0.0..9.9),
            p2: 10.0 - rng.random_range(0.0..9.9),
        },
        Family::DiscreteCorner => Instance::DiscreteCorner {
            p2: random_pmf(rng, 3, 1),
        },
    }
}

fn quad_spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

struct Tally {
    converged: bool,
}

impl Tally {
    fn quad(&mut self, r: QuadResult) -> (f64, f64) {
        self.converged &= r.converged;
        (r.value, r.error_estimate)
    }

    fn entropy(&mut self, m: &GaussianMixture1D) -> Result<(f64, f64)> {
        Ok(self.quad(diff_entropy_1d(m, &quad_spec())?))
    }

    fn kl(&mut self, p: &GaussianMixture1D, q: &GaussianMixture1D) -> Result<(f64, f64)> {
        Ok(self.quad(kl_1d(p, q, &quad_spec())?))
    }

    fn wp(
        &mut self,
        p: &GaussianMixture1D,
        q: &GaussianMixture1D,
        order: u32,
    ) -> Result<(f64, f64)> {
        let r = wp_quantile_1d_with(p, q, order, &wp_default_spec())?;
        self.converged &= r.converged;
        Ok((r.value, r.error_estimate))
    }
}

/// Grid of the gradient certificate: 2001 nodes over `±10(σ + max|b|)`.
fn gradient_check(b: &GaussianMixture1D, sigma_sq: f64) -> Result<Check> {
    let v = b.convolve(sigma_sq);
    let reg = gaussian_smoothing_regularity(sigma_sq, b.abs_first_moment())?;
    let half = 10.0 * (sigma_sq.sqrt() + b.max_abs_mean());
    Ok(Check::exact(
        "gradient",
        gradient_excess(&v, &reg, half, 2001)?,
        0.0,
    ))
}

/// Evaluates every inequality of the family on one instance.
pub fn evaluate(instance: &Instance) -> Result<Outcome> {
    let mut t = Tally { converged: true };
    let checks = match instance {
        Instance::Ppr {
            b,
            b_other,
            sigma_sq,
            s_sq,
        } => {
            let v = b.convolve(*sigma_sq);
            let u = b_other.convolve(*sigma_sq);
            let u_free = b_other.convolve(*s_sq);
            let reg_v = gaussian_smoothing_regularity(*sigma_sq, b.abs_first_moment())?;
            let reg_both = gaussian_smoothing_regularity(
                *sigma_sq,
                b.abs_first_moment().max(b_other.abs_first_moment()),
            )?;
            let (hv, ev) = t.entropy(&v)?;
            let (hu, eu) = t.entropy(&u)?;
            let (hf, ef) = t.entropy(&u_free)?;
            let (w_uv, ew_uv) = t.wp(&u, &v, 2)?;
            let (w_fv, ew_fv) = t.wp(&u_free, &v, 2)?;
            let (d_uv, ed_uv) = t.kl(&u, &v)?;
            let (d_vu, ed_vu) = t.kl(&v, &u)?;

            let one_sided = delta_ppr(&reg_v, u_free.second_moment(), v.second_moment(), w_fv)?;
            let two_sided = delta_ppr(&reg_both, u.second_moment(), v.second_moment(), w_uv)?;
            let skl = symmetric_kl_bound(&reg_both, u.second_moment(), v.second_moment(), w_uv)?;
            // Δ is linear in W₂, so its error is Δ/W₂ times the W₂ error.
            let lin = |bound: f64, w: f64, ew: f64| if w > 0.0 { bound / w * ew } else { 0.0 };
            vec![
                Check {
                    name: "ppr2",
                    lhs: hf - hv,
                    rhs: one_sided,
                    err: ef + ev + lin(one_sided, w_fv, ew_fv),
                },
                Check {
                    name: "ppr3",
                    lhs: (hu - hv).abs(),
                    rhs: two_sided,
                    err: eu + ev + lin(two_sided, w_uv, ew_uv),
                },
                Check {
                    name: "ppr4",
                    lhs: d_uv + d_vu,
                    rhs: skl,
                    err: ed_uv + ed_vu + lin(skl, w_uv, ew_uv),
                },
                gradient_check(b, *sigma_sq)?,
                gradient_check(b_other, *sigma_sq)?,
            ]
        }
        Instance::W2lip {
            x,
            x_tilde,
            sigma_sq,
            power,
        } => {
            let (h1, e1) = t.entropy(&x.convolve(*sigma_sq))?;
            let (h2, e2) = t.entropy(&x_tilde.convolve(*sigma_sq))?;
            // Both inputs are atomic, so W₂ is exact.
            let (w2, _) = t.wp(x, x_tilde, 2)?;
            let rhs = w2lip_delta(*sigma_sq, *power, 1, w2)?;
            vec![Check {
                name: "w2lip",
                lhs: (h1 - h2).abs(),
                rhs,
                err: e1 + e2,
            }]
        }
        Instance::Best {
            b,
            u_atoms,
            u_var,
            sigma_g_sq,
        } => {
            let v = b.convolve(*sigma_g_sq);
            let u = u_atoms.convolve(*u_var);
            let (hu, eu) = t.entropy(&u)?;
            let (hv, ev) = t.entropy(&v)?;
            let (w1, ew1) = t.wp(&u, &v, 1)?;
            let sup = b.max_abs_mean();
            let rhs = best_bound(*sigma_g_sq, sup, u.second_moment(), v.second_moment(), w1)?;
            vec![Check {
                name: "bd_best",
                lhs: hu - hv,
                rhs,
                err: eu + ev + sup / sigma_g_sq * ew1,
            }]
        }
        Instance::CorBest {
            b,
            a,
            sigma_g_sq,
            sigma_z_sq,
            c,
        } => {
            let left = b.sum_independent(a).convolve(*sigma_z_sq);
            let right = b.convolve(sigma_g_sq + sigma_z_sq);
            let (hl, el) = t.entropy(&left)?;
            let (hr, er) = t.entropy(&right)?;
            let smoothed_a = a.convolve(c * c * sigma_z_sq);
            let smoothed_g = GaussianMixture1D::gaussian(0.0, sigma_g_sq + c * c * sigma_z_sq)?;
            let (kl, ekl) = t.kl(&smoothed_a, &smoothed_g)?;
            let inputs = CorBestInputs {
                sigma_g_sq: *sigma_g_sq,
                sigma_z_sq: *sigma_z_sq,
                c: *c,
                sup_norm_b: b.max_abs_mean(),
                m2_a: a.second_moment(),
                mean_dot: a.mean() * b.mean(),
                m2_g: *sigma_g_sq,
                kl_smoothed: kl,
            };
            let rhs = cor_best_bound(&inputs)?;
            let upper = cor_best_bound(&CorBestInputs {
                kl_smoothed: kl + ekl,
                ..inputs
            })?;
            vec![Check {
                name: "cor_best",
                lhs: hl - hr,
                rhs,
                err: el + er + (upper - rhs),
            }]
        }
        Instance::Jpt { p, q_letters } => {
            let q = Pmf::product(q_letters)?;
            vec![Check::exact(
                "jpt",
                (shannon_entropy(p) - shannon_entropy(&q)).abs(),
                entropy_gap_fano_ub(p, &q)?,
            )]
        }
        Instance::DbarProps {
            w,
            p_x,
            p_a,
            p_a_tilde,
        } => dbar_props_checks(w, p_x, p_a, p_a_tilde)?,
        Instance::MartonChain {
            p,
            q_letters,
            p_letters,
            kernels,
            w,
            p_x,
            p_a,
            p0,
        } => marton_chain_checks(p, q_letters, p_letters, kernels, w, p_x, p_a, p0)?,
        Instance::Fc {
            a_given_x,
            b_given_a,
            joint,
        } => {
            let curve = fc_envelope(a_given_x, b_given_a, FC_GRID)?;
            curve.check_invariants(1e-12)?;
            let (h_xa, h_xb) = block_conditional_entropies(joint, a_given_x, b_given_a)?;
            let t_arg = (h_xb / 2.0 + curve.grid_err_t).min(curve.t_max);
            vec![
                Check::exact("sl", h_xa, 2.0 * (curve.eval(t_arg) + curve.grid_err_f)),
                Check::exact("fc_below_diagonal", curve.eval(h_xb / 2.0), h_xb / 2.0),
            ]
        }
        Instance::GicCorner { a, b, p1, p2 } => {
            let mut out = Vec::new();
            for constraint in [Constraint::AlmostSure, Constraint::Average] {
                let params = GicParams::new(*a, *b, *p1, *p2, constraint)?;
                let r1 = outer_bound_r1(&params, params.c2())?;
                let (c1p, _) = corner_c1_prime(*a, *b, *p1, *p2)?;
                let name = match constraint {
                    Constraint::AlmostSure => "corner_as",
                    Constraint::Average => "corner_avg",
                };
                out.push(Check::exact(name, (r1 - c1p).abs(), 0.0));
            }
            out
        }
        Instance::DiscreteCorner { p2 } => {
            let r = discrete_corner(p2)?;
            let h2 = entropy_weights(p2.probs());
            let grid_best = (0..=1000)
                .map(|i| entropy_weights(&mod3_mix(i as f64 / 1000.0, p2.probs())) - h2)
                .fold(f64::NEG_INFINITY, f64::max);
            vec![
                Check::exact("c2_positive", 0.0, r.c2),
                Check::exact("c2_grid_oracle", grid_best, r.c2),
                Check::exact(
                    "corner_sum",
                    (r.c1_prime + r.c2 - (3f64.ln() - h2)).abs(),
                    0.0,
                ),
            ]
        }
    };
    Ok(Outcome {
        checks,
        converged: t.converged,
    })
}

pub(crate) fn dbar_props_checks(
    w: &TwoInputChannel,
    p_x: &Pmf,
    p_a: &Pmf,
    p_a_tilde: &Pmf,
) -> Result<Vec<Check>> {
    let y = w.output_law(p_x, p_a)?;
    let yt = w.output_law(p_x, p_a_tilde)?;
    let d_y = dbar(&y, &yt)?;
    let mean_d = mean_conditional_dbar(w, p_x, p_a, p_a_tilde)?;
    let b = prop_dbar_bounds(w, &y, &yt, d_y, mean_d)?;
    let (h, ht) = (shannon_entropy(&y), shannon_entropy(&yt));
    let cond = |pa: &Pmf| -> Result<f64> {
        let mut total = 0.0;
        for (xi, &px) in p_x.probs().iter().enumerate() {
            total += px * shannon_entropy(&w.conditional_output(xi, pa)?);
        }
        Ok(total)
    };
    let (i, it) = (h - cond(p_a)?, ht - cond(p_a_tilde)?);
    Ok(vec![
        Check::exact("dbarH", (h - ht).abs(), b.h_bound),
        Check::exact(
            "dbarD",
            kl_discrete(&y, &yt)? + kl_discrete(&yt, &y)?,
            b.d_bound,
        ),
        Check::exact("dbarI", (i - it).abs(), b.i_bound),
        Check::exact(
            "log_ratio_c",
            b.c,
            ((1.0 - CHANNEL_FLOOR) / CHANNEL_FLOOR).ln(),
        ),
    ])
}

#[allow(clippy::too_many_arguments)]
fn marton_chain_checks(
    p: &Pmf,
    q_letters: &[Pmf],
    p_letters: &[Pmf],
    kernels: &[Channel],
    w: &TwoInputChannel,
    p_x: &Pmf,
    p_a: &Pmf,
    p0: &Pmf,
) -> Result<Vec<Check>> {
    let n = p.n();
    let q = Pmf::product(q_letters)?;
    let kl = kl_discrete(p, &q)?;
    let d = dbar(p, &q)?;
    let k = p.alphabet_size();
    let mut out = vec![
        Check::exact("marton1", d, marton_dbar_ub(kl, n)),
        Check::exact(
            "chang",
            shannon_entropy(p) - shannon_entropy(&q),
            chang_one_sided_ub(kl, n, k)?,
        ),
        Check::exact(
            "tensorization",
            dbar(&Pmf::product(p_letters)?, &q)?,
            dbar_tensorize_ub(p_letters, q_letters)?,
        ),
    ];

    let py = Channel::push_forward_product(kernels, p)?;
    let qy = Channel::push_forward_product(kernels, &q)?;
    out.push(Check::exact(
        "dbar_contract",
        dbar(&py, &qy)?,
        dbar_contraction_ub(d, kernels)?,
    ));

    // A reference input law with i.i.d. letters.
    let m = p_x.n();
    let p_a_tilde = Pmf::product(&vec![p0.clone(); m])?;
    let y = w.output_law(p_x, p_a)?;
    let yt = w.output_law(p_x, &p_a_tilde)?;
    let d_y = dbar(&y, &yt)?;
    let mean_d = mean_conditional_dbar(w, p_x, p_a, &p_a_tilde)?;
    let d_a = dbar(p_a, &p_a_tilde)?;
    let kl_a = kl_discrete(p_a, &p_a_tilde)?;
    let eta = eta_tv_two_input(w);
    out.push(Check::exact("etatv_convexity", d_y, mean_d));
    out.push(Check::exact("etatv_contract", mean_d, eta * d_a));
    out.push(Check::exact(
        "etatv_marton",
        eta * d_a,
        eta * marton_dbar_ub(kl_a, m),
    ));

    let mut gb2 = 0.0;
    let mut cond_kl = 0.0;
    for (xi, &px) in p_x.probs().iter().enumerate() {
        let yx = w.conditional_output(xi, p_a)?;
        let ytx = w.conditional_output(xi, &p_a_tilde)?;
        let kx = kl_discrete(&yx, &ytx)?;
        gb2 += px * marton_dbar_ub(kx, m);
        cond_kl += px * kx;
    }
    let gb3 = marton_dbar_ub(cond_kl, m);
    // The data-processing constant is at most one; the grid estimate is a
    // lower bound and is not used here.
    let gb4 = marton_dbar_ub(kl_a, m);
    out.push(Check::exact("gb1", d_y, mean_d));
    out.push(Check::exact("gb2", mean_d, gb2));
    out.push(Check::exact("gb3", gb2, gb3));
    out.push(Check::exact("gb4", gb3, gb4));

    Ok(out)
}

/// Runs the family and assembles the report.
pub fn run_family(config: &TrialConfig) -> Result<VerifyReport> {
    if config.trials == 0 {
        return Err(Error::domain("trials must be at least 1"));
    }
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let inst = generate(config.family, config.seed, i);
            evaluate(&inst).map(|o| (inst, o))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut failures = Vec::new();
    let mut min_slack = f64::INFINITY;
    let mut min_slack_check = String::new();
    let mut error_sum = 0.0;
    let mut converged = true;
    for (trial, (inst, outcome)) in outcomes.iter().enumerate() {
        converged &= outcome.converged;
        for c in &outcome.checks {
            let rhs = c.rhs * config.rhs_scale;
            let slack = rhs - c.lhs - c.err;
            error_sum += c.err;
            if slack < min_slack || slack.is_nan() {
                min_slack = slack;
                min_slack_check = c.name.to_string();
            }
            if !(slack >= -TOLERANCE) {
                failures.push(Failure {
                    trial,
                    digest: inst.digest(),
                    check: c.name.to_string(),
                    lhs: c.lhs,
                    rhs,
                    slack,
                });
            }
        }
    }
    let certified = converged && (error_sum < 0.1 * min_slack || error_sum <= TOLERANCE);
    Ok(VerifyReport {
        family: config.family,
        seed: config.seed,
        trials_run: config.trials,
        tolerance: TOLERANCE,
        failures,
        min_slack,
        min_slack_check,
        error_sum,
        certified,
    })
}

impl VerifyReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_ic::channel_log_ratio_c;

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            assert_eq!(
                serde_json::to_string(&f).unwrap(),
                format!("\"{}\"", f.name())
            );
        }
        assert!("nope".parse::<Family>().is_err());
        assert_eq!("cor-best".parse::<Family>().unwrap(), Family::CorBest);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a = generate(Family::Jpt, 3, 0);
        assert_eq!(a.digest(), generate(Family::Jpt, 3, 0).digest());
        assert_ne!(a.digest(), generate(Family::Jpt, 3, 1).digest());
        assert_ne!(a.digest(), generate(Family::Jpt, 4, 0).digest());
    }

    #[test]
    fn floored_channels_have_bounded_ratio() {
        let bound = ((1.0 - CHANNEL_FLOOR) / CHANNEL_FLOOR).ln();
        for i in 0..50 {
            if let Instance::DbarProps { w, .. } = generate(Family::DbarProps, 11, i) {
                assert!(channel_log_ratio_c(&w) <= bound + 1e-12);
                assert!(w
                    .entries()
                    .iter()
                    .flatten()
                    .flatten()
                    .all(|&v| v >= CHANNEL_FLOOR - 1e-15));
            }
        }
    }

    #[test]
    fn generated_mixtures_respect_the_cap() {
        for i in 0..50 {
            if let Instance::W2lip {
                x, x_tilde, power, ..
            } = generate(Family::W2lip, 5, i)
            {
                assert!(x.second_moment() <= power * (1.0 + 1e-12));
                assert!(x_tilde.second_moment() <= power * (1.0 + 1e-12));
                assert!(x.components().iter().all(|c| c.mean.abs() <= 2.0));
            }
        }
    }

    #[test]
    fn degenerate_ppr_has_zero_bound() {
        let b = GaussianMixture1D::atoms(&[-1.0, 0.5], &[0.3, 0.7]).unwrap();
        let inst = Instance::Ppr {
            b: b.clone(),
            b_other: b,
            sigma_sq: 1.0,
            s_sq: 1.0,
        };
        let out = evaluate(&inst).unwrap();
        assert!(out.converged);
        for c in &out.checks {
            assert!(c.slack() >= -TOLERANCE, "{c:?}");
        }
        let two = out.checks.iter().find(|c| c.name == "ppr3").unwrap();
        assert!(two.rhs.abs() < 1e-6 && two.lhs == 0.0);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(TrialConfig::new(Family::Jpt, 0, 1).is_err());
    }

    #[test]
    fn small_runs_pass() {
        for f in [
            Family::Jpt,
            Family::GicCorner,
            Family::DiscreteCorner,
            Family::DbarProps,
        ] {
            let r = run_family(&TrialConfig::new(f, 20, 1).unwrap()).unwrap();
            assert!(r.failures.is_empty(), "{f}: {:?}", r.failures);
            assert!(r.certified, "{f}");
        }
    }
}
