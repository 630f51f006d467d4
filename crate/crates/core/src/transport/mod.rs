//! Wasserstein distances: exact discrete optimal transport, Ornstein's d̄,
//! total variation, 1-D quantile `W_p`, and the divergence-to-transport
//! converters (Talagrand for Gaussian references, Marton for products).

mod quantile;
mod simplex;

pub use quantile::{
    default_spec as wp_default_spec, gaussian_w2, quantile_at, wp_quantile_1d, wp_quantile_1d_with,
    WpResult,
};

use crate::discrete_ic::eta_tv;
use crate::domain::{index_decode, product_size, Channel, CouplingPlan, Pmf};
use crate::error::{Error, Result};

/// Tolerance for marginal feasibility and strong duality of a plan.
pub const PLAN_TOL: f64 = 1e-9;

/// Largest `|X|^(2n)` for which d̄ is solved exactly.
pub const DBAR_MAX_PAIRS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    entries: Vec<Vec<f64>>,
}

impl CostMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let cols = entries.first().map_or(0, Vec::len);
        if entries.is_empty() || cols == 0 {
            return Err(Error::invalid("cost", "empty matrix"));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::invalid(format!("cost[{i}]"), "ragged row"));
            }
            if let Some(c) = row.iter().find(|c| !c.is_finite()) {
                return Err(Error::invalid(
                    format!("cost[{i}]"),
                    format!("non-finite entry {c}"),
                ));
            }
            if let Some(c) = row.iter().find(|c| **c < 0.0) {
                return Err(Error::invalid(
                    format!("cost[{i}]"),
                    format!("negative entry {c}"),
                ));
            }
        }
        Ok(CostMatrix { entries })
    }

    /// `d_H(x, y) / n` over `X^n × X^n`.
    pub fn normalized_hamming(alphabet_size: usize, n: usize) -> Result<Self> {
        let size = product_size(alphabet_size, n)?;
        if size.saturating_mul(size) > DBAR_MAX_PAIRS {
            return Err(Error::TooLarge(format!(
                "{alphabet_size}^(2·{n}) pairs exceed {DBAR_MAX_PAIRS}; use dbar_tensorize_ub for an upper bound"
            )));
        }
        let strings: Vec<Vec<usize>> = (0..size)
            .map(|i| index_decode(i, alphabet_size, n))
            .collect();
        let entries = strings
            .iter()
            .map(|x| {
                strings
                    .iter()
                    .map(|y| x.iter().zip(y).filter(|(a, b)| a != b).count() as f64 / n as f64)
                    .collect()
            })
            .collect();
        Ok(CostMatrix { entries })
    }

    /// `|x_i − y_j|^p` for points on the line.
    pub fn line(xs: &[f64], ys: &[f64], p: i32) -> Result<Self> {
        CostMatrix::new(
            xs.iter()
                .map(|x| ys.iter().map(|y| (x - y).abs().powi(p)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries[0].len()
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }
}

/// Exact optimal transport between two pmfs (arbitrary cost).
pub fn ot_exact(mu: &Pmf, nu: &Pmf, cost: &CostMatrix) -> Result<CouplingPlan> {
    ot_exact_weights(mu.probs(), nu.probs(), cost)
}

/// Same as [`ot_exact`] on raw weight vectors (must each sum to one).
pub fn ot_exact_weights(mu: &[f64], nu: &[f64], cost: &CostMatrix) -> Result<CouplingPlan> {
    if cost.rows() != mu.len() || cost.cols() != nu.len() {
        return Err(Error::mismatch(format!(
            "cost is {}x{}, marginals have sizes {} and {}",
            cost.rows(),
            cost.cols(),
            mu.len(),
            nu.len()
        )));
    }
    for (name, w) in [("mu", mu), ("nu", nu)] {
        let s: f64 = w.iter().sum();
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (s - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                name,
                format!("not a normalized pmf (sum = {s})"),
            ));
        }
    }
    simplex::solve(mu, nu, &cost.entries)
}

/// Checks primal feasibility, dual feasibility and strong duality of `plan`.
pub fn certify_plan(
    plan: &CouplingPlan,
    mu: &[f64],
    nu: &[f64],
    cost: &CostMatrix,
    tol: f64,
) -> bool {
    let rows_ok = plan
        .row_sums()
        .iter()
        .zip(mu)
        .all(|(s, m)| (s - m).abs() <= tol);
    let cols_ok = plan
        .col_sums()
        .iter()
        .zip(nu)
        .all(|(s, m)| (s - m).abs() <= tol);
    let nonneg = plan.joint.iter().flatten().all(|&x| x >= -tol);
    let primal: f64 = plan
        .joint
        .iter()
        .zip(cost.entries())
        .map(|(jr, cr)| jr.iter().zip(cr).map(|(x, c)| x * c).sum::<f64>())
        .sum();
    let dual: f64 = plan
        .row_potentials
        .iter()
        .zip(mu)
        .map(|(u, m)| u * m)
        .sum::<f64>()
        + plan
            .col_potentials
            .iter()
            .zip(nu)
            .map(|(v, m)| v * m)
            .sum::<f64>();
    let dual_feasible = cost.entries().iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, &c)| plan.row_potentials[i] + plan.col_potentials[j] <= c + tol)
    });
    rows_ok
        && cols_ok
        && nonneg
        && dual_feasible
        && (primal - plan.cost_value).abs() <= tol
        && (dual - plan.cost_value).abs() <= tol
}

/// Ornstein's d̄ between two pmfs on `X^n`, solved exactly.
pub fn dbar(p: &Pmf, q: &Pmf) -> Result<f64> {
    p.same_shape(q)?;
    let cost = CostMatrix::normalized_hamming(p.alphabet_size(), p.n())?;
    Ok(ot_exact(p, q, &cost)?.cost_value.clamp(0.0, 1.0))
}

pub fn tv(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::mismatch(format!(
            "pmfs of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(tv_weights(p.probs(), q.probs()))
}

pub(crate) fn tv_weights(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!(
            "{name} must be non-negative, got {x}"
        )));
    }
    Ok(())
}

/// `√(2 σ²_max D)`: upper bound on `W₂(P, N(·, Σ))` from the divergence.
pub fn talagrand_w2_ub(kl_nats: f64, sigma_max_sq: f64) -> Result<f64> {
    check_nonneg("divergence", kl_nats)?;
    if !(sigma_max_sq > 0.0) {
        return Err(Error::domain(format!(
            "sigma_max_sq must be positive, got {sigma_max_sq}"
        )));
    }
    Ok((2.0 * sigma_max_sq * kl_nats).sqrt())
}

/// `√(D / 2n)`: upper bound on d̄ against a product reference.
pub fn marton_dbar_ub(kl_nats: f64, n: usize) -> f64 {
    (kl_nats.max(0.0) / (2.0 * n.max(1) as f64)).sqrt()
}

/// `(1/n) Σ tv(P_i, Q_i)`, an upper bound on d̄ of the products.
pub fn dbar_tensorize_ub(ps: &[Pmf], qs: &[Pmf]) -> Result<f64> {
    if ps.len() != qs.len() || ps.is_empty() {
        return Err(Error::mismatch(format!(
            "{} vs {} letters",
            ps.len(),
            qs.len()
        )));
    }
    let mut total = 0.0;
    for (p, q) in ps.iter().zip(qs) {
        total += tv(p, q)?;
    }
    Ok(total / ps.len() as f64)
}

/// `max_i η_TV(kernel_i) · d̄(P_X, Q_X)`.
pub fn dbar_contraction_ub(dbar_x: f64, kernels: &[Channel]) -> Result<f64> {
    if !(0.0..=1.0).contains(&dbar_x) {
        return Err(Error::domain(format!("d̄ = {dbar_x} outside [0,1]")));
    }
    let eta = kernels.iter().map(eta_tv).fold(0.0, f64::max);
    Ok(eta * dbar_x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> Pmf {
        Pmf::letter(vec![1.0 - p, p]).unwrap()
    }

    #[test]
    fn identical_marginals_cost_nothing() {
        let mu = Pmf::letter(vec![0.2, 0.3, 0.5]).unwrap();
        let cost = CostMatrix::new(vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let plan = ot_exact(&mu, &mu, &cost).unwrap();
        assert!(plan.cost_value.abs() < 1e-15);
        for i in 0..3 {
            assert!((plan.joint[i][i] - mu.probs()[i]).abs() < 1e-15);
        }
        assert!(certify_plan(&plan, mu.probs(), mu.probs(), &cost, PLAN_TOL));
    }

    #[test]
    fn forced_plan() {
        let mu = Pmf::letter(vec![1.0, 0.0]).unwrap();
        let nu = Pmf::letter(vec![0.0, 1.0]).unwrap();
        let cost = CostMatrix::new(vec![vec![0.0, 2.5], vec![7.0, 0.0]]).unwrap();
        let plan = ot_exact(&mu, &nu, &cost).unwrap();
        assert_eq!(plan.cost_value, 2.5);
        assert!(certify_plan(&plan, mu.probs(), nu.probs(), &cost, PLAN_TOL));
    }

    #[test]
    fn dimension_and_cost_errors() {
        let mu = bern(0.5);
        let cost = CostMatrix::new(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(
            ot_exact(&mu, &mu, &cost),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(CostMatrix::new(vec![vec![0.0, f64::NAN]]).is_err());
    }

    #[test]
    fn dbar_single_letter_is_tv() {
        let p = Pmf::letter(vec![0.1, 0.6, 0.3]).unwrap();
        let q = Pmf::letter(vec![0.5, 0.2, 0.3]).unwrap();
        assert!((dbar(&p, &q).unwrap() - tv(&p, &q).unwrap()).abs() < 1e-15);
        assert_eq!(dbar(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn dbar_of_bernoulli_products() {
        let p = Pmf::product(&[bern(0.2), bern(0.2)]).unwrap();
        let q = Pmf::product(&[bern(0.5), bern(0.5)]).unwrap();
        assert!((dbar(&p, &q).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn dbar_too_large() {
        let p = Pmf::uniform(4, 6).unwrap();
        assert!(matches!(dbar(&p, &p), Err(Error::TooLarge(_))));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv(&bern(0.3), &bern(0.3)).unwrap(), 0.0);
        assert!((tv(&bern(0.2), &bern(0.5)).unwrap() - 0.3).abs() < 1e-15);
        let u = Pmf::uniform(3, 1).unwrap();
        let d = Pmf::point_mass(3, 1, 0).unwrap();
        assert!((tv(&u, &d).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(tv(&u, &bern(0.5)).is_err());
    }

    #[test]
    fn converter_examples() {
        assert_eq!(talagrand_w2_ub(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(talagrand_w2_ub(0.5, 1.0).unwrap(), 1.0);
        assert!(talagrand_w2_ub(-0.1, 1.0).is_err());
        assert!(talagrand_w2_ub(0.1, 0.0).is_err());
        assert_eq!(marton_dbar_ub(0.0, 3), 0.0);
        assert_eq!(marton_dbar_ub(2.0, 1), 1.0);
    }

    #[test]
    fn tensorization_examples() {
        let ps = [bern(0.2), bern(0.7)];
        assert_eq!(dbar_tensorize_ub(&ps, &ps).unwrap(), 0.0);
        assert!((dbar_tensorize_ub(&ps[..1], &[bern(0.6)]).unwrap() - 0.4).abs() < 1e-15);
        let qs = [bern(0.5), bern(0.4)];
        let ub = dbar_tensorize_ub(&ps, &qs).unwrap();
        assert!((ub - 0.3).abs() < 1e-15);
        let exact = dbar(&Pmf::product(&ps).unwrap(), &Pmf::product(&qs).unwrap()).unwrap();
        assert!(exact <= ub + 1e-12);
    }

    #[test]
    fn contraction_examples() {
        let id = Channel::identity(2).unwrap();
        assert_eq!(dbar_contraction_ub(0.4, &[id.clone(), id]).unwrap(), 0.4);
        let bsc = Channel::bsc(0.1).unwrap();
        assert!(
            (dbar_contraction_ub(0.5, std::slice::from_ref(&bsc)).unwrap() - 0.8 * 0.5).abs()
                < 1e-15
        );
        assert_eq!(dbar_contraction_ub(0.0, &[bsc]).unwrap(), 0.0);
        assert!(dbar_contraction_ub(1.5, &[]).is_err());
    }
}
