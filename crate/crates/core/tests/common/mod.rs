//! Brute-force oracles and random draws shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasscont::verify::dirichlet_uniform;
use wasscont::Pmf;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random pmf on `k^n` points; a few entries are zeroed to exercise
/// degenerate supports.
pub fn random_pmf(rng: &mut ChaCha8Rng, k: usize, n: usize, sparse: bool) -> Pmf {
    let len = k.pow(n as u32);
    let mut w = dirichlet_uniform(rng, len);
    if sparse && len > 1 {
        for v in w.iter_mut() {
            if rng.random_bool(0.2) {
                *v = 0.0;
            }
        }
        if w.iter().all(|&v| v == 0.0) {
            w[rng.random_range(0..len)] = 1.0;
        }
    }
    Pmf::from_weights(k, n, w).unwrap()
}

/// Minimum transport cost by enumerating every spanning tree of the
/// complete bipartite graph. Each tree carries exactly one flow meeting the
/// marginals; the feasible ones are the vertices of the transportation
/// polytope, so the cheapest is the optimum.
pub fn ot_by_vertex_enumeration(mu: &[f64], nu: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (m, n) = (mu.len(), nu.len());
    let edges: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let need = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(need);
    enumerate_subsets(&edges, need, 0, &mut chosen, &mut |tree| {
        if let Some(flow) = tree_flow(mu, nu, tree) {
            if flow.iter().all(|&f| f >= -1e-12) {
                let c: f64 = tree
                    .iter()
                    .zip(&flow)
                    .map(|(&(i, j), f)| f * cost[i][j])
                    .sum();
                best = best.min(c);
            }
        }
    });
    best
}

fn enumerate_subsets<F: FnMut(&[(usize, usize)])>(
    edges: &[(usize, usize)],
    need: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if chosen.len() == need {
        visit(chosen);
        return;
    }
    for k in start..edges.len() {
        if edges.len() - k < need - chosen.len() {
            break;
        }
        chosen.push(edges[k]);
        enumerate_subsets(edges, need, k + 1, chosen, visit);
        chosen.pop();
    }
}

/// Flow on a spanning tree by peeling leaves; `None` if the edge set has a
/// cycle (then it is not a tree).
fn tree_flow(mu: &[f64], nu: &[f64], tree: &[(usize, usize)]) -> Option<Vec<f64>> {
    let m = mu.len();
    let nodes = m + nu.len();
    let mut residual: Vec<f64> = mu.iter().chain(nu).copied().collect();
    let mut degree = vec![0usize; nodes];
    for &(i, j) in tree {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    let mut flow = vec![f64::NAN; tree.len()];
    let mut done = vec![false; tree.len()];
    for _ in 0..tree.len() {
        let (e, leaf) = tree.iter().enumerate().find_map(|(e, &(i, j))| {
            if done[e] {
                None
            } else if degree[i] == 1 {
                Some((e, i))
            } else if degree[m + j] == 1 {
                Some((e, m + j))
            } else {
                None
            }
        })?;
        let (i, j) = tree[e];
        let other = if leaf == i { m + j } else { i };
        flow[e] = residual[leaf];
        residual[other] -= residual[leaf];
        residual[leaf] = 0.0;
        degree[i] -= 1;
        degree[m + j] -= 1;
        done[e] = true;
    }
    Some(flow)
}

/// `max Σ f(z)(p − q)(z)` over 1-Lipschitz `f` on the sorted union support.
/// With `f` pinned at the first point the polytope is a box in the
/// increments, so its vertices are the sign patterns `±gap`.
pub fn w1_by_lipschitz_vertices(xs: &[f64], p: &[f64], ys: &[f64], q: &[f64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = xs.iter().zip(p).map(|(&x, &w)| (x, w)).collect();
    pts.extend(ys.iter().zip(q).map(|(&y, &w)| (y, -w)));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = pts.len();
    let mut best = f64::NEG_INFINITY;
    for signs in 0u32..(1 << (k - 1)) {
        let mut f = 0.0;
        let mut total = pts[0].1 * f;
        for s in 1..k {
            let gap = pts[s].0 - pts[s - 1].0;
            f += if signs >> (s - 1) & 1 == 1 { gap } else { -gap };
            total += pts[s].1 * f;
        }
        best = best.max(total);
    }
    best
}

/// Row with every entry at least `floor`.
pub fn floored_row(rng: &mut ChaCha8Rng, m: usize, floor: f64) -> Vec<f64> {
    let scale = 1.0 - m as f64 * floor;
    dirichlet_uniform(rng, m)
        .into_iter()
        .map(|d| floor + scale * d)
        .collect()
}

pub fn random_channel(
    rng: &mut ChaCha8Rng,
    inputs: usize,
    outputs: usize,
    floor: f64,
) -> wasscont::Channel {
    wasscont::Channel::new(
        (0..inputs)
            .map(|_| floored_row(rng, outputs, floor))
            .collect(),
    )
    .unwrap()
}

pub fn random_two_input(
    rng: &mut ChaCha8Rng,
    x: usize,
    a: usize,
    y: usize,
    floor: f64,
) -> wasscont::TwoInputChannel {
    wasscont::TwoInputChannel::new(
        (0..x)
            .map(|_| (0..a).map(|_| floored_row(rng, y, floor)).collect())
            .collect(),
    )
    .unwrap()
}
