//! Transportation simplex (MODI potentials, Bland's rule).
//!
//! Starts from a northwest-corner basis with exactly `m + n − 1` cells, so
//! degenerate bases carry explicit zero-flow cells and never lose the
//! spanning-tree structure. Entering and leaving cells follow Bland's
//! lowest-index rule, which rules out cycling on degenerate pivots.

use crate::domain::CouplingPlan;
use crate::error::{Error, Result};

#[derive(Clone, Copy)]
struct Cell {
    i: usize,
    j: usize,
    flow: f64,
}

/// Dual feasibility slack for the entering test, relative to the cost scale.
const REDUCED_COST_TOL: f64 = 1e-12;

pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> Result<CouplingPlan> {
    let m_full = supply.len();
    let n_full = demand.len();
    let rows: Vec<usize> = (0..m_full).filter(|&i| supply[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n_full).filter(|&j| demand[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::domain("marginal with no mass"));
    }
    let a: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();
    let c: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| cost[i][j]).collect())
        .collect();

    let (flows, u, v) = solve_reduced(&a, &b, &c)?;

    let mut joint = vec![vec![0.0; n_full]; m_full];
    for (ri, &i) in rows.iter().enumerate() {
        for (cj, &j) in cols.iter().enumerate() {
            joint[i][j] = flows[ri][cj];
        }
    }

    // Extend potentials to massless rows and columns so that the dual stays
    // feasible on the full cost matrix; they do not change the objective.
    let mut row_potentials = vec![0.0; m_full];
    let mut col_potentials = vec![0.0; n_full];
    let mut row_known = vec![false; m_full];
    for (ri, &i) in rows.iter().enumerate() {
        row_potentials[i] = u[ri];
        row_known[i] = true;
    }
    for (cj, &j) in cols.iter().enumerate() {
        col_potentials[j] = v[cj];
    }
    for i in (0..m_full).filter(|&i| !row_known[i]) {
        row_potentials[i] = cols
            .iter()
            .map(|&j| cost[i][j] - col_potentials[j])
            .fold(f64::INFINITY, f64::min);
    }
    let col_known: Vec<bool> = (0..n_full).map(|j| demand[j] > 0.0).collect();
    for j in (0..n_full).filter(|&j| !col_known[j]) {
        col_potentials[j] = (0..m_full)
            .map(|i| cost[i][j] - row_potentials[i])
            .fold(f64::INFINITY, f64::min);
    }

    let cost_value = joint
        .iter()
        .zip(cost)
        .map(|(jr, cr)| jr.iter().zip(cr).map(|(x, c)| x * c).sum::<f64>())
        .sum();
    Ok(CouplingPlan {
        joint,
        cost_value,
        row_potentials,
        col_potentials,
    })
}

type Solution = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>);

fn solve_reduced(a: &[f64], b: &[f64], c: &[Vec<f64>]) -> Result<Solution> {
    let m = a.len();
    let n = b.len();
    let mut basis = northwest_corner(a, b);
    let scale = c
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
        .max(1.0);
    let tol = REDUCED_COST_TOL * scale;
    let max_iter = 50 * (m * n) + 1000;

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut in_basis = vec![false; m * n];
    for cell in &basis {
        in_basis[cell.i * n + cell.j] = true;
    }

    for _ in 0..max_iter {
        let tree = Tree::new(m, n, &basis);
        tree.potentials(c, &basis, &mut u, &mut v);

        // Bland: first cell in row-major order with negative reduced cost.
        let entering = (0..m * n).find(|&k| {
            let (i, j) = (k / n, k % n);
            !in_basis[k] && c[i][j] - u[i] - v[j] < -tol
        });
        let Some(k) = entering else {
            let mut flows = vec![vec![0.0; n]; m];
            for cell in &basis {
                flows[cell.i][cell.j] = cell.flow;
            }
            return Ok((flows, u, v));
        };
        let (ei, ej) = (k / n, k % n);

        // Path in the basis tree from row `ei` to column `ej`; cells along it
        // alternate between losing and gaining flow, starting with a loss.
        let path = tree.path(ei, m + ej);
        let minus: Vec<usize> = path.iter().step_by(2).copied().collect();
        let theta = minus
            .iter()
            .map(|&e| basis[e].flow)
            .fold(f64::INFINITY, f64::min);
        let leaving = minus
            .iter()
            .copied()
            .filter(|&e| basis[e].flow == theta)
            .min_by_key(|&e| basis[e].i * n + basis[e].j)
            .expect("cycle has a decreasing cell");

        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis[e].flow -= theta;
            } else {
                basis[e].flow += theta;
            }
        }
        let old = basis[leaving];
        in_basis[old.i * n + old.j] = false;
        in_basis[k] = true;
        basis[leaving] = Cell {
            i: ei,
            j: ej,
            flow: theta,
        };
    }
    Err(Error::Solver(format!(
        "transportation simplex did not terminate within {max_iter} pivots"
    )))
}

fn northwest_corner(a: &[f64], b: &[f64]) -> Vec<Cell> {
    let (m, n) = (a.len(), b.len());
    let mut s = a.to_vec();
    let mut d = b.to_vec();
    let mut basis = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let flow = s[i].min(d[j]).max(0.0);
        basis.push(Cell { i, j, flow });
        s[i] -= flow;
        d[j] -= flow;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || s[i] <= d[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(basis.len(), m + n - 1);
    basis
}

/// Spanning tree over `m` row nodes and `n` column nodes (ids `m..m+n`),
/// edges are indices into the basis.
struct Tree {
    adj: Vec<Vec<(usize, usize)>>,
    m: usize,
}

impl Tree {
    fn new(m: usize, n: usize, basis: &[Cell]) -> Self {
        let mut adj = vec![Vec::new(); m + n];
        for (e, cell) in basis.iter().enumerate() {
            adj[cell.i].push((m + cell.j, e));
            adj[m + cell.j].push((cell.i, e));
        }
        Tree { adj, m }
    }

    fn potentials(&self, c: &[Vec<f64>], basis: &[Cell], u: &mut [f64], v: &mut [f64]) {
        let total = self.adj.len();
        let mut seen = vec![false; total];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &(next, e) in &self.adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let cell = basis[e];
                if next >= self.m {
                    v[cell.j] = c[cell.i][cell.j] - u[cell.i];
                } else {
                    u[cell.i] = c[cell.i][cell.j] - v[cell.j];
                }
                stack.push(next);
            }
        }
    }

    /// Edges on the unique path from `from` to `to`, in order from `from`.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let total = self.adj.len();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(node) = stack.pop() {
            if node == to {
                break;
            }
            for &(next, e) in &self.adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, e));
                    stack.push(next);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = to;
        while node != from {
            let (prev, e) = parent[node].expect("basis is a spanning tree");
            edges.push(e);
            node = prev;
        }
        edges.reverse();
        edges
    }
}
