//! Adaptive Simpson quadrature with Richardson error estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum bisection depth of a single panel.
pub const MAX_DEPTH: u32 = 40;

/// Panels are always split this many times before the error test is
/// trusted, so narrow features cannot hide between the first few nodes.
const MIN_DEPTH: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Total number of panel splits allowed across the whole integral.
    pub max_subdivisions: usize,
    /// Integration cutoff, in standard deviations beyond the extreme means.
    pub tail_sigma: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_subdivisions: 2_000_000,
            tail_sigma: 12.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::invalid("abs_tol", "must be positive"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::invalid("rel_tol", "must be non-negative"));
        }
        if !(self.tail_sigma >= 10.0) {
            return Err(Error::invalid("tail_sigma", "must be at least 10"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn certified(self, what: &str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NotCertified {
                what: what.to_string(),
                error_estimate: self.error_estimate,
            })
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` split at `breaks` (which must lie inside).
/// The absolute tolerance is shared between pieces in proportion to width.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> QuadResult {
    let mut points = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(b);

    let width = b - a;
    let mut out = QuadResult {
        value: 0.0,
        error_estimate: 0.0,
        converged: true,
        evaluations: 0,
    };
    let mut budget = spec.max_subdivisions;
    for w in points.windows(2) {
        let share = if width > 0.0 {
            (w[1] - w[0]) / width
        } else {
            1.0
        };
        let r = simpson_panel(
            &f,
            w[0],
            w[1],
            spec.abs_tol * share,
            spec.rel_tol,
            &mut budget,
        );
        out.value += r.value;
        out.error_estimate += r.error_estimate;
        out.converged &= r.converged;
        out.evaluations += r.evaluations;
    }
    out
}

fn simpson_panel<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    rel_tol: f64,
    budget: &mut usize,
) -> QuadResult {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let mut evaluations = 3;
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: simpson(a, b, fa, fm, fb),
        tol,
        depth: 0,
    }];
    let mut value = 0.0;
    let mut error_estimate = 0.0;
    let mut converged = true;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        evaluations += 2;
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let diff = left + right - p.whole;
        let local_tol = p.tol.max(rel_tol * (left + right).abs());
        let err = diff.abs() / 15.0;
        let out_of_room = p.depth + 1 >= MAX_DEPTH || *budget == 0;
        if (err <= local_tol && p.depth >= MIN_DEPTH) || out_of_room || !(err.is_finite()) {
            if err > local_tol || !err.is_finite() {
                converged = false;
            }
            value += left + right + diff / 15.0;
            error_estimate += err;
            continue;
        }
        *budget -= 1;
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
    }
    QuadResult {
        value,
        error_estimate,
        converged: converged && value.is_finite(),
        evaluations,
    }
}
