//! Fluid pull-count benchmark.
//!
//! For means `μ_1..μ_K`, bonus level `f_t > 0` and budget `t`, the fluid
//! counts `n_i` equalize the UCB indices and exhaust the budget:
//!
//! ```text
//! μ_i + f_t / √n_i = λ   for every i,      Σ_i n_i = t.
//! ```
//!
//! Writing `n_i = (f_t / (λ − μ_i))²` reduces the system to one monotone
//! scalar equation in `λ`, solved here by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::ExplorationFunction;

/// Hard cap on bisection steps; 2^-200 shrinkage is far below any tolerance.
pub const MAX_BISECTION_ITERS: usize = 200;
/// Relative width at which the bracket on `λ − μ*` is accepted.
pub const REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidSolution {
    /// Fluid pull counts, in the order of the input means.
    pub n: Vec<f64>,
    /// Common index level `λ > μ*`.
    pub lambda: f64,
    /// `|Σ n_i − t|`.
    pub residual: f64,
    pub t: f64,
    pub f_t: f64,
}

impl FluidSolution {
    /// Largest `|μ_i + f_t/√n_i − λ|` over arms.
    pub fn index_gap(&self, means: &[f64]) -> f64 {
        means
            .iter()
            .zip(&self.n)
            .map(|(m, n)| (m + self.f_t / n.sqrt() - self.lambda).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves the fluid system for one budget.
pub fn solve_fluid(means: &[f64], f_t: f64, t: f64) -> Result<FluidSolution> {
    let k = means.len();
    if k < 2 {
        return Err(Error::param("means", format!("need K >= 2 arms, got {k}")));
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::param("means", "must be finite"));
    }
    if !(f_t > 0.0 && f_t.is_finite()) {
        return Err(Error::param("f_t", format!("must be > 0, got {f_t}")));
    }
    if !(t >= k as f64) || !t.is_finite() {
        return Err(Error::param("t", format!("must be >= K = {k}, got {t}")));
    }

    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gaps: Vec<f64> = means.iter().map(|m| best - m).collect();
    // At x = f_t/√t the best arm alone already takes n = t, so the sum is
    // ≥ t. At x = f_t·√(K/t) every arm takes at most t/K, so the sum is ≤ t.
    // Both endpoints are nudged outward so rounding cannot flip their signs.
    let lo = f_t / t.sqrt() * (1.0 - 1e-9);
    let hi = f_t * (k as f64 / t).sqrt() * (1.0 + 1e-9);
    let x = bisect(&gaps, f_t, t, lo, hi)?;
    let f2 = f_t * f_t;
    let n: Vec<f64> = gaps.iter().map(|g| f2 / ((x + g) * (x + g))).collect();
    let residual = (n.iter().sum::<f64>() - t).abs();
    Ok(FluidSolution {
        n,
        lambda: best + x,
        residual,
        t,
        f_t,
    })
}

/// Root in `x = λ − μ*` of `Σ f²/(x + gap_i)² = t` within `[lo, hi]`.
fn bisect(gaps: &[f64], f_t: f64, t: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let f2 = f_t * f_t;
    // Strictly decreasing in x.
    let excess = |x: f64| gaps.iter().map(|g| f2 / ((x + g) * (x + g))).sum::<f64>() - t;
    if !(excess(lo) >= 0.0 && excess(hi) <= 0.0) {
        return Err(Error::Internal(format!(
            "fluid bracket [{lo}, {hi}] does not enclose a root"
        )));
    }
    for _ in 0..MAX_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= REL_TOL * lo {
            return Ok(0.5 * (lo + hi));
        }
        if excess(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Internal(format!(
        "fluid bisection did not converge in {MAX_BISECTION_ITERS} steps"
    )))
}

/// One fluid solution per grid point with `f_t = f(t)`.
pub fn fluid_trajectory(
    means: &[f64],
    f: &ExplorationFunction,
    t_grid: &[u64],
) -> Result<Vec<FluidSolution>> {
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("t_grid", "must be strictly increasing"));
    }
    t_grid
        .iter()
        .map(|&t| solve_fluid(means, f.eval(t as f64), t as f64))
        .collect()
}

/// `√2 (K−1) (ln T) n₂ / f(T)`: the standard-deviation ceiling on pull counts
/// from the UCB-f variance analysis.
pub fn predicted_variability_bound(n2: f64, f_t: f64, horizon: u64, k: usize) -> f64 {
    debug_assert!(n2 > 0.0 && f_t > 0.0 && horizon > 0 && k > 0);
    std::f64::consts::SQRT_2 * (k as f64 - 1.0) * (horizon as f64).ln() * n2 / f_t
}

/// Position of the arm with the second-largest mean (ties by lower index).
///
/// With means sorted in decreasing order this is "arm 2", whose fluid count
/// enters [`predicted_variability_bound`].
pub fn runner_up(means: &[f64]) -> usize {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    order[1.min(order.len() - 1)]
}
