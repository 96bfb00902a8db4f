//! Helpers shared by the integration tests.

#![allow(dead_code)]

/// Solves `Σ f²/(λ − μ_i)² = t` for `λ` directly, bracketing from the best
/// mean upward by doubling.
pub fn oracle_lambda(means: &[f64], f: f64, t: f64) -> f64 {
    let best = means.iter().cloned().fold(f64::MIN, f64::max);
    let total = |lam: f64| means.iter().map(|m| (f / (lam - m)).powi(2)).sum::<f64>();
    let mut lo = best;
    let mut step = 1e-12_f64.max(f / t.sqrt() * 1e-3);
    while total(best + step) < t {
        step *= 0.5;
    }
    lo += step;
    let mut hi = best + 1.0;
    while total(hi) > t {
        hi = best + 2.0 * (hi - best);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
