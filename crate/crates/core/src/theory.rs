//! Change-of-measure checks on the two-armed Gaussian gap family.
//!
//! For a pair of gaps `Δ < Δ'` and any policy, the path laws of the two
//! instances differ only through the pulls of arm 2, so their KL divergence
//! is `E[N₂]·(Δ − Δ')²/2`. With `Δ' = Δ + 1/√E[N₂]` that divergence is 1/2,
//! which through the Bretagnolle–Huber inequality forces
//! `max(S(Δ), S(Δ')) ≥ c·|g(Δ) − g(Δ')|` with `c = √(e^{-1/2}/2)/4`.
//! [`check_instance_pair`] estimates both sides by simulation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::make_gap_instance;
use crate::error::{Error, Result};
use crate::policies::{BonusTable, PolicySpec};
use crate::sim::{self, TrialSeeds};
use crate::stats::Moments;

/// `√(e^{-1/2}/2) / 4`.
pub fn variability_constant() -> f64 {
    ((-0.5f64).exp() / 2.0).sqrt() / 4.0
}

/// KL divergence between `N(mu, 1)` and `N(mu_prime, 1)`.
pub fn kl_gaussian(mu: f64, mu_prime: f64) -> f64 {
    let d = mu - mu_prime;
    0.5 * d * d
}

/// KL between the path laws of `ν(Δ)` and `ν(Δ')` when arm 2 is pulled `g`
/// times in expectation over `T` rounds.
///
/// Both best arms are `N(0, 1)`, so the `(T − g)` term vanishes.
pub fn divergence_decomposition(delta: f64, delta_prime: f64, g: f64, horizon: u64) -> Result<f64> {
    if !(0.0..=horizon as f64).contains(&g) {
        return Err(Error::param(
            "g",
            format!("must lie in [0, T = {horizon}], got {g}"),
        ));
    }
    let best = kl_gaussian(0.0, 0.0);
    Ok((horizon as f64 - g) * best + g * kl_gaussian(-delta, -delta_prime))
}

/// Bretagnolle–Huber lower bound `½ e^{-kl}` on `P(A) + Q(Aᶜ)`.
pub fn bh_bound(kl: f64) -> Result<f64> {
    if !(kl >= 0.0) {
        return Err(Error::param("kl", format!("must be >= 0, got {kl}")));
    }
    Ok(0.5 * (-kl).exp())
}

/// Monte Carlo estimate of `E_Δ[log dP_Δ/dP_Δ']` from observed arm-2 rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodRatioCheck {
    pub delta: f64,
    pub delta_prime: f64,
    pub n_trials: u64,
    /// Mean pathwise log-likelihood ratio.
    pub mean_llr: f64,
    pub se_llr: f64,
    /// Mean arm-2 pull count of the same trials.
    pub g_hat: f64,
    /// [`divergence_decomposition`] at `g_hat`.
    pub formula: f64,
    /// Standard error of `mean_llr − formula` (paired over trials).
    pub se_diff: f64,
}

impl LikelihoodRatioCheck {
    /// `|mean_llr − formula|` in units of `se_diff`.
    pub fn z(&self) -> f64 {
        if self.se_diff == 0.0 {
            if self.mean_llr == self.formula {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean_llr - self.formula).abs() / self.se_diff
        }
    }
}

/// Runs `spec` on `ν(Δ)` and accumulates, per trial, the log-likelihood ratio
/// of the arm-2 rewards under `ν(Δ)` against `ν(Δ')`.
pub fn likelihood_ratio_check(
    spec: &PolicySpec,
    delta: f64,
    delta_prime: f64,
    horizon: u64,
    n_trials: u32,
    master_seed: u64,
) -> Result<LikelihoodRatioCheck> {
    if n_trials < 2 {
        return Err(Error::param("n_trials", "need at least 2 trials"));
    }
    let inst = make_gap_instance(delta)?;
    make_gap_instance(delta_prime)?;
    spec.validate()?;
    let bonus = BonusTable::for_spec(spec, horizon);
    let per_trial: Vec<(f64, f64, f64)> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = sim::trial_seed(master_seed, 0, i);
            let seeds = TrialSeeds::derive(seed, 2);
            let mut llr = 0.0;
            let counts =
                sim::simulate_with(&inst, spec, horizon, &seeds, bonus.clone(), |arm, x| {
                    if arm == 1 {
                        // log N(x; −Δ, 1) − log N(x; −Δ', 1)
                        llr += 0.5 * ((x + delta_prime).powi(2) - (x + delta).powi(2));
                    }
                })?;
            let n2 = counts[1] as f64;
            Ok((llr, n2, llr - n2 * kl_gaussian(delta, delta_prime)))
        })
        .collect::<Result<_>>()?;
    let llr: Moments = per_trial.iter().map(|p| p.0).collect();
    let n2: Moments = per_trial.iter().map(|p| p.1).collect();
    let diff: Moments = per_trial.iter().map(|p| p.2).collect();
    Ok(LikelihoodRatioCheck {
        delta,
        delta_prime,
        n_trials: n_trials as u64,
        mean_llr: llr.mean(),
        se_llr: llr.se(),
        g_hat: n2.mean(),
        formula: divergence_decomposition(delta, delta_prime, n2.mean(), horizon)?,
        se_diff: diff.se(),
    })
}

/// Both sides of the variability and Bretagnolle–Huber inequalities for the
/// pair `(Δ, Δ' = Δ + 1/√ĝ(Δ))`, with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub policy: String,
    pub horizon: u64,
    pub n_trials: u64,
    pub delta: f64,
    pub delta_prime: f64,
    /// Estimated `E[N₂]` under `Δ` and `Δ'`.
    pub g_hat: [f64; 2],
    pub g_se: [f64; 2],
    /// Estimated `S_T` under `Δ` and `Δ'`.
    pub s_hat: [f64; 2],
    pub s_se: [f64; 2],
    /// `max(s_hat)`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `c·|g_hat[0] − g_hat[1]|`.
    pub rhs: f64,
    pub rhs_se: f64,
    pub midpoint: f64,
    /// `P(N < midpoint)` under the larger-`g` instance plus
    /// `P(N ≥ midpoint)` under the other.
    pub bh_lhs: f64,
    pub bh_se: f64,
    /// `max(½e^{-KL(P‖P')}, ½e^{-KL(P'‖P)})`.
    pub bh_rhs: f64,
    /// Divergences `KL(P_Δ‖P_Δ')` and `KL(P_Δ'‖P_Δ)`.
    pub kl: [f64; 2],
    /// `lhs ≥ rhs` within 3 combined standard errors.
    pub lemma_holds: bool,
    pub bh_holds: bool,
    /// `lhs − rhs` and `bh_lhs − bh_rhs`.
    pub lemma_slack: f64,
    pub bh_slack: f64,
}

/// Tolerance, in combined standard errors, used for the pass flags.
pub const PAIR_SE_TOL: f64 = 3.0;

/// Standard error of a sample standard deviation under a normal approximation.
fn sd_se(m: &Moments) -> f64 {
    if m.count() < 2 {
        0.0
    } else {
        m.sd() / (2.0 * (m.count() - 1) as f64).sqrt()
    }
}

fn proportion_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Two-phase pair experiment: estimate `g(Δ)`, place `Δ'`, then estimate
/// everything under both instances.
pub fn check_instance_pair(
    spec: &PolicySpec,
    delta: f64,
    horizon: u64,
    n_trials: u32,
    master_seed: u64,
) -> Result<PairReport> {
    if !(delta >= 0.0) {
        return Err(Error::param("delta", format!("must be >= 0, got {delta}")));
    }
    if horizon < 2 {
        return Err(Error::param("T", "must be >= 2"));
    }
    if n_trials < 2 {
        return Err(Error::param("n_trials", "need at least 2 trials"));
    }
    let inst_a = make_gap_instance(delta)?;
    let rec_a = sim::run_trials(&inst_a, spec, horizon, n_trials, master_seed, 0)?;
    let n_a: Vec<f64> = rec_a.iter().map(|r| r.counts[1] as f64).collect();
    let m_a: Moments = n_a.iter().copied().collect();
    if m_a.mean() <= 0.0 {
        return Err(Error::param(
            "policy",
            "arm 2 is never pulled; Δ' undefined",
        ));
    }
    let delta_prime = delta + 1.0 / m_a.mean().sqrt();

    let inst_b = make_gap_instance(delta_prime)?;
    let rec_b = sim::run_trials(&inst_b, spec, horizon, n_trials, master_seed, 1)?;
    let n_b: Vec<f64> = rec_b.iter().map(|r| r.counts[1] as f64).collect();
    let m_b: Moments = n_b.iter().copied().collect();

    let (g_a, g_b) = (m_a.mean(), m_b.mean());
    let c = variability_constant();
    let s = [m_a.sd(), m_b.sd()];
    let s_se = [sd_se(&m_a), sd_se(&m_b)];
    let (lhs, lhs_se) = if s[0] >= s[1] {
        (s[0], s_se[0])
    } else {
        (s[1], s_se[1])
    };
    let rhs = c * (g_a - g_b).abs();
    let rhs_se = c * (m_a.se().powi(2) + m_b.se().powi(2)).sqrt();

    let midpoint = 0.5 * (g_a + g_b);
    let frac = |xs: &[f64], pred: &dyn Fn(f64) -> bool| {
        xs.iter().filter(|x| pred(**x)).count() as f64 / xs.len() as f64
    };
    // The event {N < midpoint} is taken under the instance with the larger g.
    let (below, at_or_above) = if g_a >= g_b {
        (
            frac(&n_a, &|x| x < midpoint),
            frac(&n_b, &|x| x >= midpoint),
        )
    } else {
        (
            frac(&n_b, &|x| x < midpoint),
            frac(&n_a, &|x| x >= midpoint),
        )
    };
    let bh_lhs = below + at_or_above;
    let bh_se = (proportion_se(below, n_trials as u64).powi(2)
        + proportion_se(at_or_above, n_trials as u64).powi(2))
    .sqrt();
    let kl = [
        divergence_decomposition(delta, delta_prime, g_a, horizon)?,
        divergence_decomposition(delta_prime, delta, g_b, horizon)?,
    ];
    let bh_rhs = bh_bound(kl[0])?.max(bh_bound(kl[1])?);

    let lemma_tol = PAIR_SE_TOL * (lhs_se.powi(2) + rhs_se.powi(2)).sqrt();
    Ok(PairReport {
        policy: spec.name().to_string(),
        horizon,
        n_trials: n_trials as u64,
        delta,
        delta_prime,
        g_hat: [g_a, g_b],
        g_se: [m_a.se(), m_b.se()],
        s_hat: s,
        s_se,
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        midpoint,
        bh_lhs,
        bh_se,
        bh_rhs,
        kl,
        lemma_holds: lhs - rhs >= -lemma_tol,
        bh_holds: bh_lhs - bh_rhs >= -PAIR_SE_TOL * bh_se,
        lemma_slack: lhs - rhs,
        bh_slack: bh_lhs - bh_rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_kl() {
        assert_eq!(kl_gaussian(0.0, 0.0), 0.0);
        assert_eq!(kl_gaussian(0.0, -1.0), 0.5);
        assert_relative_eq!(kl_gaussian(0.3, -0.2), 0.125, epsilon = 1e-15);
        assert_eq!(kl_gaussian(0.3, -0.2), kl_gaussian(-0.2, 0.3));
        assert!(kl_gaussian(0.1, 0.1 + 1e-9) > 0.0);
    }

    #[test]
    fn decomposition() {
        assert_eq!(divergence_decomposition(0.4, 0.4, 50.0, 100).unwrap(), 0.0);
        assert_relative_eq!(
            divergence_decomposition(0.0, 0.1, 100.0, 1000).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(divergence_decomposition(0.0, 0.1, 101.0, 100).is_err());
        assert!(divergence_decomposition(0.0, 0.1, -1.0, 100).is_err());
    }

    #[test]
    fn bretagnolle_huber() {
        assert_eq!(bh_bound(0.0).unwrap(), 0.5);
        assert_relative_eq!(bh_bound(0.5).unwrap(), 0.303_265_33, epsilon = 1e-8);
        assert!(bh_bound(800.0).unwrap() < 1e-300);
        assert!(bh_bound(-1.0).is_err());
    }

    #[test]
    fn constant_value() {
        assert_relative_eq!(variability_constant(), 0.137_673_8, epsilon = 1e-7);
    }

    #[test]
    fn round_robin_pair_is_trivial() {
        let r = check_instance_pair(&PolicySpec::RoundRobin, 0.3, 100, 20, 5).unwrap();
        assert_eq!(r.g_hat, [50.0, 50.0]);
        assert_eq!(r.rhs, 0.0);
        assert_eq!(r.lhs, 0.0);
        assert!(r.lemma_holds && r.bh_holds);
        assert_relative_eq!(r.delta_prime, 0.3 + 1.0 / 50f64.sqrt(), epsilon = 1e-15);
    }
}
