//! Arm-selection policies: UCB-f, UCB1, Thompson sampling and the
//! non-adaptive / myopic baselines.
//!
//! Every policy starts with the same initialization sweep (round `t ≤ K`
//! pulls arm `t`), so each arm has been observed once before any index is
//! formed. All argmax operations break ties uniformly at random using the
//! policy's own stream; no randomness is consumed when the maximizer is
//! unique.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// `f(t) = a · t^γ · (ln t)^β` for `t ≥ 2`, clamped to `f(2)` below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationFunction {
    pub a: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl ExplorationFunction {
    pub fn new(a: f64, gamma: f64, beta: f64) -> Result<Self> {
        let f = Self { a, gamma, beta };
        f.check_domain()?;
        Ok(f)
    }

    /// UCB1's bonus `√(2 ln t)`.
    pub fn ucb1() -> Self {
        Self {
            a: std::f64::consts::SQRT_2,
            gamma: 0.0,
            beta: 0.5,
        }
    }

    /// `t^γ ln t`, the family swept along the frontier.
    pub fn power_log(gamma: f64) -> Self {
        Self {
            a: 1.0,
            gamma,
            beta: 1.0,
        }
    }

    fn check_domain(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::param("f.a", format!("must be > 0, got {}", self.a)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(
                "f.gamma",
                format!("must be >= 0, got {}", self.gamma),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::param(
                "f.beta",
                format!("must be >= 0, got {}", self.beta),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = if t < 2.0 { 2.0 } else { t };
        let lt = t.ln();
        let log_part = if self.beta == 0.0 {
            1.0
        } else if self.beta == 1.0 {
            lt
        } else if self.beta == 0.5 {
            lt.sqrt()
        } else {
            lt.powf(self.beta)
        };
        let pow_part = if self.gamma == 0.0 {
            1.0
        } else {
            (self.gamma * lt).exp()
        };
        self.a * pow_part * log_part
    }

    /// Point after which both `f(t)` and `√t / f(t)` are non-decreasing, or
    /// `None` if `√t / f(t)` eventually decreases.
    ///
    /// `d/dt ln(√t/f) = ((1/2 − γ) ln t − β) / (t ln t)`, which is
    /// non-negative from `t = exp(β / (1/2 − γ))` on when `γ < 1/2`.
    /// `f` itself is non-decreasing for `t > 1` whenever `γ, β ≥ 0`.
    pub fn monotone_from(&self) -> Option<f64> {
        let slack = 0.5 - self.gamma;
        if slack > 0.0 {
            Some((self.beta / slack).exp().max(2.0))
        } else if slack == 0.0 && self.beta == 0.0 {
            Some(2.0)
        } else {
            None
        }
    }

    /// Whether `f(t) / ln t` is non-decreasing for all large `t`.
    ///
    /// Holds iff `γ > 0`, or `γ = 0` and `β ≥ 1`. UCB1's `√(2 ln t)` fails it.
    pub fn log_ratio_nondecreasing(&self) -> bool {
        self.gamma > 0.0 || self.beta >= 1.0
    }
}

/// A failed exploration-function condition.
#[derive(Debug, Clone, PartialEq)]
pub enum FViolation {
    Domain(String),
    SqrtRatioDecreasing,
}

impl fmt::Display for FViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FViolation::Domain(s) => write!(f, "{s}"),
            FViolation::SqrtRatioDecreasing => write!(f, "√t/f(t) decreasing"),
        }
    }
}

/// Checks the conditions the UCB-f guarantees rest on. With `a > 0` and
/// `γ, β ≥ 0`, `f` is non-decreasing; what remains is that `√t/f(t)` is
/// eventually non-decreasing. Empty iff valid.
pub fn validate_exploration_function(f: &ExplorationFunction) -> Vec<FViolation> {
    let mut out = Vec::new();
    if let Err(e) = f.check_domain() {
        out.push(FViolation::Domain(e.to_string()));
        return out;
    }
    if f.monotone_from().is_none() {
        out.push(FViolation::SqrtRatioDecreasing);
    }
    out
}

/// Policy choice plus its kind-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicySpec", into = "RawPolicySpec")]
pub enum PolicySpec {
    Ucbf {
        f: ExplorationFunction,
    },
    Ucb1,
    TsBernoulli,
    TsGaussian,
    RoundRobin,
    Etc {
        explore_rounds: u64,
    },
    Greedy,
    /// UCB-f, then round-robin over the final `⌈T^{1/2+α}⌉` rounds.
    Hybrid {
        f: ExplorationFunction,
        switch_alpha: f64,
    },
}

/// Flat config form; each kind accepts exactly its own fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicySpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    f: Option<ExplorationFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    explore_rounds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    switch_alpha: Option<f64>,
}

impl TryFrom<RawPolicySpec> for PolicySpec {
    type Error = String;

    fn try_from(raw: RawPolicySpec) -> std::result::Result<Self, String> {
        let RawPolicySpec {
            kind,
            f,
            explore_rounds,
            switch_alpha,
        } = raw;
        let allowed: &[&str] = match kind.as_str() {
            "ucbf" => &["f"],
            "hybrid" => &["f", "switch_alpha"],
            "etc" => &["explore_rounds"],
            _ => &[],
        };
        for (name, present) in [
            ("f", f.is_some()),
            ("explore_rounds", explore_rounds.is_some()),
            ("switch_alpha", switch_alpha.is_some()),
        ] {
            if present && !allowed.contains(&name) {
                return Err(format!("field `{name}` does not apply to kind `{kind}`"));
            }
        }
        let need = |name: &str| format!("kind `{kind}` requires field `{name}`");
        Ok(match kind.as_str() {
            "ucbf" => PolicySpec::Ucbf {
                f: f.ok_or_else(|| need("f"))?,
            },
            "ucb1" => PolicySpec::Ucb1,
            "ts_bernoulli" => PolicySpec::TsBernoulli,
            "ts_gaussian" => PolicySpec::TsGaussian,
            "round_robin" => PolicySpec::RoundRobin,
            "etc" => PolicySpec::Etc {
                explore_rounds: explore_rounds.ok_or_else(|| need("explore_rounds"))?,
            },
            "greedy" => PolicySpec::Greedy,
            "hybrid" => PolicySpec::Hybrid {
                f: f.ok_or_else(|| need("f"))?,
                switch_alpha: switch_alpha.ok_or_else(|| need("switch_alpha"))?,
            },
            other => return Err(format!("unknown policy kind `{other}`")),
        })
    }
}

impl From<PolicySpec> for RawPolicySpec {
    fn from(spec: PolicySpec) -> Self {
        let mut raw = RawPolicySpec {
            kind: spec.name().to_string(),
            f: spec.exploration().copied(),
            explore_rounds: None,
            switch_alpha: None,
        };
        match spec {
            PolicySpec::Etc { explore_rounds } => raw.explore_rounds = Some(explore_rounds),
            PolicySpec::Hybrid { switch_alpha, .. } => raw.switch_alpha = Some(switch_alpha),
            _ => {}
        }
        raw
    }
}

impl PolicySpec {
    pub fn ucbf(f: ExplorationFunction) -> Self {
        PolicySpec::Ucbf { f }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Ucbf { .. } => "ucbf",
            PolicySpec::Ucb1 => "ucb1",
            PolicySpec::TsBernoulli => "ts_bernoulli",
            PolicySpec::TsGaussian => "ts_gaussian",
            PolicySpec::RoundRobin => "round_robin",
            PolicySpec::Etc { .. } => "etc",
            PolicySpec::Greedy => "greedy",
            PolicySpec::Hybrid { .. } => "hybrid",
        }
    }

    pub fn exploration(&self) -> Option<&ExplorationFunction> {
        match self {
            PolicySpec::Ucbf { f } | PolicySpec::Hybrid { f, .. } => Some(f),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.exploration() {
            let report = validate_exploration_function(f);
            if !report.is_empty() {
                let msg: Vec<String> = report.iter().map(ToString::to_string).collect();
                return Err(Error::param("f", msg.join("; ")));
            }
        }
        match *self {
            PolicySpec::Etc { explore_rounds: 0 } => {
                Err(Error::param("explore_rounds", "must be >= 1"))
            }
            PolicySpec::Hybrid { switch_alpha, .. }
                if !(switch_alpha > 0.0 && switch_alpha < 0.5) =>
            {
                Err(Error::param(
                    "switch_alpha",
                    format!("must lie in (0, 1/2), got {switch_alpha}"),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Last round played by UCB-f under the hybrid rule: `T − ⌈T^{1/2+α}⌉`.
    pub fn hybrid_switch(horizon: u64, alpha: f64) -> u64 {
        let tail = (horizon as f64).powf(0.5 + alpha).ceil() as u64;
        horizon.saturating_sub(tail)
    }
}

/// `f(t)` for `t = 0..=horizon`, shared read-only across trials.
#[derive(Debug, Clone)]
pub struct BonusTable(Arc<[f64]>);

impl BonusTable {
    pub fn new(f: &ExplorationFunction, horizon: u64) -> Self {
        Self((0..=horizon).map(|t| f.eval(t as f64)).collect())
    }

    /// Table for the policy's exploration function, if it has one.
    pub fn for_spec(spec: &PolicySpec, horizon: u64) -> Option<Self> {
        spec.exploration().map(|f| Self::new(f, horizon))
    }
}

#[derive(Debug, Clone)]
enum KindState {
    None,
    TsBernoulli {
        successes: Vec<f64>,
        failures: Vec<f64>,
    },
    Etc {
        committed: Option<usize>,
    },
    Hybrid {
        switch_after: u64,
    },
}

/// Mutable per-trial state: round counter, pull counts and reward sums.
#[derive(Debug, Clone)]
pub struct PolicyState {
    spec: PolicySpec,
    k: usize,
    horizon: u64,
    t: u64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    means: Vec<f64>,
    inv_sqrt: Vec<f64>,
    kind: KindState,
    bonus: Option<BonusTable>,
    initialized: bool,
}

impl PolicyState {
    /// Uninitialized state; [`PolicyState::init`] must run before selection.
    pub fn new(spec: PolicySpec) -> Self {
        Self {
            spec,
            k: 0,
            horizon: 0,
            t: 1,
            counts: Vec::new(),
            sums: Vec::new(),
            means: Vec::new(),
            inv_sqrt: Vec::new(),
            kind: KindState::None,
            bonus: None,
            initialized: false,
        }
    }

    pub fn start(spec: PolicySpec, k: usize, horizon: u64) -> Result<Self> {
        let mut s = Self::new(spec);
        s.init(k, horizon)?;
        Ok(s)
    }

    /// Attaches precomputed `f(t)` values; rounds beyond the table fall back
    /// to direct evaluation.
    pub fn with_bonus_table(mut self, table: BonusTable) -> Self {
        self.bonus = Some(table);
        self
    }

    pub fn init(&mut self, k: usize, horizon: u64) -> Result<()> {
        self.spec.validate()?;
        if k < 1 {
            return Err(Error::param("K", "need at least one arm"));
        }
        self.k = k;
        self.horizon = horizon;
        self.t = 1;
        self.counts = vec![0; k];
        self.sums = vec![0.0; k];
        self.means = vec![0.0; k];
        self.inv_sqrt = vec![f64::INFINITY; k];
        self.kind = match self.spec {
            PolicySpec::TsBernoulli => KindState::TsBernoulli {
                successes: vec![0.0; k],
                failures: vec![0.0; k],
            },
            PolicySpec::Etc { .. } => KindState::Etc { committed: None },
            PolicySpec::Hybrid { switch_alpha, .. } => KindState::Hybrid {
                switch_after: PolicySpec::hybrid_switch(horizon, switch_alpha),
            },
            _ => KindState::None,
        };
        self.initialized = true;
        Ok(())
    }

    pub fn spec(&self) -> &PolicySpec {
        &self.spec
    }

    /// Current (1-based) round index.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Empirical mean of `arm` (0 before its first pull).
    #[inline]
    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    /// `(α, β)` of arm `arm`'s Beta posterior under TS-Bernoulli.
    pub fn beta_posterior(&self, arm: usize) -> Option<(f64, f64)> {
        match &self.kind {
            KindState::TsBernoulli {
                successes,
                failures,
            } => Some((1.0 + successes[arm], 1.0 + failures[arm])),
            _ => None,
        }
    }

    /// Overwrites counts and sums, e.g. to evaluate an index at a given
    /// history. Counts must sum to `t − 1`.
    pub fn set_history(&mut self, t: u64, counts: &[u64], sums: &[f64]) -> Result<()> {
        if !self.initialized {
            return Err(Error::State("state not initialized".into()));
        }
        if counts.len() != self.k || sums.len() != self.k {
            return Err(Error::param("counts", "length must equal K"));
        }
        if counts.iter().sum::<u64>() + 1 != t {
            return Err(Error::param("counts", "must sum to t - 1"));
        }
        self.t = t;
        self.counts.copy_from_slice(counts);
        self.sums.copy_from_slice(sums);
        for i in 0..self.k {
            self.refresh(i);
        }
        if let KindState::TsBernoulli {
            successes,
            failures,
        } = &mut self.kind
        {
            for i in 0..counts.len() {
                successes[i] = sums[i].clamp(0.0, counts[i] as f64);
                failures[i] = counts[i] as f64 - successes[i];
            }
        }
        Ok(())
    }

    /// Chooses the arm for round `t` (0-based index).
    pub fn select_arm<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        if !self.initialized {
            return Err(Error::State("select_arm before init".into()));
        }
        let t = self.t;
        let k = self.k as u64;
        if t <= k {
            return Ok((t - 1) as usize);
        }
        let arm = match self.spec {
            PolicySpec::RoundRobin => ((t - 1) % k) as usize,
            PolicySpec::Ucbf { f } => self.ucbf_arm(&f, rng),
            PolicySpec::Ucb1 => {
                let lt2 = 2.0 * (t as f64).ln();
                argmax_by(self.k, rng, |i| {
                    self.mean(i) + (lt2 / self.counts[i] as f64).sqrt()
                })
            }
            PolicySpec::Greedy => argmax_by(self.k, rng, |i| self.mean(i)),
            PolicySpec::TsGaussian => {
                let draws: Vec<f64> = (0..self.k)
                    .map(|i| self.mean(i) + rng::standard_normal(rng) * self.inv_sqrt[i])
                    .collect();
                argmax_by(self.k, rng, |i| draws[i])
            }
            PolicySpec::TsBernoulli => {
                let KindState::TsBernoulli {
                    successes,
                    failures,
                } = &self.kind
                else {
                    unreachable!("ts state")
                };
                let mut draws = Vec::with_capacity(self.k);
                for i in 0..self.k {
                    let beta = Beta::new(1.0 + successes[i], 1.0 + failures[i])
                        .map_err(|e| Error::Internal(format!("beta posterior: {e}")))?;
                    draws.push(beta.sample(rng));
                }
                argmax_by(self.k, rng, |i| draws[i])
            }
            PolicySpec::Etc { explore_rounds } => {
                if t <= explore_rounds.saturating_mul(k) {
                    ((t - 1) % k) as usize
                } else {
                    let committed = match self.kind {
                        KindState::Etc { committed } => committed,
                        _ => unreachable!("etc state"),
                    };
                    match committed {
                        Some(a) => a,
                        None => {
                            let a = argmax_by(self.k, rng, |i| self.mean(i));
                            self.kind = KindState::Etc { committed: Some(a) };
                            a
                        }
                    }
                }
            }
            PolicySpec::Hybrid { f, .. } => {
                let switch_after = match self.kind {
                    KindState::Hybrid { switch_after } => switch_after,
                    _ => unreachable!("hybrid state"),
                };
                if t > switch_after {
                    ((t - switch_after - 1) % k) as usize
                } else {
                    self.ucbf_arm(&f, rng)
                }
            }
        };
        Ok(arm)
    }

    #[inline]
    fn ucbf_arm<R: RngCore + ?Sized>(&self, f: &ExplorationFunction, rng: &mut R) -> usize {
        let ft = match &self.bonus {
            Some(b) if (self.t as usize) < b.0.len() => b.0[self.t as usize],
            _ => f.eval(self.t as f64),
        };
        argmax_by(self.k, rng, |i| self.mean(i) + ft * self.inv_sqrt[i])
    }

    #[inline]
    fn refresh(&mut self, arm: usize) {
        let n = self.counts[arm] as f64;
        if n > 0.0 {
            self.means[arm] = self.sums[arm] / n;
            self.inv_sqrt[arm] = 1.0 / n.sqrt();
        } else {
            self.means[arm] = 0.0;
            self.inv_sqrt[arm] = f64::INFINITY;
        }
    }

    /// Records `reward` for `arm` and advances the round counter.
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if !self.initialized {
            return Err(Error::State("update before init".into()));
        }
        if arm >= self.k {
            return Err(Error::param(
                "arm",
                format!("index {arm} out of range for K = {}", self.k),
            ));
        }
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.refresh(arm);
        if let KindState::TsBernoulli {
            successes,
            failures,
        } = &mut self.kind
        {
            // Rewards outside {0, 1} count fractionally after clamping.
            let r = reward.clamp(0.0, 1.0);
            successes[arm] += r;
            failures[arm] += 1.0 - r;
        }
        self.t += 1;
        Ok(())
    }
}

/// Index of the maximum of `score(0..k)`, ties broken uniformly at random by
/// reservoir sampling. Draws from `rng` only when the running maximum is
/// matched.
#[inline]
fn argmax_by<R, F>(k: usize, rng: &mut R, mut score: F) -> usize
where
    R: RngCore + ?Sized,
    F: FnMut(usize) -> f64,
{
    let mut best = 0;
    let mut best_val = score(0);
    let mut ties = 1usize;
    for i in 1..k {
        let v = score(i);
        if v > best_val {
            best = i;
            best_val = v;
            ties = 1;
        } else if v == best_val {
            ties += 1;
            if rng::index(rng, ties) == 0 {
                best = i;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fresh(spec: PolicySpec, k: usize, horizon: u64) -> PolicyState {
        PolicyState::start(spec, k, horizon).unwrap()
    }

    #[test]
    fn round_robin_cycles() {
        let mut s = fresh(PolicySpec::RoundRobin, 2, 10);
        let mut r = rng::stream(0);
        s.set_history(5, &[2, 2], &[0.0, 0.0]).unwrap();
        // Round 5 → arm 1 (index 0).
        assert_eq!(s.select_arm(&mut r).unwrap(), 0);
    }

    #[test]
    fn ucbf_equal_bonus_prefers_larger_mean() {
        let mut s = fresh(PolicySpec::ucbf(ExplorationFunction::ucb1()), 2, 10);
        s.set_history(3, &[1, 1], &[0.7, 0.2]).unwrap();
        assert_eq!(s.select_arm(&mut rng::stream(0)).unwrap(), 0);
    }

    #[test]
    fn ucbf_bonus_outweighs_mean_gap() {
        // index_1 = 0.5 + √(2 ln 100)/√90 ≈ 0.8199, index_2 = 0.1 + √(2 ln 100)/3 ≈ 1.1116.
        let f = ExplorationFunction::ucb1();
        let ft = f.eval(100.0);
        assert_relative_eq!(0.5 + ft / 90f64.sqrt(), 0.819_902, epsilon = 1e-5);
        assert_relative_eq!(0.1 + ft / 3.0, 1.111_618, epsilon = 1e-5);
        let mut s = fresh(PolicySpec::ucbf(f), 2, 1000);
        s.set_history(100, &[90, 9], &[45.0, 0.9]).unwrap();
        assert_eq!(s.select_arm(&mut rng::stream(0)).unwrap(), 1);
    }

    #[test]
    fn initialization_sweep_then_counts() {
        for spec in [
            PolicySpec::Greedy,
            PolicySpec::TsGaussian,
            PolicySpec::TsBernoulli,
            PolicySpec::Ucb1,
        ] {
            let mut s = fresh(spec, 3, 20);
            let mut r = rng::stream(5);
            for t in 1..=3 {
                assert_eq!(s.select_arm(&mut r).unwrap(), t - 1);
                s.update(t - 1, 0.5).unwrap();
            }
            assert_eq!(s.counts(), &[1, 1, 1]);
            assert_eq!(s.t(), 4);
        }
    }

    #[test]
    fn running_mean_update() {
        let mut s = fresh(PolicySpec::Greedy, 2, 10);
        s.set_history(3, &[1, 1], &[0.5, 0.2]).unwrap();
        s.update(0, 0.3).unwrap();
        assert_eq!(s.counts(), &[2, 1]);
        assert_relative_eq!(s.mean(0), 0.4);
        assert_eq!(s.t(), 4);
    }

    #[test]
    fn beta_posterior_update() {
        let mut s = fresh(PolicySpec::TsBernoulli, 2, 10);
        s.update(1, 1.0).unwrap();
        assert_eq!(s.beta_posterior(1), Some((2.0, 1.0)));
        assert_eq!(s.beta_posterior(0), Some((1.0, 1.0)));
    }

    #[test]
    fn conservation_over_a_run() {
        let mut s = fresh(
            PolicySpec::ucbf(ExplorationFunction::power_log(0.25)),
            3,
            500,
        );
        let mut r = rng::stream(11);
        for _ in 0..500 {
            let a = s.select_arm(&mut r).unwrap();
            let x = rng::standard_normal(&mut r);
            s.update(a, x).unwrap();
        }
        assert_eq!(s.counts().iter().sum::<u64>(), 500);
        assert_eq!(s.t(), 501);
        assert!(s.counts().iter().all(|&c| c >= 1));
    }

    #[test]
    fn errors() {
        let mut s = PolicyState::new(PolicySpec::RoundRobin);
        assert!(matches!(
            s.select_arm(&mut rng::stream(0)),
            Err(Error::State(_))
        ));
        s.init(2, 10).unwrap();
        assert!(matches!(s.update(2, 0.0), Err(Error::Parameter { .. })));
        assert!(PolicyState::start(PolicySpec::Etc { explore_rounds: 0 }, 2, 10).is_err());
        let bad = PolicySpec::Hybrid {
            f: ExplorationFunction::ucb1(),
            switch_alpha: 0.5,
        };
        assert!(PolicyState::start(bad, 2, 10).is_err());
        let bad_f = PolicySpec::ucbf(ExplorationFunction {
            a: 1.0,
            gamma: 0.7,
            beta: 0.0,
        });
        assert!(PolicyState::start(bad_f, 2, 10).is_err());
    }

    #[test]
    fn exploration_function_validation() {
        assert!(validate_exploration_function(&ExplorationFunction::ucb1()).is_empty());
        assert!(validate_exploration_function(&ExplorationFunction::power_log(0.25)).is_empty());
        assert!(validate_exploration_function(&ExplorationFunction::power_log(0.0)).is_empty());
        let steep = ExplorationFunction {
            a: 1.0,
            gamma: 0.7,
            beta: 0.0,
        };
        let report = validate_exploration_function(&steep);
        assert_eq!(report, vec![FViolation::SqrtRatioDecreasing]);
        assert_eq!(report[0].to_string(), "√t/f(t) decreasing");
        // γ = 1/2 is allowed only without a log factor.
        assert!(validate_exploration_function(&ExplorationFunction {
            a: 1.0,
            gamma: 0.5,
            beta: 0.0
        })
        .is_empty());
        assert!(!validate_exploration_function(&ExplorationFunction::power_log(0.5)).is_empty());
        assert!(!validate_exploration_function(&ExplorationFunction {
            a: 0.0,
            gamma: 0.0,
            beta: 0.0
        })
        .is_empty());
    }

    #[test]
    fn log_ratio_predicate() {
        assert!(!ExplorationFunction::ucb1().log_ratio_nondecreasing());
        assert!(ExplorationFunction::power_log(0.0).log_ratio_nondecreasing());
        assert!(ExplorationFunction::power_log(0.25).log_ratio_nondecreasing());
    }

    #[test]
    fn monotonicity_holds_on_grid_for_valid_functions() {
        let fams = [
            ExplorationFunction::ucb1(),
            ExplorationFunction::power_log(0.0),
            ExplorationFunction::power_log(0.125),
            ExplorationFunction::power_log(0.25),
            ExplorationFunction::new(2.0, 0.4, 0.3).unwrap(),
            ExplorationFunction::new(1.0, 0.5, 0.0).unwrap(),
        ];
        for f in fams {
            let start = f.monotone_from().unwrap().max(3.0);
            let mut prev_t = start;
            let mut t = start;
            while t <= 1e7 {
                let (a, b) = (f.eval(prev_t), f.eval(t));
                assert!(b >= a * (1.0 - 1e-12), "{f:?} f decreasing at {t}");
                let (ra, rb) = (prev_t.sqrt() / a, t.sqrt() / b);
                assert!(
                    rb >= ra * (1.0 - 1e-12),
                    "{f:?} sqrt ratio decreasing at {t}"
                );
                prev_t = t;
                t *= 1.05;
            }
        }
    }

    #[test]
    fn exploration_clamp_below_two() {
        let f = ExplorationFunction::power_log(0.25);
        assert_eq!(f.eval(1.0), f.eval(2.0));
        assert_eq!(f.eval(0.0), f.eval(2.0));
        assert!(f.eval(2.0) > 0.0);
    }

    #[test]
    fn tie_break_is_uniform() {
        let mut r = rng::stream(3);
        let mut hits = [0usize; 3];
        for _ in 0..30_000 {
            hits[argmax_by(3, &mut r, |_| 1.0)] += 1;
        }
        for h in hits {
            assert!((9_500..10_500).contains(&h), "{hits:?}");
        }
        // A unique maximizer never touches the stream.
        let mut a = rng::stream(3);
        let b = a.clone();
        assert_eq!(argmax_by(3, &mut a, |i| i as f64), 2);
        assert_eq!(a, b);
    }

    #[test]
    fn many_way_ties() {
        let mut r = rng::stream(1);
        let mut seen = [false; 20];
        for _ in 0..2000 {
            seen[argmax_by(20, &mut r, |_| 0.0)] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn etc_commits_after_exploration() {
        let mut s = fresh(PolicySpec::Etc { explore_rounds: 2 }, 2, 20);
        let mut r = rng::stream(0);
        let rewards = [0.0, 1.0];
        let mut seq = Vec::new();
        for _ in 0..10 {
            let a = s.select_arm(&mut r).unwrap();
            seq.push(a);
            s.update(a, rewards[a]).unwrap();
        }
        assert_eq!(seq, vec![0, 1, 0, 1, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn hybrid_switches_to_round_robin() {
        let spec = PolicySpec::Hybrid {
            f: ExplorationFunction::ucb1(),
            switch_alpha: 0.25,
        };
        // T = 100: tail = ⌈100^{0.75}⌉ = 32, switch after round 68.
        assert_eq!(PolicySpec::hybrid_switch(100, 0.25), 68);
        let mut s = fresh(spec, 2, 100);
        let mut r = rng::stream(9);
        let mut tail = Vec::new();
        for t in 1..=100u64 {
            let a = s.select_arm(&mut r).unwrap();
            if t > 68 {
                tail.push(a);
            }
            s.update(a, if a == 0 { 1.0 } else { 0.0 }).unwrap();
        }
        assert_eq!(tail.len(), 32);
        assert!(tail.iter().enumerate().all(|(j, &a)| a == j % 2));
    }

    #[test]
    fn spec_json_forms() {
        let s: PolicySpec =
            serde_json::from_str(r#"{"kind":"ucbf","f":{"a":1.0,"gamma":0.25,"beta":1.0}}"#)
                .unwrap();
        assert_eq!(s, PolicySpec::ucbf(ExplorationFunction::power_log(0.25)));
        let s: PolicySpec = serde_json::from_str(r#"{"kind":"ts_bernoulli"}"#).unwrap();
        assert_eq!(s, PolicySpec::TsBernoulli);
        let s: PolicySpec = serde_json::from_str(
            r#"{"kind":"hybrid","f":{"a":1.0,"gamma":0.1,"beta":1.0},"switch_alpha":0.25}"#,
        )
        .unwrap();
        assert!(matches!(s, PolicySpec::Hybrid { switch_alpha, .. } if switch_alpha == 0.25));
        // Kind-specific fields are required exactly where they apply.
        assert!(serde_json::from_str::<PolicySpec>(r#"{"kind":"ucbf"}"#).is_err());
        assert!(serde_json::from_str::<PolicySpec>(r#"{"kind":"etc"}"#).is_err());
        assert!(serde_json::from_str::<PolicySpec>(
            r#"{"kind":"round_robin","f":{"a":1.0,"gamma":0.0,"beta":1.0}}"#
        )
        .is_err());
    }
}
