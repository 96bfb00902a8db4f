//! Bandit instances and reward sampling.

use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Default mean bound `M` of the sub-Gaussian instance class.
pub const DEFAULT_M: f64 = 2.0;
/// Default sub-Gaussian parameter bound `σ`.
pub const DEFAULT_SIGMA: f64 = 1.0;
/// Default maximum number of arms `K̄`.
pub const DEFAULT_KBAR: usize = 16;

/// Reward law of a single arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArmDistribution {
    Gaussian { mean: f64, scale: f64 },
    Bernoulli { p: f64 },
}

impl ArmDistribution {
    pub fn gaussian(mean: f64, scale: f64) -> Result<Self> {
        let arm = ArmDistribution::Gaussian { mean, scale };
        arm.check()?;
        Ok(arm)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        let arm = ArmDistribution::Bernoulli { p };
        arm.check()?;
        Ok(arm)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ArmDistribution::Gaussian { mean, .. } => mean,
            ArmDistribution::Bernoulli { p } => p,
        }
    }

    /// Sub-Gaussian parameter: the scale for Gaussians, 1/2 for Bernoulli.
    pub fn sub_gaussian(&self) -> f64 {
        match *self {
            ArmDistribution::Gaussian { scale, .. } => scale,
            ArmDistribution::Bernoulli { .. } => 0.5,
        }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            ArmDistribution::Gaussian { mean, scale } => {
                if !mean.is_finite() {
                    return Err(Error::param("mean", format!("must be finite, got {mean}")));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::param("scale", format!("must be > 0, got {scale}")));
                }
            }
            ArmDistribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::param("p", format!("must lie in [0, 1], got {p}")));
                }
            }
        }
        Ok(())
    }

    /// One reward draw. Assumes the parameters are valid.
    ///
    /// Gaussian draws use [`rng::standard_normal`] (two outputs per draw);
    /// Bernoulli draws consume one output and return exactly 0.0 or 1.0.
    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ArmDistribution::Gaussian { mean, scale } => mean + scale * rng::standard_normal(rng),
            ArmDistribution::Bernoulli { p } => {
                if rng::open01(rng) < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-arm reward source used by the simulator. Gaussian arms take both
/// halves of each polar-method pair from a [`rng::NormalStream`]; Bernoulli arms
/// compare one uniform with `p`.
#[derive(Debug, Clone)]
pub struct RewardStream {
    arm: ArmDistribution,
    normals: rng::NormalStream,
}

impl RewardStream {
    pub fn new(arm: ArmDistribution, seed: u64) -> Self {
        Self {
            arm,
            normals: rng::NormalStream::new(seed),
        }
    }

    #[inline]
    pub fn next(&mut self) -> f64 {
        match self.arm {
            ArmDistribution::Gaussian { mean, scale } => mean + scale * self.normals.next(),
            ArmDistribution::Bernoulli { p } => {
                if rng::open01(self.normals.rng()) < p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Draws one reward from `arm`, rejecting invalid parameters.
pub fn sample<R: RngCore + ?Sized>(arm: &ArmDistribution, rng: &mut R) -> Result<f64> {
    arm.check()?;
    Ok(arm.draw(rng))
}

/// Ordered arms plus the parameters `(M, σ, K̄)` of the class they claim to
/// belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    pub arms: Vec<ArmDistribution>,
    #[serde(rename = "M", default = "default_m")]
    pub class_m: f64,
    #[serde(rename = "sigma", default = "default_sigma")]
    pub class_sigma: f64,
    #[serde(rename = "Kbar", default = "default_kbar")]
    pub class_kbar: usize,
}

fn default_m() -> f64 {
    DEFAULT_M
}
fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}
fn default_kbar() -> usize {
    DEFAULT_KBAR
}

impl BanditInstance {
    /// Instance with the default class parameters.
    pub fn new(arms: Vec<ArmDistribution>) -> Self {
        Self {
            arms,
            class_m: DEFAULT_M,
            class_sigma: DEFAULT_SIGMA,
            class_kbar: DEFAULT_KBAR,
        }
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmDistribution::mean).collect()
    }

    pub fn best_mean(&self) -> f64 {
        self.arms
            .iter()
            .map(ArmDistribution::mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Δ_i = max_j μ_j − μ_i`.
    pub fn gaps(&self) -> Vec<f64> {
        let best = self.best_mean();
        self.arms.iter().map(|a| best - a.mean()).collect()
    }

    /// Same arms with positions `i` and `j` exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut out = self.clone();
        out.arms.swap(i, j);
        out
    }
}

/// A single failed membership condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewArms { k: usize },
    TooManyArms { k: usize, kbar: usize },
    InvalidArm { arm: usize, reason: String },
    MeanOutOfRange { arm: usize, mean: f64, m: f64 },
    SubGaussianTooLarge { arm: usize, param: f64, sigma: f64 },
    NoBestArm,
    BadClass { reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewArms { k } => write!(f, "K < 2 (K = {k})"),
            Violation::TooManyArms { k, kbar } => write!(f, "K > Kbar ({k} > {kbar})"),
            Violation::InvalidArm { arm, reason } => write!(f, "arm {}: {reason}", arm + 1),
            Violation::MeanOutOfRange { arm, mean, m } => {
                write!(
                    f,
                    "arm {}: mean outside [-M, M] (mean = {mean}, M = {m})",
                    arm + 1
                )
            }
            Violation::SubGaussianTooLarge { arm, param, sigma } => write!(
                f,
                "arm {}: sub-Gaussian parameter exceeds sigma ({param} > {sigma})",
                arm + 1
            ),
            Violation::NoBestArm => write!(f, "no arm attains a zero gap"),
            Violation::BadClass { reason } => write!(f, "class parameters: {reason}"),
        }
    }
}

/// List of violated invariants; empty iff the instance is a class member.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }

    pub(crate) fn into_result(self, name: &'static str) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::param(name, self.messages().join("; ")))
        }
    }
}

pub fn validate_instance(inst: &BanditInstance) -> ValidationReport {
    let mut v = Vec::new();
    let k = inst.k();
    if !(inst.class_m > 0.0 && inst.class_m.is_finite()) {
        v.push(Violation::BadClass {
            reason: format!("M must be > 0, got {}", inst.class_m),
        });
    }
    if !(inst.class_sigma > 0.0 && inst.class_sigma.is_finite()) {
        v.push(Violation::BadClass {
            reason: format!("sigma must be > 0, got {}", inst.class_sigma),
        });
    }
    if inst.class_kbar < 2 {
        v.push(Violation::BadClass {
            reason: format!("Kbar must be >= 2, got {}", inst.class_kbar),
        });
    }
    if k < 2 {
        v.push(Violation::TooFewArms { k });
    }
    if k > inst.class_kbar {
        v.push(Violation::TooManyArms {
            k,
            kbar: inst.class_kbar,
        });
    }
    for (i, arm) in inst.arms.iter().enumerate() {
        if let Err(e) = arm.check() {
            v.push(Violation::InvalidArm {
                arm: i,
                reason: e.to_string(),
            });
            continue;
        }
        let mean = arm.mean();
        if mean.abs() > inst.class_m {
            v.push(Violation::MeanOutOfRange {
                arm: i,
                mean,
                m: inst.class_m,
            });
        }
        if arm.sub_gaussian() > inst.class_sigma {
            v.push(Violation::SubGaussianTooLarge {
                arm: i,
                param: arm.sub_gaussian(),
                sigma: inst.class_sigma,
            });
        }
    }
    if k > 0 && !inst.gaps().contains(&0.0) {
        v.push(Violation::NoBestArm);
    }
    ValidationReport { violations: v }
}

/// Two-armed unit-variance Gaussian pair `{N(0,1), N(−Δ,1)}` in the default
/// class `(M, σ, K̄) = (2, 1, 16)`.
pub fn make_gap_instance(delta: f64) -> Result<BanditInstance> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::param("delta", format!("must be >= 0, got {delta}")));
    }
    if delta > 2.0 * DEFAULT_M {
        return Err(Error::param(
            "delta",
            format!("must be <= 2M = {}, got {delta}", 2.0 * DEFAULT_M),
        ));
    }
    Ok(BanditInstance::new(vec![
        ArmDistribution::Gaussian {
            mean: 0.0,
            scale: 1.0,
        },
        ArmDistribution::Gaussian {
            mean: -delta,
            scale: 1.0,
        },
    ]))
}

/// Instance as written in experiment configs: explicit arms, or the gap-family
/// shorthand `{"gap_family": {"delta": 0.02}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceConfig {
    GapFamily { gap_family: GapFamily },
    Explicit(BanditInstance),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapFamily {
    pub delta: f64,
}

impl InstanceConfig {
    /// Resolves to a concrete instance and validates class membership.
    pub fn resolve(&self) -> Result<BanditInstance> {
        let inst = match self {
            InstanceConfig::GapFamily { gap_family } => make_gap_instance(gap_family.delta)?,
            InstanceConfig::Explicit(inst) => inst.clone(),
        };
        validate_instance(&inst).into_result("instance")?;
        Ok(inst)
    }
}
