//! Stochastic multi-armed bandit simulation for studying how regret trades
//! off against allocation variability, the spread of per-arm pull counts
//! across independent runs.
//!
//! * [`env`]: arm laws, bandit instances and the two-armed Gaussian gap family.
//! * [`policies`]: UCB-f with a tunable exploration function, UCB1, Thompson
//!   sampling, round-robin, explore-then-commit, greedy and a UCB-f/round-robin
//!   hybrid.
//! * [`fluid`]: the deterministic fluid pull-count benchmark.
//! * [`sim`]: parallel, seed-reproducible Monte Carlo estimation of regret
//!   and variability, gap sweeps and frontier sweeps.
//! * [`theory`]: KL / Bretagnolle–Huber checks on instance pairs.

pub mod env;
pub mod error;
pub mod fluid;
pub mod policies;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod theory;

pub use env::{
    make_gap_instance, validate_instance, ArmDistribution, BanditInstance, InstanceConfig,
};
pub use error::{Error, Result};
pub use fluid::{fluid_trajectory, predicted_variability_bound, solve_fluid, FluidSolution};
pub use policies::{validate_exploration_function, ExplorationFunction, PolicySpec, PolicyState};
pub use sim::{
    pareto_sweep, platform_objective, run_experiment, run_trial, sweep_delta, AllocationStats,
    DeltaGrid, DeltaSweep, Frontier, TrialRecord,
};
pub use theory::{
    bh_bound, check_instance_pair, divergence_decomposition, kl_gaussian, PairReport,
};

/// Crate version recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
