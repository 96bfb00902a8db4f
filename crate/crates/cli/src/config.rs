//! Experiment configs: the JSON form read by `--config` and echoed into
//! every manifest.

use banditvar::{DeltaGrid, ExplorationFunction, InstanceConfig, PolicySpec};
use serde::{Deserialize, Serialize};

/// Whole-run config. Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Simulate {
        instance: InstanceConfig,
        policy: PolicySpec,
        #[serde(rename = "T")]
        horizon: u64,
        n_trials: u32,
    },
    SweepDelta {
        policy: PolicySpec,
        #[serde(rename = "T")]
        horizon: u64,
        delta_grid: DeltaGrid,
        n_trials: u32,
    },
    Pareto {
        gammas: Vec<f64>,
        #[serde(rename = "T")]
        horizons: Vec<u64>,
        delta_grid: DeltaGrid,
        n_trials: u32,
    },
    Fluid {
        means: Vec<f64>,
        t: Vec<u64>,
        f: ExplorationFunction,
    },
    PairCheck {
        policy: PolicySpec,
        delta: f64,
        #[serde(rename = "T")]
        horizon: u64,
        n_trials: u32,
    },
    Example1 {
        #[serde(rename = "T")]
        horizon: u64,
        n_trials: u32,
        bins: usize,
    },
    Platform {
        gammas: Vec<f64>,
        #[serde(rename = "T")]
        horizon: u64,
        rho: f64,
        delta_grid: DeltaGrid,
        n_trials: u32,
        /// Also score RoundRobin over the same grid.
        round_robin: bool,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate { .. } => "simulate",
            Experiment::SweepDelta { .. } => "sweep-delta",
            Experiment::Pareto { .. } => "pareto",
            Experiment::Fluid { .. } => "fluid",
            Experiment::PairCheck { .. } => "pair-check",
            Experiment::Example1 { .. } => "example1",
            Experiment::Platform { .. } => "platform",
        }
    }
}

/// Reads a config file. A manifest written by a previous run is accepted too,
/// so any run can be replayed from its manifest.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    match value.get("config") {
        Some(inner) if value.get("version").is_some() => serde_json::from_value(inner.clone()),
        _ => serde_json::from_value(value),
    }
}
