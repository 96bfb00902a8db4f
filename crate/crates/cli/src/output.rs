//! Output schemas and file writers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use banditvar::sim::HistBin;
use banditvar::{AllocationStats, PolicySpec};
use serde::Serialize;

/// One row of the results table: a per-arm row when `arm` is set, otherwise
/// the per-experiment summary row.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub policy_kind: String,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub a: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub n_trials: u64,
    pub delta: Option<f64>,
    pub arm: Option<usize>,
    pub mean_count: Option<f64>,
    pub sd_count: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    #[serde(rename = "S_T_hat")]
    pub s_t_hat: Option<f64>,
    #[serde(rename = "R_T_hat")]
    pub r_t_hat: Option<f64>,
    pub sd_regret_hat: Option<f64>,
    pub dispersion_ratio: Option<f64>,
    pub objective_rho: Option<f64>,
    pub objective_value: Option<f64>,
}

/// Per-arm rows followed by the summary row for one experiment.
pub fn result_rows(
    id: &str,
    spec: &PolicySpec,
    delta: Option<f64>,
    stats: &AllocationStats,
    objective: Option<(f64, f64)>,
) -> Vec<ResultRow> {
    let f = spec.exploration();
    let base = ResultRow {
        experiment_id: id.to_string(),
        policy_kind: spec.name().to_string(),
        gamma: f.map(|f| f.gamma),
        beta: f.map(|f| f.beta),
        a: f.map(|f| f.a),
        horizon: stats.horizon,
        n_trials: stats.n_trials,
        delta,
        ..ResultRow::default()
    };
    let mut rows: Vec<ResultRow> = (0..stats.k())
        .map(|i| ResultRow {
            arm: Some(i),
            mean_count: Some(stats.mean_counts[i]),
            sd_count: Some(stats.sd_counts[i]),
            ci_halfwidth: Some(stats.ci_halfwidths[i]),
            ..base.clone()
        })
        .collect();
    rows.push(ResultRow {
        s_t_hat: Some(stats.s_t_hat),
        r_t_hat: Some(stats.r_t_hat),
        sd_regret_hat: Some(stats.sd_regret_hat),
        dispersion_ratio: Some(stats.dispersion_ratio),
        objective_rho: objective.map(|o| o.0),
        objective_value: objective.map(|o| o.1),
        ..base
    });
    rows
}

#[derive(Debug, Serialize)]
pub struct HistRow {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
}

impl From<&HistBin> for HistRow {
    fn from(b: &HistBin) -> Self {
        Self {
            bin_left: b.left,
            bin_right: b.right,
            count: b.count,
        }
    }
}

/// Grid-worst metrics per `(γ, T)`.
#[derive(Debug, Serialize)]
pub struct FrontierRow {
    pub gamma: f64,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub n_trials: u64,
    pub worst_r: f64,
    pub worst_s: f64,
    pub worst_sd_regret: f64,
    pub argmax_r_delta: f64,
    pub argmax_s_delta: f64,
}

#[derive(Debug, Serialize)]
pub struct SlopeRow {
    pub gamma: f64,
    pub regret_slope: f64,
    pub variability_slope: f64,
    pub product_slope: f64,
    pub sd_regret_slope: f64,
}

#[derive(Debug, Serialize)]
pub struct FluidRow {
    pub t: u64,
    pub f_t: f64,
    pub lambda: f64,
    pub residual: f64,
    pub arm: usize,
    pub mean: f64,
    pub n: f64,
}

#[derive(Debug, Serialize)]
pub struct PlatformRow {
    pub policy_kind: String,
    pub gamma: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub rho: f64,
    pub worst_objective: f64,
    pub argmax_delta: f64,
}

/// Collects written files so the manifest can list them.
pub struct Writer {
    dir: PathBuf,
    pub written: Vec<String>,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w =
            csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }
}
