//! Monte Carlo engine.
//!
//! Trials are independent and each owns its random streams, derived from the
//! master seed and the trial's stream id (see [`crate::rng`]). Work is spread
//! over the current rayon pool; to pin the thread count, call the functions
//! here inside `ThreadPool::install`. Results never depend on the pool:
//! records are collected in trial-index order, per-chunk moments are built
//! over fixed [`AGG_CHUNK`]-sized blocks and merged in block order.

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{self, BanditInstance, RewardStream};
use crate::error::{Error, Result};
use crate::fluid;
use crate::policies::{BonusTable, PolicySpec, PolicyState};
use crate::rng;
use crate::stats::{self, Moments};

/// Trials per partial accumulator in [`aggregate`].
pub const AGG_CHUNK: usize = 1024;

/// Outcome of one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// `N_{i,T}` for every arm.
    pub counts: Vec<u64>,
    /// `Σ_i Δ_i N_{i,T}`.
    pub pseudo_regret: f64,
    pub seed: u64,
    pub trial_index: u64,
}

/// Seeds of the independent streams inside one trial: one for the policy's
/// own randomization (tie-breaks, posterior draws) and one reward stream per
/// arm position, so the `j`-th pull of arm `i` always sees the same draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialSeeds {
    pub policy: u64,
    pub arms: Vec<u64>,
}

impl TrialSeeds {
    pub fn derive(seed: u64, k: usize) -> Self {
        Self {
            policy: rng::split(seed, 0),
            arms: (0..k).map(|i| rng::split(seed, 1 + i as u64)).collect(),
        }
    }

    /// Reward streams of arms `i` and `j` exchanged.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut out = self.clone();
        out.arms.swap(i, j);
        out
    }
}

/// Runs one trial of `horizon` rounds.
pub fn run_trial(
    inst: &BanditInstance,
    spec: &PolicySpec,
    horizon: u64,
    seed: u64,
) -> Result<TrialRecord> {
    let seeds = TrialSeeds::derive(seed, inst.k());
    let counts = simulate(inst, spec, horizon, &seeds, |_, _| {})?;
    Ok(record(inst, counts, seed, 0))
}

/// Runs one trial with explicit stream seeds, reporting every `(arm, reward)`
/// to `observe`. Returns the final pull counts.
pub fn simulate<O>(
    inst: &BanditInstance,
    spec: &PolicySpec,
    horizon: u64,
    seeds: &TrialSeeds,
    observe: O,
) -> Result<Vec<u64>>
where
    O: FnMut(usize, f64),
{
    simulate_with(
        inst,
        spec,
        horizon,
        seeds,
        BonusTable::for_spec(spec, horizon),
        observe,
    )
}

/// [`simulate`] with a precomputed bonus table shared across trials.
pub fn simulate_with<O>(
    inst: &BanditInstance,
    spec: &PolicySpec,
    horizon: u64,
    seeds: &TrialSeeds,
    bonus: Option<BonusTable>,
    mut observe: O,
) -> Result<Vec<u64>>
where
    O: FnMut(usize, f64),
{
    let k = inst.k();
    if horizon < k as u64 {
        return Err(Error::param(
            "T",
            format!("horizon {horizon} is shorter than K = {k}"),
        ));
    }
    if seeds.arms.len() != k {
        return Err(Error::param("seeds", "one reward stream per arm required"));
    }
    for arm in &inst.arms {
        arm.check()?;
    }
    let mut state = PolicyState::start(*spec, k, horizon)?;
    if let Some(b) = bonus {
        state = state.with_bonus_table(b);
    }
    let mut policy_rng = rng::stream(seeds.policy);
    let mut rewards: Vec<RewardStream> = inst
        .arms
        .iter()
        .zip(&seeds.arms)
        .map(|(arm, &s)| RewardStream::new(*arm, s))
        .collect();
    for _ in 0..horizon {
        let a = state.select_arm(&mut policy_rng)?;
        let x = rewards[a].next();
        observe(a, x);
        state.update(a, x)?;
    }
    Ok(state.counts().to_vec())
}

fn record(inst: &BanditInstance, counts: Vec<u64>, seed: u64, trial_index: u64) -> TrialRecord {
    let pseudo_regret = inst
        .gaps()
        .iter()
        .zip(&counts)
        .map(|(d, n)| d * *n as f64)
        .sum();
    TrialRecord {
        counts,
        pseudo_regret,
        seed,
        trial_index,
    }
}

/// Per-trial seed of trial `trial` in grid cell `cell`.
pub fn trial_seed(master_seed: u64, cell: u32, trial: u32) -> u64 {
    rng::split(master_seed, rng::cell_stream_id(cell, trial))
}

/// Runs `n_trials` trials of grid cell `cell`, in trial-index order.
pub fn run_trials(
    inst: &BanditInstance,
    spec: &PolicySpec,
    horizon: u64,
    n_trials: u32,
    master_seed: u64,
    cell: u32,
) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    env::validate_instance(inst).into_result("instance")?;
    let bonus = BonusTable::for_spec(spec, horizon);
    (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(master_seed, cell, i);
            let seeds = TrialSeeds::derive(seed, inst.k());
            let counts = simulate_with(inst, spec, horizon, &seeds, bonus.clone(), |_, _| {})?;
            Ok(record(inst, counts, seed, i as u64))
        })
        .collect()
}

/// Cross-trial estimates for one `(instance, policy, T)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationStats {
    pub n_trials: u64,
    pub horizon: u64,
    pub gaps: Vec<f64>,
    /// Estimates of `E[N_{i,T}]`.
    pub mean_counts: Vec<f64>,
    /// Bessel-corrected standard deviations of `N_{i,T}`.
    pub sd_counts: Vec<f64>,
    /// 95% normal-approximation half-widths for `mean_counts`.
    pub ci_halfwidths: Vec<f64>,
    /// `max_i sd_counts[i]`.
    pub s_t_hat: f64,
    /// `Σ_i Δ_i mean_counts[i]`.
    pub r_t_hat: f64,
    /// Sample standard deviation of the pseudo-regret.
    pub sd_regret_hat: f64,
    /// `sd(N_j) / n_j` for the runner-up arm `j`, normalized by its fluid count
    /// under UCB-f and by its mean count otherwise.
    pub dispersion_ratio: f64,
}

impl AllocationStats {
    pub fn k(&self) -> usize {
        self.mean_counts.len()
    }
}

/// Aggregates trial records into [`AllocationStats`].
pub fn aggregate(
    inst: &BanditInstance,
    spec: &PolicySpec,
    horizon: u64,
    records: &[TrialRecord],
) -> Result<AllocationStats> {
    if records.len() < 2 {
        return Err(Error::param(
            "n_trials",
            format!("need at least 2 trials, got {}", records.len()),
        ));
    }
    let k = inst.k();
    let partials: Vec<(Vec<Moments>, Moments)> = records
        .par_chunks(AGG_CHUNK)
        .map(|chunk| {
            let mut arms = vec![Moments::new(); k];
            let mut regret = Moments::new();
            for r in chunk {
                for (m, &c) in arms.iter_mut().zip(&r.counts) {
                    m.push(c as f64);
                }
                regret.push(r.pseudo_regret);
            }
            (arms, regret)
        })
        .collect();
    let mut arms = vec![Moments::new(); k];
    let mut regret = Moments::new();
    for (pa, pr) in &partials {
        for (m, p) in arms.iter_mut().zip(pa) {
            m.merge(p);
        }
        regret.merge(pr);
    }

    let gaps = inst.gaps();
    let mean_counts: Vec<f64> = arms.iter().map(Moments::mean).collect();
    let sd_counts: Vec<f64> = arms.iter().map(Moments::sd).collect();
    let ci_halfwidths: Vec<f64> = arms.iter().map(|m| stats::Z95 * m.se()).collect();
    let s_t_hat = sd_counts.iter().copied().fold(0.0, f64::max);
    let r_t_hat = gaps.iter().zip(&mean_counts).map(|(d, n)| d * n).sum();

    let means = inst.means();
    let j = fluid::runner_up(&means);
    let normalizer = match spec {
        PolicySpec::Ucbf { f } => {
            fluid::solve_fluid(&means, f.eval(horizon as f64), horizon as f64)?.n[j]
        }
        _ => mean_counts[j],
    };
    let dispersion_ratio = if normalizer > 0.0 {
        sd_counts[j] / normalizer
    } else {
        0.0
    };

    Ok(AllocationStats {
        n_trials: records.len() as u64,
        horizon,
        gaps,
        mean_counts,
        sd_counts,
        ci_halfwidths,
        s_t_hat,
        r_t_hat,
        sd_regret_hat: regret.sd(),
        dispersion_ratio,
    })
}

/// Monte Carlo estimates over `n_trials` independent trials.
pub fn run_experiment(
    inst: &BanditInstance,
    spec: &PolicySpec,
    horizon: u64,
    n_trials: u32,
    master_seed: u64,
) -> Result<AllocationStats> {
    run_cell(inst, spec, horizon, n_trials, master_seed, 0)
}

fn run_cell(
    inst: &BanditInstance,
    spec: &PolicySpec,
    horizon: u64,
    n_trials: u32,
    master_seed: u64,
    cell: u32,
) -> Result<AllocationStats> {
    if n_trials < 2 {
        return Err(Error::param(
            "n_trials",
            format!("need at least 2 trials, got {n_trials}"),
        ));
    }
    let records = run_trials(inst, spec, horizon, n_trials, master_seed, cell)?;
    aggregate(inst, spec, horizon, &records)
}

/// Fixed-width histogram with `bins` equal bins over `[lo, hi]`; the right
/// edge belongs to the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistBin {
    pub left: f64,
    pub right: f64,
    pub count: u64,
}

pub fn histogram(
    values: impl IntoIterator<Item = f64>,
    lo: f64,
    hi: f64,
    bins: usize,
) -> Vec<HistBin> {
    assert!(bins > 0 && hi > lo, "histogram: bad range");
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for v in values {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistBin {
            left: lo + b as f64 * width,
            right: if b + 1 == bins {
                hi
            } else {
                lo + (b + 1) as f64 * width
            },
            count,
        })
        .collect()
}

/// Gap values for a horizon: `m/√T` for each multiplier plus fixed gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub sqrt_t_multiples: Vec<f64>,
    pub fixed: Vec<f64>,
}

impl DeltaGrid {
    /// `{0, 0.5, 1, 2, 4, 8, 16}/√T ∪ {0.5, 1}`.
    pub fn standard() -> Self {
        Self {
            sqrt_t_multiples: vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
            fixed: vec![0.5, 1.0],
        }
    }

    pub fn fixed(values: Vec<f64>) -> Self {
        Self {
            sqrt_t_multiples: Vec::new(),
            fixed: values,
        }
    }

    pub fn values(&self, horizon: u64) -> Vec<f64> {
        let root = (horizon as f64).sqrt();
        self.sqrt_t_multiples
            .iter()
            .map(|m| m / root)
            .chain(self.fixed.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub stats: AllocationStats,
}

/// One `AllocationStats` per gap. Maxima are over the grid only ("grid-worst"),
/// a lower estimate of the supremum over the instance class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSweep {
    pub rows: Vec<SweepRow>,
}

impl DeltaSweep {
    fn argmax_by(&self, key: impl Fn(&AllocationStats) -> f64) -> usize {
        let mut best = 0;
        for (i, r) in self.rows.iter().enumerate() {
            if key(&r.stats) > key(&self.rows[best].stats) {
                best = i;
            }
        }
        best
    }

    /// Gap with the largest `S_T_hat` (first on ties).
    pub fn argmax_s(&self) -> f64 {
        self.rows[self.argmax_by(|s| s.s_t_hat)].delta
    }

    pub fn argmax_r(&self) -> f64 {
        self.rows[self.argmax_by(|s| s.r_t_hat)].delta
    }

    pub fn grid_worst_s(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.stats.s_t_hat)
            .fold(0.0, f64::max)
    }

    pub fn grid_worst_r(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.stats.r_t_hat)
            .fold(0.0, f64::max)
    }

    pub fn grid_worst_sd_regret(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.stats.sd_regret_hat)
            .fold(0.0, f64::max)
    }

    /// `max_Δ (R_T_hat + S_T_hat^ρ)`.
    pub fn grid_worst_objective(&self, rho: f64) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for r in &self.rows {
            worst = worst.max(platform_objective(&r.stats, rho)?);
        }
        Ok(worst)
    }
}

/// Storage for finished sweep cells so interrupted sweeps can resume.
pub trait CellStore {
    fn load(&mut self, key: &str) -> Option<AllocationStats>;
    fn save(&mut self, key: &str, stats: &AllocationStats) -> Result<()>;
}

/// A store that keeps nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoStore;

impl CellStore for NoStore {
    fn load(&mut self, _: &str) -> Option<AllocationStats> {
        None
    }
    fn save(&mut self, _: &str, _: &AllocationStats) -> Result<()> {
        Ok(())
    }
}

/// One JSON file per cell in a directory.
#[derive(Debug, Clone)]
pub struct DirStore {
    dir: PathBuf,
}

impl DirStore {
    /// Opens `dir`, creating it if needed.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| Error::State(format!("checkpoint dir {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }
}

impl CellStore for DirStore {
    fn load(&mut self, key: &str) -> Option<AllocationStats> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn save(&mut self, key: &str, stats: &AllocationStats) -> Result<()> {
        let text = serde_json::to_string(stats).map_err(|e| Error::Internal(e.to_string()))?;
        // Write then rename so an interrupted save never leaves a torn cell.
        let tmp = self.dir.join(format!("{key}.json.tmp"));
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, self.path(key)))
            .map_err(|e| Error::State(format!("checkpoint {key}: {e}")))
    }
}

/// Runs the gap family `ν(Δ)` over `delta_grid`; cell `c` uses trial seeds
/// `split(master_seed, c·2³² + trial)`.
pub fn sweep_delta(
    spec: &PolicySpec,
    horizon: u64,
    delta_grid: &[f64],
    n_trials: u32,
    master_seed: u64,
) -> Result<DeltaSweep> {
    sweep_delta_stored(
        spec,
        horizon,
        delta_grid,
        n_trials,
        master_seed,
        &mut NoStore,
        "",
    )
}

/// [`sweep_delta`] with per-cell checkpointing under `key_prefix`.
pub fn sweep_delta_stored(
    spec: &PolicySpec,
    horizon: u64,
    delta_grid: &[f64],
    n_trials: u32,
    master_seed: u64,
    store: &mut dyn CellStore,
    key_prefix: &str,
) -> Result<DeltaSweep> {
    if delta_grid.is_empty() {
        return Err(Error::param("delta_grid", "must not be empty"));
    }
    if let Some(d) = delta_grid.iter().find(|d| !(0.0..=2.0).contains(*d)) {
        return Err(Error::param("delta_grid", format!("{d} outside [0, 2]")));
    }
    let mut rows = Vec::with_capacity(delta_grid.len());
    for (c, &delta) in delta_grid.iter().enumerate() {
        let key = format!("{key_prefix}d{c}");
        let stats = match store.load(&key) {
            Some(s) if s.horizon == horizon && s.n_trials == n_trials as u64 => s,
            _ => {
                let inst = env::make_gap_instance(delta)?;
                let s = run_cell(&inst, spec, horizon, n_trials, master_seed, c as u32)?;
                store.save(&key, &s)?;
                s
            }
        };
        rows.push(SweepRow { delta, stats });
    }
    Ok(DeltaSweep { rows })
}

/// Grid-worst metrics for one `(γ, T)` frontier cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierCell {
    pub gamma: f64,
    pub horizon: u64,
    pub worst_r: f64,
    pub worst_s: f64,
    pub worst_sd_regret: f64,
    pub argmax_r_delta: f64,
    pub argmax_s_delta: f64,
    pub sweep: DeltaSweep,
}

/// Log-log slopes against `T` for one `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierSlopes {
    pub gamma: f64,
    pub regret: f64,
    pub variability: f64,
    pub product: f64,
    pub sd_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub cells: Vec<FrontierCell>,
    pub slopes: Vec<FrontierSlopes>,
}

impl Frontier {
    pub fn cell(&self, gamma: f64, horizon: u64) -> Option<&FrontierCell> {
        self.cells
            .iter()
            .find(|c| c.gamma == gamma && c.horizon == horizon)
    }

    pub fn slopes_for(&self, gamma: f64) -> Option<&FrontierSlopes> {
        self.slopes.iter().find(|s| s.gamma == gamma)
    }
}

/// Seed of the `(γ-index, T-index)` frontier cell.
pub fn frontier_seed(master_seed: u64, gamma_index: usize, t_index: usize) -> u64 {
    rng::split(
        master_seed,
        rng::cell_stream_id(gamma_index as u32, t_index as u32),
    )
}

/// Sweeps UCB-f with `f(t) = t^γ ln t` over `γ × T × Δ`, reporting grid-worst
/// regret and variability per cell and their log-log slopes in `T`.
pub fn pareto_sweep(
    gammas: &[f64],
    horizons: &[u64],
    delta_grid: &DeltaGrid,
    n_trials: u32,
    master_seed: u64,
) -> Result<Frontier> {
    pareto_sweep_stored(
        gammas,
        horizons,
        delta_grid,
        n_trials,
        master_seed,
        &mut NoStore,
    )
}

pub fn pareto_sweep_stored(
    gammas: &[f64],
    horizons: &[u64],
    delta_grid: &DeltaGrid,
    n_trials: u32,
    master_seed: u64,
    store: &mut dyn CellStore,
) -> Result<Frontier> {
    if gammas.is_empty() || horizons.is_empty() {
        return Err(Error::param(
            "grid",
            "gammas and horizons must be non-empty",
        ));
    }
    let mut cells = Vec::new();
    let mut slopes = Vec::new();
    for (gi, &gamma) in gammas.iter().enumerate() {
        let spec = PolicySpec::ucbf(crate::policies::ExplorationFunction::power_log(gamma));
        spec.validate()?;
        let mut row = Vec::new();
        for (ti, &horizon) in horizons.iter().enumerate() {
            let grid = delta_grid.values(horizon);
            let prefix = format!("g{gi}_T{horizon}_");
            let sweep = sweep_delta_stored(
                &spec,
                horizon,
                &grid,
                n_trials,
                frontier_seed(master_seed, gi, ti),
                store,
                &prefix,
            )?;
            row.push(FrontierCell {
                gamma,
                horizon,
                worst_r: sweep.grid_worst_r(),
                worst_s: sweep.grid_worst_s(),
                worst_sd_regret: sweep.grid_worst_sd_regret(),
                argmax_r_delta: sweep.argmax_r(),
                argmax_s_delta: sweep.argmax_s(),
                sweep,
            });
        }
        let ts: Vec<f64> = row.iter().map(|c| c.horizon as f64).collect();
        let slope = |f: &dyn Fn(&FrontierCell) -> f64| -> f64 {
            let ys: Vec<f64> = row.iter().map(f).collect();
            stats::log_log_slope(&ts, &ys).unwrap_or(f64::NAN)
        };
        slopes.push(FrontierSlopes {
            gamma,
            regret: slope(&|c| c.worst_r),
            variability: slope(&|c| c.worst_s),
            product: slope(&|c| c.worst_r * c.worst_s),
            sd_regret: slope(&|c| c.worst_sd_regret),
        });
        cells.extend(row);
    }
    Ok(Frontier { cells, slopes })
}

/// Per-instance platform loss `R_T_hat + S_T_hat^ρ`.
pub fn platform_objective(stats: &AllocationStats, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(Error::param("rho", format!("must be >= 0, got {rho}")));
    }
    if !(stats.r_t_hat.is_finite() && stats.s_t_hat.is_finite()) {
        return Err(Error::param("stats", "estimates must be finite"));
    }
    Ok(stats.r_t_hat + stats.s_t_hat.powf(rho))
}
