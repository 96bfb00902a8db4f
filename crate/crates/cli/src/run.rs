//! Executes a validated config and writes its artifacts.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use banditvar::fluid::fluid_trajectory;
use banditvar::sim::{
    aggregate, frontier_seed, histogram, pareto_sweep_stored, run_trials, sweep_delta_stored,
    CellStore, DirStore, NoStore,
};
use banditvar::theory::check_instance_pair;
use banditvar::{
    platform_objective, run_experiment, ArmDistribution, BanditInstance, DeltaSweep,
    ExplorationFunction, PolicySpec,
};
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig, Format};
use crate::output::{
    result_rows, FluidRow, FrontierRow, HistRow, PlatformRow, ResultRow, SlopeRow, Writer,
};

const CELLS_DIR: &str = "cells";

/// Opens the checkpoint directory for a sweep, refusing to mix cells from a
/// different config.
fn checkpoint(w: &Writer, cfg: &ExperimentConfig) -> Result<DirStore> {
    let dir = w.dir().join(CELLS_DIR);
    let stamp = dir.join("config.json");
    let expected = serde_json::to_string_pretty(cfg)?;
    if let Ok(found) = fs::read_to_string(&stamp) {
        if found != expected {
            bail!(
                "{} holds cells from a different sweep; remove it or choose another --out",
                dir.display()
            );
        }
    }
    let store = DirStore::open(&dir)?;
    fs::write(&stamp, expected).with_context(|| format!("writing {}", stamp.display()))?;
    Ok(store)
}

fn sweep_rows(
    prefix: &str,
    spec: &PolicySpec,
    sweep: &DeltaSweep,
    rho: Option<f64>,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (c, r) in sweep.rows.iter().enumerate() {
        let objective = match rho {
            Some(rho) => Some((rho, platform_objective(&r.stats, rho)?)),
            None => None,
        };
        rows.extend(result_rows(
            &format!("{prefix}d{c}"),
            spec,
            Some(r.delta),
            &r.stats,
            objective,
        ));
    }
    Ok(rows)
}

pub fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    let mut w = Writer::new(out)?;
    let seed = cfg.seed;
    let json_out = cfg.format == Format::Json;
    match &cfg.experiment {
        Experiment::Simulate {
            instance,
            policy,
            horizon,
            n_trials,
        } => {
            let inst = instance.resolve()?;
            let stats = run_experiment(&inst, policy, *horizon, *n_trials, seed)?;
            if json_out {
                w.json("results.json", &stats)?;
            } else {
                let delta = match instance {
                    banditvar::InstanceConfig::GapFamily { gap_family } => Some(gap_family.delta),
                    _ => None,
                };
                w.csv(
                    "results.csv",
                    &result_rows("simulate", policy, delta, &stats, None),
                )?;
            }
        }
        Experiment::SweepDelta {
            policy,
            horizon,
            delta_grid,
            n_trials,
        } => {
            let grid = delta_grid.values(*horizon);
            let sweep =
                sweep_delta_stored(policy, *horizon, &grid, *n_trials, seed, &mut NoStore, "")?;
            let summary = json!({
                "argmax_s_delta": sweep.argmax_s(),
                "argmax_r_delta": sweep.argmax_r(),
                "grid_worst_s": sweep.grid_worst_s(),
                "grid_worst_r": sweep.grid_worst_r(),
            });
            if json_out {
                w.json(
                    "results.json",
                    &json!({ "sweep": sweep, "summary": summary }),
                )?;
            } else {
                w.csv("results.csv", &sweep_rows("", policy, &sweep, None)?)?;
                w.json("summary.json", &summary)?;
            }
        }
        Experiment::Pareto {
            gammas,
            horizons,
            delta_grid,
            n_trials,
        } => {
            let mut store = checkpoint(&w, cfg)?;
            let frontier =
                pareto_sweep_stored(gammas, horizons, delta_grid, *n_trials, seed, &mut store)?;
            if json_out {
                w.json("frontier.json", &frontier)?;
            } else {
                let cells: Vec<FrontierRow> = frontier
                    .cells
                    .iter()
                    .map(|c| FrontierRow {
                        gamma: c.gamma,
                        horizon: c.horizon,
                        n_trials: *n_trials as u64,
                        worst_r: c.worst_r,
                        worst_s: c.worst_s,
                        worst_sd_regret: c.worst_sd_regret,
                        argmax_r_delta: c.argmax_r_delta,
                        argmax_s_delta: c.argmax_s_delta,
                    })
                    .collect();
                w.csv("frontier.csv", &cells)?;
                let slopes: Vec<SlopeRow> = frontier
                    .slopes
                    .iter()
                    .map(|s| SlopeRow {
                        gamma: s.gamma,
                        regret_slope: s.regret,
                        variability_slope: s.variability,
                        product_slope: s.product,
                        sd_regret_slope: s.sd_regret,
                    })
                    .collect();
                w.csv("slopes.csv", &slopes)?;
                let mut rows = Vec::new();
                for (gi, &g) in gammas.iter().enumerate() {
                    let spec = PolicySpec::ucbf(ExplorationFunction::power_log(g));
                    for &t in horizons {
                        let cell = frontier.cell(g, t).context("missing frontier cell")?;
                        rows.extend(sweep_rows(
                            &format!("g{gi}_T{t}_"),
                            &spec,
                            &cell.sweep,
                            None,
                        )?);
                    }
                }
                w.csv("results.csv", &rows)?;
            }
        }
        Experiment::Fluid { means, t, f } => {
            let sols = fluid_trajectory(means, f, t)?;
            if json_out {
                w.json("fluid.json", &sols)?;
            } else {
                let rows: Vec<FluidRow> = sols
                    .iter()
                    .flat_map(|s| {
                        means
                            .iter()
                            .zip(&s.n)
                            .enumerate()
                            .map(move |(arm, (&mean, &n))| FluidRow {
                                t: s.t as u64,
                                f_t: s.f_t,
                                lambda: s.lambda,
                                residual: s.residual,
                                arm,
                                mean,
                                n,
                            })
                    })
                    .collect();
                w.csv("fluid.csv", &rows)?;
            }
        }
        Experiment::PairCheck {
            policy,
            delta,
            horizon,
            n_trials,
        } => {
            let report = check_instance_pair(policy, *delta, *horizon, *n_trials, seed)?;
            w.json("pair_report.json", &report)?;
        }
        Experiment::Example1 {
            horizon,
            n_trials,
            bins,
        } => {
            let inst = BanditInstance::new(vec![ArmDistribution::bernoulli(0.5)?; 2]);
            let spec = PolicySpec::TsBernoulli;
            let records = run_trials(&inst, &spec, *horizon, *n_trials, seed, 0)?;
            let stats = aggregate(&inst, &spec, *horizon, &records)?;
            let hist = histogram(
                records.iter().map(|r| r.counts[0] as f64),
                0.0,
                *horizon as f64,
                *bins,
            );
            if json_out {
                w.json(
                    "results.json",
                    &json!({ "stats": stats, "histogram": hist }),
                )?;
            } else {
                w.csv(
                    "results.csv",
                    &result_rows("example1", &spec, None, &stats, None),
                )?;
                let rows: Vec<HistRow> = hist.iter().map(HistRow::from).collect();
                w.csv("histogram.csv", &rows)?;
            }
        }
        Experiment::Platform {
            gammas,
            horizon,
            rho,
            delta_grid,
            n_trials,
            round_robin,
        } => {
            let mut store = checkpoint(&w, cfg)?;
            let grid = delta_grid.values(*horizon);
            let mut specs: Vec<(Option<f64>, PolicySpec)> = gammas
                .iter()
                .map(|&g| (Some(g), PolicySpec::ucbf(ExplorationFunction::power_log(g))))
                .collect();
            if *round_robin {
                specs.push((None, PolicySpec::RoundRobin));
            }
            let mut summary = Vec::new();
            let mut rows = Vec::new();
            for (i, (gamma, spec)) in specs.iter().enumerate() {
                let prefix = format!("p{i}_");
                let sweep = sweep_delta_stored(
                    spec,
                    *horizon,
                    &grid,
                    *n_trials,
                    frontier_seed(seed, i, 0),
                    &mut store as &mut dyn CellStore,
                    &prefix,
                )?;
                let mut worst = (f64::NEG_INFINITY, f64::NAN);
                for r in &sweep.rows {
                    let v = platform_objective(&r.stats, *rho)?;
                    if v > worst.0 {
                        worst = (v, r.delta);
                    }
                }
                summary.push(PlatformRow {
                    policy_kind: spec.name().to_string(),
                    gamma: *gamma,
                    horizon: *horizon,
                    rho: *rho,
                    worst_objective: worst.0,
                    argmax_delta: worst.1,
                });
                rows.extend(sweep_rows(&prefix, spec, &sweep, Some(*rho))?);
            }
            if json_out {
                w.json("platform.json", &summary)?;
            } else {
                w.csv("platform.csv", &summary)?;
                w.csv("results.csv", &rows)?;
            }
        }
    }
    Ok(w.written)
}
