//! `banditvar` command-line runner.
//!
//! Every run writes `manifest.json` (resolved config, seed, version, thread
//! count and output list) next to its results. Failures print a JSON error
//! object on stderr and exit with 2 for invalid configs, 1 otherwise.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use banditvar::{DeltaGrid, ExplorationFunction, InstanceConfig, PolicySpec};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{parse_config, Experiment, ExperimentConfig, Format};

#[derive(Parser, Debug)]
#[command(
    name = "banditvar",
    version,
    about = "Regret and allocation-variability experiments for multi-armed bandits"
)]
struct Cli {
    /// JSON experiment config (or a previous run's manifest.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed (default 0); overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Result file format; overrides the config's format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo estimates for one instance and policy.
    Simulate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long = "T")]
        horizon: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u32,
    },
    /// Gap-family sweep over a Δ-grid.
    SweepDelta {
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long = "T")]
        horizon: u64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: u32,
    },
    /// Grid-worst regret and variability over γ × T for f(t) = t^γ ln t.
    Pareto {
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
        #[arg(long = "T", value_delimiter = ',', required = true)]
        horizons: Vec<u64>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: u32,
    },
    /// Fluid pull counts.
    Fluid {
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        means: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<u64>,
        #[command(flatten)]
        f: FArgs,
    },
    /// Change-of-measure check on the pair (Δ, Δ + 1/√g(Δ)).
    PairCheck {
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long)]
        delta: f64,
        #[arg(long = "T")]
        horizon: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u32,
    },
    /// Thompson Sampling on two fair coins: spread of N₁ over T = 5000.
    Example1 {
        #[arg(long = "T", default_value_t = 5000)]
        horizon: u64,
        #[arg(long, default_value_t = 20_000)]
        trials: u32,
        #[arg(long, default_value_t = 100)]
        bins: usize,
    },
    /// Grid-worst R + S^ρ per policy.
    Platform {
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
        #[arg(long = "T")]
        horizon: u64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: u32,
        /// Skip the RoundRobin reference.
        #[arg(long)]
        no_round_robin: bool,
    },
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Gap-family instance N(0,1), N(−Δ,1).
    #[arg(long, conflicts_with_all = ["means", "bernoulli"])]
    delta: Option<f64>,
    /// Unit-variance Gaussian arms with these means.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "bernoulli"
    )]
    means: Option<Vec<f64>>,
    /// Bernoulli arms with these success probabilities.
    #[arg(long, value_delimiter = ',')]
    bernoulli: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct PolicyArgs {
    /// ucbf, ucb1, ts_bernoulli, ts_gaussian, round_robin, etc, greedy or hybrid.
    #[arg(long, default_value = "ucbf")]
    policy: String,
    #[command(flatten)]
    f: FArgs,
    #[arg(long)]
    explore_rounds: Option<u64>,
    #[arg(long)]
    switch_alpha: Option<f64>,
}

/// `f(t) = a · t^γ · (ln t)^β`; defaults give UCB1's `√(2 ln t)`.
#[derive(Args, Debug)]
struct FArgs {
    #[arg(long = "f-gamma", default_value_t = 0.0)]
    f_gamma: f64,
    #[arg(long = "f-beta", default_value_t = 0.5)]
    f_beta: f64,
    #[arg(long = "f-a", default_value_t = std::f64::consts::SQRT_2)]
    f_a: f64,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Fixed gaps. With neither grid flag the standard grid
    /// {0, .5, 1, 2, 4, 8, 16}/√T ∪ {0.5, 1} is used.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    /// Gaps given as multiples c of 1/√T.
    #[arg(long, value_delimiter = ',')]
    delta_multiples: Option<Vec<f64>>,
}

/// Failure with its exit code and the offending field, if known.
struct Failure {
    code: u8,
    kind: &'static str,
    field: Option<String>,
    message: String,
}

impl Failure {
    fn config(field: Option<String>, message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "invalid_config",
            field,
            message: message.into(),
        }
    }

    fn from_run(err: anyhow::Error) -> Self {
        match err.downcast_ref::<banditvar::Error>() {
            Some(banditvar::Error::Parameter { name, reason }) => {
                Self::config(Some(name.to_string()), reason.clone())
            }
            _ => Self {
                code: 1,
                kind: "runtime",
                field: None,
                message: format!("{err:#}"),
            },
        }
    }
}

impl FArgs {
    fn exploration(&self) -> Result<ExplorationFunction, Failure> {
        ExplorationFunction::new(self.f_a, self.f_gamma, self.f_beta).map_err(core_failure)
    }
}

fn core_failure(e: banditvar::Error) -> Failure {
    Failure::from_run(e.into())
}

impl PolicyArgs {
    fn spec(&self) -> Result<PolicySpec, Failure> {
        let mut raw = json!({ "kind": self.policy });
        if matches!(self.policy.as_str(), "ucbf" | "hybrid") {
            raw["f"] = serde_json::to_value(self.f.exploration()?).expect("f serializes");
        }
        if let Some(n) = self.explore_rounds {
            raw["explore_rounds"] = json!(n);
        }
        if let Some(a) = self.switch_alpha {
            raw["switch_alpha"] = json!(a);
        }
        serde_json::from_value(raw)
            .map_err(|e| Failure::config(Some("policy".into()), e.to_string()))
    }
}

impl InstanceArgs {
    fn config(&self) -> Result<InstanceConfig, Failure> {
        let arms: Vec<serde_json::Value> = match (&self.delta, &self.means, &self.bernoulli) {
            (Some(d), _, _) => {
                return Ok(
                    serde_json::from_value(json!({ "gap_family": { "delta": d } }))
                        .expect("gap family"),
                )
            }
            (_, Some(means), _) => means
                .iter()
                .map(|m| json!({ "kind": "gaussian", "mean": m, "scale": 1.0 }))
                .collect(),
            (_, _, Some(ps)) => ps
                .iter()
                .map(|p| json!({ "kind": "bernoulli", "p": p }))
                .collect(),
            _ => {
                return Err(Failure::config(
                    Some("instance".into()),
                    "give one of --delta, --means or --bernoulli",
                ))
            }
        };
        serde_json::from_value(json!({ "arms": arms }))
            .map_err(|e| Failure::config(Some("instance".into()), e.to_string()))
    }
}

impl GridArgs {
    fn grid(&self) -> DeltaGrid {
        match (&self.deltas, &self.delta_multiples) {
            (None, None) => DeltaGrid::standard(),
            (d, m) => DeltaGrid {
                sqrt_t_multiples: m.clone().unwrap_or_default(),
                fixed: d.clone().unwrap_or_default(),
            },
        }
    }
}

fn experiment_from_flags(cmd: &Command) -> Result<Experiment, Failure> {
    Ok(match cmd {
        Command::Simulate {
            instance,
            policy,
            horizon,
            trials,
        } => Experiment::Simulate {
            instance: instance.config()?,
            policy: policy.spec()?,
            horizon: *horizon,
            n_trials: *trials,
        },
        Command::SweepDelta {
            policy,
            horizon,
            grid,
            trials,
        } => Experiment::SweepDelta {
            policy: policy.spec()?,
            horizon: *horizon,
            delta_grid: grid.grid(),
            n_trials: *trials,
        },
        Command::Pareto {
            gammas,
            horizons,
            grid,
            trials,
        } => Experiment::Pareto {
            gammas: gammas.clone(),
            horizons: horizons.clone(),
            delta_grid: grid.grid(),
            n_trials: *trials,
        },
        Command::Fluid { means, t, f } => Experiment::Fluid {
            means: means.clone(),
            t: t.clone(),
            f: f.exploration()?,
        },
        Command::PairCheck {
            policy,
            delta,
            horizon,
            trials,
        } => Experiment::PairCheck {
            policy: policy.spec()?,
            delta: *delta,
            horizon: *horizon,
            n_trials: *trials,
        },
        Command::Example1 {
            horizon,
            trials,
            bins,
        } => Experiment::Example1 {
            horizon: *horizon,
            n_trials: *trials,
            bins: *bins,
        },
        Command::Platform {
            gammas,
            horizon,
            rho,
            grid,
            trials,
            no_round_robin,
        } => Experiment::Platform {
            gammas: gammas.clone(),
            horizon: *horizon,
            rho: *rho,
            delta_grid: grid.grid(),
            n_trials: *trials,
            round_robin: !no_round_robin,
        },
    })
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    match (&cli.config, &cli.command) {
        (Some(_), Some(_)) => Err(Failure::config(
            Some("config".into()),
            "--config replaces the subcommand; give one or the other",
        )),
        (None, None) => Err(Failure::config(None, "no subcommand given (see --help)")),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::config(Some("config".into()), format!("{}: {e}", path.display()))
            })?;
            let mut cfg = parse_config(&text)
                .map_err(|e| Failure::config(Some("config".into()), e.to_string()))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(format) = cli.format {
                cfg.format = format;
            }
            Ok(cfg)
        }
        (None, Some(cmd)) => Ok(ExperimentConfig {
            experiment: experiment_from_flags(cmd)?,
            seed: cli.seed.unwrap_or(0),
            format: cli.format.unwrap_or_default(),
        }),
    }
}

fn validate_grid(grid: &DeltaGrid, horizons: &[u64]) -> banditvar::Result<()> {
    for &t in horizons {
        let values = grid.values(t);
        if values.is_empty() {
            return Err(banditvar::Error::Parameter {
                name: "delta_grid",
                reason: "must not be empty".into(),
            });
        }
        if let Some(d) = values.iter().find(|d| !(0.0..=2.0).contains(*d)) {
            return Err(banditvar::Error::Parameter {
                name: "delta_grid",
                reason: format!("{d} outside [0, 2] at T = {t}"),
            });
        }
    }
    Ok(())
}

fn check_common(horizons: &[u64], n_trials: u32) -> banditvar::Result<()> {
    if horizons.is_empty() || horizons.iter().any(|&t| t < 2) {
        return Err(banditvar::Error::Parameter {
            name: "T",
            reason: "every horizon must be >= 2".into(),
        });
    }
    if n_trials < 2 {
        return Err(banditvar::Error::Parameter {
            name: "n_trials",
            reason: format!("need at least 2 trials, got {n_trials}"),
        });
    }
    Ok(())
}

/// Cheap checks run before any simulation so long sweeps fail fast.
fn validate(cfg: &ExperimentConfig) -> banditvar::Result<()> {
    let ucbf = |g: f64| PolicySpec::ucbf(ExplorationFunction::power_log(g)).validate();
    match &cfg.experiment {
        Experiment::Simulate {
            instance,
            policy,
            horizon,
            n_trials,
        } => {
            let inst = instance.resolve()?;
            policy.validate()?;
            check_common(&[*horizon], *n_trials)?;
            if *horizon < inst.k() as u64 {
                return Err(banditvar::Error::Parameter {
                    name: "T",
                    reason: format!("must be >= K = {}", inst.k()),
                });
            }
        }
        Experiment::SweepDelta {
            policy,
            horizon,
            delta_grid,
            n_trials,
        } => {
            policy.validate()?;
            check_common(&[*horizon], *n_trials)?;
            validate_grid(delta_grid, &[*horizon])?;
        }
        Experiment::Pareto {
            gammas,
            horizons,
            delta_grid,
            n_trials,
        } => {
            if gammas.is_empty() {
                return Err(banditvar::Error::Parameter {
                    name: "gammas",
                    reason: "must not be empty".into(),
                });
            }
            for &g in gammas {
                ucbf(g)?;
            }
            check_common(horizons, *n_trials)?;
            validate_grid(delta_grid, horizons)?;
        }
        Experiment::Fluid { f, .. } => {
            ExplorationFunction::new(f.a, f.gamma, f.beta)?;
        }
        Experiment::PairCheck {
            policy,
            delta,
            horizon,
            n_trials,
        } => {
            policy.validate()?;
            check_common(&[*horizon], *n_trials)?;
            banditvar::make_gap_instance(*delta)?;
        }
        Experiment::Example1 {
            horizon,
            n_trials,
            bins,
        } => {
            check_common(&[*horizon], *n_trials)?;
            if *bins == 0 {
                return Err(banditvar::Error::Parameter {
                    name: "bins",
                    reason: "must be >= 1".into(),
                });
            }
        }
        Experiment::Platform {
            gammas,
            horizon,
            rho,
            delta_grid,
            n_trials,
            ..
        } => {
            for &g in gammas {
                ucbf(g)?;
            }
            if !(*rho >= 0.0 && rho.is_finite()) {
                return Err(banditvar::Error::Parameter {
                    name: "rho",
                    reason: format!("must be >= 0, got {rho}"),
                });
            }
            check_common(&[*horizon], *n_trials)?;
            validate_grid(delta_grid, &[*horizon])?;
        }
    }
    Ok(())
}

fn write_manifest(
    out: &Path,
    cfg: &ExperimentConfig,
    threads: usize,
    outputs: &[String],
) -> anyhow::Result<()> {
    let manifest = json!({
        "version": banditvar::VERSION,
        "subcommand": cfg.experiment.name(),
        "seed": cfg.seed,
        "threads": threads,
        "outputs": outputs,
        "config": cfg,
    });
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    validate(&cfg).map_err(core_failure)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config(Some("threads".into()), "must be >= 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::from_run(anyhow::anyhow!("thread pool: {e}")))?;
    let outputs = pool
        .install(|| run::execute(&cfg, &cli.out))
        .map_err(Failure::from_run)?;
    write_manifest(&cli.out, &cfg, pool.current_num_threads(), &outputs).map_err(Failure::from_run)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::config(None, e.to_string().trim().to_string());
            return report(&f);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}

fn report(f: &Failure) -> ExitCode {
    let err = json!({
        "error": {
            "kind": f.kind,
            "field": f.field,
            "message": f.message,
        }
    });
    eprintln!("{err}");
    ExitCode::from(f.code)
}
