//! Seeded parallel replication and deterministic aggregation.
//!
//! A replication is one `(function draw, initialization)` pair. Game
//! draws depend only on `(master_seed, draw)`, initializations on
//! `(master_seed, draw, init)`, and agent streams on the replication
//! seed, so rosters can be compared on identical games and the outcome is
//! independent of worker count: results are folded in replication index
//! order whatever the completion order.

use std::fs;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::game::{
    self, GameTrace, InitObservation, PayoffTable, RunSettings,
};
use crate::rng::{self, tag};
use crate::space::ActionSpace;
use crate::trace;

use super::config::{ExperimentConfig, MetricKind};
use super::ExperimentError;

/// Largest tolerated share of numerically failed replications.
pub const FAILURE_THRESHOLD: f64 = 0.10;

/// One aggregated iteration row.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub iteration: usize,
    pub mean: f64,
    /// Sample standard deviation over replications divided by sqrt(n);
    /// absent when fewer than two replications survived.
    pub stderr: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    pub metric: MetricKind,
    pub agent: usize,
    pub rows: Vec<AggregateRow>,
}

/// Outcome of one replication.
#[derive(Debug)]
pub struct ReplicationReport {
    pub draw: usize,
    pub init: usize,
    pub trace_path: Option<PathBuf>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub aggregate: AggregateResult,
    pub reports: Vec<ReplicationReport>,
    /// Canonical CSV artifact, always written to `output_dir/results.csv`.
    pub csv_path: PathBuf,
}

pub(crate) fn build_spaces(cfg: &ExperimentConfig) -> Result<Vec<ActionSpace>, ExperimentError> {
    cfg.agents.iter().map(|a| a.space()).collect()
}

pub(crate) fn game_seed(cfg: &ExperimentConfig, draw: usize) -> u64 {
    rng::derive_seed(cfg.master_seed, &[tag::GAME, draw as u64])
}

pub(crate) fn replication_seed(cfg: &ExperimentConfig, draw: usize, init: usize) -> u64 {
    rng::derive_seed(cfg.master_seed, &[tag::REPLICATION, draw as u64, init as u64])
}

pub(crate) fn build_game(
    cfg: &ExperimentConfig,
    spaces: &[ActionSpace],
    draw: usize,
) -> Result<PayoffTable, ExperimentError> {
    Ok(PayoffTable::build(
        cfg.game.game_type,
        cfg.game.kernel,
        spaces.to_vec(),
        game_seed(cfg, draw),
    )?)
}

/// Draws the seeded joint actions and their noisy payoffs for one
/// initialization. All agents share the same joint actions (the history
/// is common knowledge under perfect monitoring); each observes its own
/// noisy payoff.
pub(crate) fn build_init(
    cfg: &ExperimentConfig,
    game: &PayoffTable,
    draw: usize,
    init: usize,
) -> Vec<InitObservation> {
    let mut stream = rng::stream(cfg.master_seed, &[tag::INIT, draw as u64, init as u64]);
    let m = game.num_agents();
    (0..cfg.init_size)
        .map(|_| {
            let joint_indices: Vec<usize> = (0..m)
                .map(|i| stream.random_range(0..game.joint().agent_space(i).size()))
                .collect();
            let noisy_payoffs: Vec<f64> = (0..m)
                .map(|i| {
                    let f = game.value(i, &joint_indices);
                    let sigma2 = cfg.agents[i].noise_variance;
                    if sigma2 > 0.0 {
                        f + Normal::new(0.0, sigma2.sqrt())
                            .expect("validated variance")
                            .sample(&mut stream)
                    } else {
                        f
                    }
                })
                .collect();
            InitObservation {
                joint_indices,
                noisy_payoffs,
            }
        })
        .collect()
}

/// Runs one replication end to end and returns its trace (metadata filled)
/// plus the per-iteration metric curve for the configured agent.
pub fn run_replication(
    cfg: &ExperimentConfig,
    spaces: &[ActionSpace],
    draw: usize,
    init: usize,
) -> Result<(GameTrace, Vec<f64>), ExperimentError> {
    let game = build_game(cfg, spaces, draw)?;
    run_replication_on(cfg, &game, draw, init)
}

/// Same as [`run_replication`] with the payoff table already built; the
/// experiment loop builds each draw's game once and shares it across
/// initializations (full-scale tables cost minutes per factorization).
pub fn run_replication_on(
    cfg: &ExperimentConfig,
    game: &PayoffTable,
    draw: usize,
    init: usize,
) -> Result<(GameTrace, Vec<f64>), ExperimentError> {
    let init_obs = build_init(cfg, game, draw, init);
    let settings = RunSettings {
        horizon: cfg.horizon,
        master_seed: replication_seed(cfg, draw, init),
        delta: cfg.delta,
        tight_beta: cfg.tight_beta,
        beta_scale: cfg.beta_scale,
    };
    let specs: Vec<_> = cfg.agents.iter().map(|a| a.to_spec()).collect();
    let mut trace = game::run_repeated_game(game, &specs, &settings, &init_obs)?;
    trace.meta.config_digest = cfg.digest();
    trace.meta.experiment_seed = cfg.master_seed;
    trace.meta.draw = draw;
    trace.meta.init = init;
    trace.meta.game_seed = game_seed(cfg, draw);
    let curve = metric_curve(cfg.metric, &trace, game, cfg.metric_agent)?;
    Ok((trace, curve))
}

pub(crate) fn metric_curve(
    metric: MetricKind,
    trace: &GameTrace,
    game: &PayoffTable,
    agent: usize,
) -> Result<Vec<f64>, ExperimentError> {
    Ok(match metric {
        MetricKind::MeanRegret => game::mean_regret_curve_from_trace(trace, agent),
        MetricKind::ExternalRegret => game::external_regret_curve(trace, game, agent)?,
    })
}

/// Mean and standard error per iteration, folded in replication index
/// order.
pub fn aggregate_curves(
    metric: MetricKind,
    agent: usize,
    horizon: usize,
    curves: &[Vec<f64>],
) -> AggregateResult {
    let n = curves.len();
    let mut rows = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let values: Vec<f64> = curves.iter().map(|c| c[t]).collect();
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n >= 2 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            Some((var / n as f64).sqrt())
        } else {
            None
        };
        rows.push(AggregateRow {
            iteration: t + 1,
            mean,
            stderr,
            n,
        });
    }
    AggregateResult {
        metric,
        agent,
        rows,
    }
}

/// Runs every replication (optionally across a fixed-size worker pool),
/// persists one trace file per replication plus the canonical
/// `results.csv`, and returns the aggregate. Fails with
/// [`ExperimentError::NumericalThreshold`] when more than 10% of
/// replications fail numerically; failed replications are excluded from
/// aggregation.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let spaces = build_spaces(cfg)?;
    let trace_dir = cfg.output_dir.join("traces");
    fs::create_dir_all(&trace_dir)?;

    let jobs: Vec<(usize, usize)> = (0..cfg.num_function_samples)
        .flat_map(|d| (0..cfg.num_inits).map(move |i| (d, i)))
        .collect();

    let run_all = || -> Vec<(usize, usize, Result<(GameTrace, Vec<f64>), String>)> {
        // One payoff table per draw, shared across its initializations.
        let games: Vec<Result<PayoffTable, String>> = (0..cfg.num_function_samples)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&d| build_game(cfg, &spaces, d).map_err(|e| e.to_string()))
            .collect();
        jobs.par_iter()
            .map(|&(draw, init)| {
                let res = match &games[draw] {
                    Ok(game) => {
                        run_replication_on(cfg, game, draw, init).map_err(|e| e.to_string())
                    }
                    Err(e) => Err(e.clone()),
                };
                (draw, init, res)
            })
            .collect()
    };
    let results = if workers == 0 {
        run_all()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| ExperimentError::Parse(format!("worker pool: {e}")))?;
        pool.install(run_all)
    };

    // Persist traces and fold curves in replication index order.
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut reports = Vec::with_capacity(results.len());
    let mut failed = 0usize;
    for (draw, init, res) in results {
        match res {
            Ok((trace, curve)) => {
                let path = trace_dir.join(format!("draw{draw:03}_init{init:03}.trace"));
                fs::write(&path, trace::to_string(&trace))?;
                curves.push(curve);
                reports.push(ReplicationReport {
                    draw,
                    init,
                    trace_path: Some(path),
                    error: None,
                });
            }
            Err(e) => {
                failed += 1;
                reports.push(ReplicationReport {
                    draw,
                    init,
                    trace_path: None,
                    error: Some(e),
                });
            }
        }
    }
    let total = reports.len();
    if (failed as f64) > FAILURE_THRESHOLD * total as f64 {
        return Err(ExperimentError::NumericalThreshold { failed, total });
    }
    let aggregate = aggregate_curves(cfg.metric, cfg.metric_agent, cfg.horizon, &curves);
    let csv_path = cfg.output_dir.join("results.csv");
    fs::write(&csv_path, super::output::to_csv(&aggregate))?;
    Ok(ExperimentOutput {
        aggregate,
        reports,
        csv_path,
    })
}

/// Recomputes the aggregate from persisted trace files. Mean regret needs
/// only the traces; external regret rebuilds each draw's payoff table from
/// the config (whose digest must match the traces).
pub fn aggregate_traces(
    trace_dir: &std::path::Path,
    metric: MetricKind,
    agent: usize,
    cfg: Option<&ExperimentConfig>,
) -> Result<AggregateResult, ExperimentError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(trace_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "trace").unwrap_or(false))
        .collect();
    if entries.is_empty() {
        return Err(ExperimentError::Validation {
            field: "trace-dir".into(),
            constraint: "contains no .trace files".into(),
        });
    }
    entries.sort();
    let mut traces = Vec::with_capacity(entries.len());
    for path in &entries {
        let text = fs::read_to_string(path)?;
        traces.push(trace::parse(&text)?);
    }
    traces.sort_by_key(|t| (t.meta.draw, t.meta.init));
    if traces
        .iter()
        .any(|t| t.meta.config_digest != traces[0].meta.config_digest)
    {
        return Err(ExperimentError::Validation {
            field: "trace-dir".into(),
            constraint: "traces come from different configurations".into(),
        });
    }
    let horizon = traces[0].horizon();
    let mut curves = Vec::with_capacity(traces.len());
    for t in &traces {
        if t.horizon() != horizon {
            return Err(ExperimentError::Validation {
                field: "trace-dir".into(),
                constraint: "traces have mismatched horizons".into(),
            });
        }
        let curve = match metric {
            MetricKind::MeanRegret => game::mean_regret_curve_from_trace(t, agent),
            MetricKind::ExternalRegret => {
                let cfg = cfg.ok_or_else(|| ExperimentError::Validation {
                    field: "config".into(),
                    constraint: "external-regret aggregation needs the experiment config".into(),
                })?;
                if t.meta.config_digest != cfg.digest() {
                    return Err(ExperimentError::Validation {
                        field: "config".into(),
                        constraint: format!(
                            "digest mismatch: trace {} vs config {}",
                            t.meta.config_digest,
                            cfg.digest()
                        ),
                    });
                }
                let spaces = build_spaces(cfg)?;
                let game = build_game(cfg, &spaces, t.meta.draw)?;
                game::external_regret_curve(t, &game, agent)?
            }
        };
        curves.push(curve);
    }
    Ok(aggregate_curves(metric, agent, horizon, &curves))
}

/// Offline audit: re-derives the named replication from the config and
/// compares its serialization byte-for-byte with the stored trace.
pub fn verify_trace(trace_path: &std::path::Path, cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    let stored = fs::read_to_string(trace_path)?;
    let parsed = trace::parse(&stored)?;
    let digest = cfg.digest();
    if parsed.meta.config_digest != digest {
        return Err(ExperimentError::Validation {
            field: "config".into(),
            constraint: format!(
                "digest mismatch: trace {} vs config {digest}",
                parsed.meta.config_digest
            ),
        });
    }
    let spaces = build_spaces(cfg)?;
    let (replayed, _) = run_replication(cfg, &spaces, parsed.meta.draw, parsed.meta.init)?;
    let replayed_text = trace::to_string(&replayed);
    if replayed_text != stored {
        return Err(ExperimentError::Validation {
            field: "trace".into(),
            constraint: "replayed trace differs from the stored one".into(),
        });
    }
    Ok(())
}
