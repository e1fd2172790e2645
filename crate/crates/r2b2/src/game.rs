//! Synthetic repeated games: payoff-table construction, the simultaneous
//! game loop under perfect monitoring, regret metrics, and the
//! line-delimited trace format.
//!
//! # Game loop
//!
//! Each iteration every agent selects an action *simultaneously*: a
//! selection reads only state frozen at the end of the previous iteration
//! (posteriors, level-0 states, opponent models) plus a per-iteration
//! derived stream, never another agent's current-round choice. Simulated
//! opponent actions inside level-k reasoning come from the reasoning
//! module, not from realized choices. After all selections are realized,
//! agents observe their own noisy payoffs and every learner state is
//! advanced — perfect monitoring makes all actions and payoffs common
//! knowledge, so an agent's model of an opponent (its posterior and
//! level-0 strategy) is reconstructible from the shared history; the
//! engine shares these values instead of recomputing identical copies.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{AcquisitionError, BetaSchedule};
use crate::gp::{sample_prior, GpError, GpPosterior};
use crate::kernel::KernelSpec;
use crate::level0::{Exp3State, GpMwState, Level0Config, MixedStrategy, StrategyError};
use crate::reasoning::{
    self, default_mc_samples, ExpectationMode, LevelKAgent, OpponentModel, OtherView,
    ReasoningError, ReasoningTrace, SelfView, TraceStep,
};
use crate::rng::{self, tag};
use crate::space::{ActionSpace, JointSpace, SpaceError};

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Reasoning(#[from] ReasoningError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trace format error: {0}")]
    Trace(String),
}

/// Relationship between the agents' payoff functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameType {
    /// All agents share one payoff function.
    CommonPayoff,
    /// Independent payoff functions per agent.
    GeneralSum,
    /// Agent 0 gets `f`; every other agent gets `1 - f`.
    ConstantSum,
}

/// Ground-truth payoffs as a dense table over the joint action grid,
/// scaled into `[0, 1]` per agent.
#[derive(Debug, Clone)]
pub struct PayoffTable {
    game_type: GameType,
    kernel: KernelSpec,
    joint: JointSpace,
    /// `values[agent][flat joint index]`.
    values: Vec<Vec<f64>>,
    /// Precomputed per-agent global maxima.
    max_values: Vec<f64>,
}

fn min_max_scale(values: &mut [f64]) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = hi - lo;
    if range < 1e-15 {
        values.iter_mut().for_each(|v| *v = 0.5);
    } else {
        values.iter_mut().for_each(|v| *v = (*v - lo) / range);
    }
}

impl PayoffTable {
    /// Samples the payoff function(s) from the GP prior over the joint grid
    /// and applies the per-type construction: common-payoff shares one
    /// scaled draw, general-sum scales independent draws, constant-sum
    /// scales agent 0's draw first and complements it.
    pub fn build(
        game_type: GameType,
        kernel: KernelSpec,
        spaces: Vec<ActionSpace>,
        seed: u64,
    ) -> Result<Self, GameError> {
        if spaces.len() < 2 {
            return Err(GameError::Config(format!(
                "a game needs at least 2 agents, got {}",
                spaces.len()
            )));
        }
        let joint = JointSpace::new(spaces)?;
        let points: Vec<Vec<f64>> = (0..joint.len()).map(|f| joint.joint_point_flat(f)).collect();
        let num_agents = joint.num_agents();
        let draw = |sub: u64| -> Result<Vec<f64>, GameError> {
            let mut v = sample_prior(
                &kernel,
                &points,
                rng::derive_seed(seed, &[tag::GAME_AGENT, sub]),
            )?;
            min_max_scale(&mut v);
            Ok(v)
        };
        let values: Vec<Vec<f64>> = match game_type {
            GameType::CommonPayoff => {
                let f = draw(0)?;
                vec![f; num_agents]
            }
            GameType::GeneralSum => (0..num_agents)
                .map(|i| draw(i as u64))
                .collect::<Result<_, _>>()?,
            GameType::ConstantSum => {
                let f = draw(0)?;
                let complement: Vec<f64> = f.iter().map(|v| 1.0 - v).collect();
                let mut all = vec![f];
                for _ in 1..num_agents {
                    all.push(complement.clone());
                }
                all
            }
        };
        let max_values = values
            .iter()
            .map(|v| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(Self {
            game_type,
            kernel,
            joint,
            values,
            max_values,
        })
    }

    /// Wraps explicit per-agent value tables (one entry per joint action,
    /// row-major over agent index order). The caller owns any scaling.
    pub fn from_values(
        game_type: GameType,
        kernel: KernelSpec,
        spaces: Vec<ActionSpace>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, GameError> {
        let joint = JointSpace::new(spaces)?;
        if values.len() != joint.num_agents() {
            return Err(GameError::Config(format!(
                "values: {} tables for {} agents",
                values.len(),
                joint.num_agents()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != joint.len() {
                return Err(GameError::Config(format!(
                    "values[{i}]: {} entries for {} joint actions",
                    v.len(),
                    joint.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(GameError::Config(format!("values[{i}]: non-finite entry")));
            }
        }
        let max_values = values
            .iter()
            .map(|v| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(Self {
            game_type,
            kernel,
            joint,
            values,
            max_values,
        })
    }

    pub fn game_type(&self) -> GameType {
        self.game_type
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn joint(&self) -> &JointSpace {
        &self.joint
    }

    pub fn num_agents(&self) -> usize {
        self.joint.num_agents()
    }

    pub fn value(&self, agent: usize, indices: &[usize]) -> f64 {
        self.values[agent][self.joint.flat_index(indices)]
    }

    pub fn value_flat(&self, agent: usize, flat: usize) -> f64 {
        self.values[agent][flat]
    }

    pub fn agent_values(&self, agent: usize) -> &[f64] {
        &self.values[agent]
    }

    /// Global maximum of the agent's payoff over the joint grid.
    pub fn max_value(&self, agent: usize) -> f64 {
        self.max_values[agent]
    }
}

/// How a level >= 1 agent evaluates expectations over opponent strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectationChoice {
    #[default]
    Exact,
    MonteCarlo,
}

/// One agent's configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    /// Reasoning level `k >= 0`.
    pub level: u32,
    /// Use the Lite variant for level-1 selection.
    #[serde(default)]
    pub lite: bool,
    pub level0: Level0Config,
    /// Model of each other agent's level-0 strategy, in agent order with
    /// this agent skipped. Absent means the opponent's actual strategy is
    /// known (the knowledge assumption of level-k reasoning).
    #[serde(default)]
    pub believed_opponent_level0: Option<Vec<Level0Config>>,
    /// Observation-noise variance on this agent's payoffs.
    pub noise_variance: f64,
    /// Monte Carlo budget; defaults by opponent dimension when absent.
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub expectation: ExpectationChoice,
}

fn default_beta_scale() -> f64 {
    1.0
}

/// Run-level knobs shared by all agents.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunSettings {
    pub horizon: usize,
    pub master_seed: u64,
    pub delta: f64,
    #[serde(default)]
    pub tight_beta: bool,
    /// Multiplier applied to the confidence schedule inside game runs.
    /// The theoretical schedule is famously conservative in practice;
    /// 1.0 keeps it untouched.
    #[serde(default = "default_beta_scale")]
    pub beta_scale: f64,
}

/// A joint action with the noisy payoff every agent observed for it,
/// conditioned into the posteriors before iteration 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitObservation {
    pub joint_indices: Vec<usize>,
    pub noisy_payoffs: Vec<f64>,
}

/// Identification and audit metadata carried by a trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Digest of the experiment config that produced the run (empty for
    /// standalone runs).
    pub config_digest: String,
    pub experiment_seed: u64,
    pub draw: usize,
    pub init: usize,
    pub game_seed: u64,
    /// The engine-level master seed of this run.
    pub run_seed: u64,
    /// Per-agent global payoff maxima, frozen so mean regret recomputes
    /// from the trace alone.
    pub fmax: Vec<f64>,
}

/// Complete record of one repeated game under perfect monitoring: every
/// agent's action and payoffs at every iteration, plus reasoning chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTrace {
    pub meta: TraceMeta,
    pub init: Vec<InitObservation>,
    /// `actions[t][agent]`, `t` zero-based over `1..=horizon`.
    pub actions: Vec<Vec<usize>>,
    pub noisy_payoffs: Vec<Vec<f64>>,
    pub true_payoffs: Vec<Vec<f64>>,
    /// Per-agent gap to its global maximum, `fmax_i - f_i(joint_t)`.
    pub instantaneous_gaps: Vec<Vec<f64>>,
    /// Reasoning chains for agents that selected via recursion this round.
    pub reasoning: Vec<Vec<Option<ReasoningTrace>>>,
}

impl GameTrace {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn num_agents(&self) -> usize {
        self.meta.fmax.len()
    }
}

// ---------------------------------------------------------------------------
// Engine internals
// ---------------------------------------------------------------------------

enum Level0State {
    RandomSearch,
    Exp3(Exp3State),
    GpMw(GpMwState),
}

impl Level0State {
    fn new(
        config: &Level0Config,
        space: &ActionSpace,
        kernel: &KernelSpec,
        horizon: usize,
        seed: u64,
    ) -> Result<Self, GameError> {
        Ok(match config {
            Level0Config::RandomSearch => Level0State::RandomSearch,
            Level0Config::Exp3(params) => Level0State::Exp3(Exp3State::new(
                space,
                kernel,
                params.clone(),
                Some(horizon),
                seed,
            )?),
            Level0Config::GpMw(params) => {
                Level0State::GpMw(GpMwState::new(space.size(), params.clone(), Some(horizon))?)
            }
        })
    }

    fn distribution(&self, space: &ActionSpace) -> Result<MixedStrategy, GameError> {
        Ok(match self {
            Level0State::RandomSearch => MixedStrategy::uniform(space)?,
            Level0State::Exp3(st) => st.distribution(space)?,
            Level0State::GpMw(st) => st.distribution(space)?,
        })
    }

    /// Advances the state with the modeled agent's round-`t` data. `gp` is
    /// that agent's posterior *after* conditioning on round `t`, and
    /// `next_beta` the schedule value for round `t + 1`.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &mut self,
        space: &ActionSpace,
        position: usize,
        gp: &GpPosterior,
        others_blocks: &[&[f64]],
        observed_payoff: f64,
        played: usize,
        next_beta: f64,
    ) -> Result<(), GameError> {
        match self {
            Level0State::RandomSearch => {}
            Level0State::Exp3(st) => {
                st.step(space, observed_payoff, played)?;
            }
            Level0State::GpMw(st) => {
                st.update(gp, space, position, others_blocks, next_beta)?;
            }
        }
        Ok(())
    }
}

/// A believer's model of one opponent's level-0 strategy.
enum OpponentLevel0Model {
    /// Believed config matches reality; read the opponent's actual state.
    Actual,
    /// Divergent belief; the believer maintains its own simulated state.
    Simulated(Level0State),
}

struct AgentRuntime {
    spec: AgentSpec,
    seed: u64,
    posterior: GpPosterior,
    level0: Level0State,
    /// One model per other agent, in agent order with self skipped.
    opponent_models: Vec<OpponentLevel0Model>,
    beta: BetaSchedule,
}

fn others_indices(num_agents: usize, me: usize) -> Vec<usize> {
    (0..num_agents).filter(|&j| j != me).collect()
}

fn validate(game: &PayoffTable, agents: &[AgentSpec], settings: &RunSettings) -> Result<(), GameError> {
    let m = game.num_agents();
    if agents.len() != m {
        return Err(GameError::Config(format!(
            "agents: roster has {} entries for a {}-agent game",
            agents.len(),
            m
        )));
    }
    if settings.horizon == 0 {
        return Err(GameError::Config("horizon: must be >= 1".into()));
    }
    if !(settings.delta > 0.0 && settings.delta < 1.0) {
        return Err(GameError::Config(format!(
            "delta: must lie in (0, 1), got {}",
            settings.delta
        )));
    }
    if !(settings.beta_scale > 0.0) || !settings.beta_scale.is_finite() {
        return Err(GameError::Config(format!(
            "beta_scale: must be positive and finite, got {}",
            settings.beta_scale
        )));
    }
    for (i, spec) in agents.iter().enumerate() {
        if !spec.noise_variance.is_finite() || spec.noise_variance < 0.0 {
            return Err(GameError::Config(format!(
                "agents[{i}].noise_variance: must be finite and nonnegative, got {}",
                spec.noise_variance
            )));
        }
        if spec.lite && spec.level != 1 {
            return Err(GameError::Config(format!(
                "agents[{i}].lite: the Lite variant applies to level 1 only, got level {}",
                spec.level
            )));
        }
        if let Some(beliefs) = &spec.believed_opponent_level0 {
            if beliefs.len() != m - 1 {
                return Err(GameError::Config(format!(
                    "agents[{i}].believed_opponent_level0: needs {} entries, got {}",
                    m - 1,
                    beliefs.len()
                )));
            }
        }
        if spec.mc_samples == Some(0) {
            return Err(GameError::Config(format!(
                "agents[{i}].mc_samples: must be >= 1 when set"
            )));
        }
        if m > 2 && spec.level >= 2 {
            if spec.level > 2 {
                return Err(GameError::Config(format!(
                    "agents[{i}].level: level {} reasoning is unsupported with more than two agents",
                    spec.level
                )));
            }
            if agents
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && other.level >= 2)
            {
                return Err(GameError::Config(format!(
                    "agents[{i}].level: multi-agent level-2 reasoning requires every other agent at level 0 or 1"
                )));
            }
        }
    }
    Ok(())
}

/// Runs one repeated game and returns its complete trace. Bit-identical
/// for identical `(game, agents, settings, init)`.
pub fn run_repeated_game(
    game: &PayoffTable,
    agents: &[AgentSpec],
    settings: &RunSettings,
    init: &[InitObservation],
) -> Result<GameTrace, GameError> {
    validate(game, agents, settings)?;
    let m = game.num_agents();
    let horizon = settings.horizon;
    let kernel = *game.kernel();

    let mut runtimes: Vec<AgentRuntime> = Vec::with_capacity(m);
    for (i, spec) in agents.iter().enumerate() {
        let seed = rng::derive_seed(settings.master_seed, &[tag::AGENT, i as u64]);
        let space = game.joint().agent_space(i);
        let level0 = Level0State::new(
            &spec.level0,
            space,
            &kernel,
            horizon,
            rng::derive_seed(seed, &[tag::FEATURES]),
        )?;
        let mut opponent_models = Vec::new();
        for (slot, &j) in others_indices(m, i).iter().enumerate() {
            let believed = spec
                .believed_opponent_level0
                .as_ref()
                .map(|b| b[slot].clone());
            let model = match believed {
                None => OpponentLevel0Model::Actual,
                Some(cfg) if cfg == agents[j].level0 => OpponentLevel0Model::Actual,
                Some(cfg) => OpponentLevel0Model::Simulated(Level0State::new(
                    &cfg,
                    game.joint().agent_space(j),
                    &kernel,
                    horizon,
                    rng::derive_seed(seed, &[tag::OPP_MODEL, j as u64]),
                )?),
            };
            opponent_models.push(model);
        }
        runtimes.push(AgentRuntime {
            spec: spec.clone(),
            seed,
            posterior: GpPosterior::new(kernel, spec.noise_variance)?,
            level0,
            opponent_models,
            beta: BetaSchedule::with_tightness(space.size(), settings.delta, settings.tight_beta)?,
        });
    }

    // Seed initial observations into every posterior.
    for obs in init {
        if obs.joint_indices.len() != m || obs.noisy_payoffs.len() != m {
            return Err(GameError::Config(
                "init: joint_indices and noisy_payoffs must have one entry per agent".into(),
            ));
        }
        let z = game.joint().joint_point(&obs.joint_indices);
        for (rt, &y) in runtimes.iter_mut().zip(&obs.noisy_payoffs) {
            rt.posterior = rt.posterior.condition(&z, y)?;
        }
    }

    let mut trace = GameTrace {
        meta: TraceMeta {
            run_seed: settings.master_seed,
            fmax: (0..m).map(|i| game.max_value(i)).collect(),
            ..TraceMeta::default()
        },
        init: init.to_vec(),
        actions: Vec::with_capacity(horizon),
        noisy_payoffs: Vec::with_capacity(horizon),
        true_payoffs: Vec::with_capacity(horizon),
        instantaneous_gaps: Vec::with_capacity(horizon),
        reasoning: Vec::with_capacity(horizon),
    };

    for t in 1..=horizon {
        // Freeze every agent's current level-0 distribution (its own play
        // distribution, and what others know of it under the knowledge
        // assumption).
        let mut actual_dists: Vec<MixedStrategy> = Vec::with_capacity(m);
        for (i, rt) in runtimes.iter().enumerate() {
            actual_dists.push(rt.level0.distribution(game.joint().agent_space(i))?);
        }
        let mut believed_dists: Vec<Vec<MixedStrategy>> = Vec::with_capacity(m);
        for (i, rt) in runtimes.iter().enumerate() {
            let mut row = Vec::new();
            for (slot, &j) in others_indices(m, i).iter().enumerate() {
                let dist = match &rt.opponent_models[slot] {
                    OpponentLevel0Model::Actual => actual_dists[j].clone(),
                    OpponentLevel0Model::Simulated(state) => {
                        state.distribution(game.joint().agent_space(j))?
                    }
                };
                row.push(dist);
            }
            believed_dists.push(row);
        }

        // Simultaneous selection: reads only frozen state.
        let mut actions = vec![0usize; m];
        let mut chains: Vec<Option<ReasoningTrace>> = vec![None; m];
        for (i, rt) in runtimes.iter().enumerate() {
            let own_space = game.joint().agent_space(i);
            let beta_t = rt.beta.beta(t)? * settings.beta_scale;
            let mut select_rng = rng::stream(rt.seed, &[tag::SELECT, t as u64]);
            let others = others_indices(m, i);
            let mode = match rt.spec.expectation {
                ExpectationChoice::Exact => ExpectationMode::Exact,
                ExpectationChoice::MonteCarlo => {
                    let opp_dim: usize = others
                        .iter()
                        .map(|&j| game.joint().agent_space(j).dim())
                        .sum();
                    ExpectationMode::MonteCarlo {
                        samples: rt
                            .spec
                            .mc_samples
                            .unwrap_or_else(|| default_mc_samples(opp_dim)),
                    }
                }
            };
            match rt.spec.level {
                0 => {
                    actions[i] = actual_dists[i].sample(&mut select_rng)?;
                }
                1 if rt.spec.lite => {
                    // Lite best-responds to one sample per opponent.
                    let mut blocks: Vec<&[f64]> = Vec::with_capacity(m - 1);
                    let mut steps = Vec::with_capacity(m);
                    for (slot, &j) in others.iter().enumerate() {
                        let sampled = believed_dists[i][slot].sample(&mut select_rng)?;
                        blocks.push(game.joint().agent_space(j).point(sampled));
                        steps.push(TraceStep {
                            level: 0,
                            agent: j,
                            action: sampled,
                        });
                    }
                    let slice = crate::acquisition::ucb_slice(
                        &rt.posterior,
                        own_space,
                        i,
                        &blocks,
                        beta_t,
                    )?;
                    let chosen = reasoning::argmax_lowest(&slice);
                    steps.push(TraceStep {
                        level: 1,
                        agent: i,
                        action: chosen,
                    });
                    actions[i] = chosen;
                    chains[i] = Some(ReasoningTrace { steps });
                }
                1 => {
                    if m == 2 {
                        let j = others[0];
                        let (chosen, chain) = reasoning::level1_select(
                            &rt.posterior,
                            own_space,
                            i,
                            i,
                            OpponentModel {
                                space: game.joint().agent_space(j),
                                strategy: &believed_dists[i][0],
                            },
                            beta_t,
                            mode,
                            &mut select_rng,
                        )?;
                        actions[i] = chosen;
                        chains[i] = Some(chain);
                    } else {
                        let models: Vec<OpponentModel<'_>> = others
                            .iter()
                            .enumerate()
                            .map(|(slot, &j)| OpponentModel {
                                space: game.joint().agent_space(j),
                                strategy: &believed_dists[i][slot],
                            })
                            .collect();
                        let chosen = reasoning::multiagent_level1_select(
                            &rt.posterior,
                            own_space,
                            i,
                            &models,
                            beta_t,
                            mode,
                            &mut select_rng,
                        )?;
                        actions[i] = chosen;
                        chains[i] = Some(ReasoningTrace {
                            steps: vec![TraceStep {
                                level: 1,
                                agent: i,
                                action: chosen,
                            }],
                        });
                    }
                }
                k if m == 2 => {
                    let j = others[0];
                    let opp_rt = &runtimes[j];
                    let me = LevelKAgent {
                        agent: i,
                        gp: &rt.posterior,
                        space: own_space,
                        position: i,
                        beta_t,
                        opponent_level0: &believed_dists[i][0],
                    };
                    // The opponent's simulated base case best-responds to
                    // this agent's own level-0 strategy, which it knows.
                    let opp = LevelKAgent {
                        agent: j,
                        gp: &opp_rt.posterior,
                        space: game.joint().agent_space(j),
                        position: j,
                        beta_t: opp_rt.beta.beta(t)? * settings.beta_scale,
                        opponent_level0: &actual_dists[i],
                    };
                    let (chosen, chain) =
                        reasoning::levelk_select(&me, &opp, k, mode, &mut select_rng)?;
                    actions[i] = chosen;
                    chains[i] = Some(chain);
                }
                _ => {
                    // m > 2 at level 2 (validation rejected anything higher).
                    let own_view = SelfView {
                        gp: &rt.posterior,
                        space: own_space,
                        beta_t,
                        level0: &actual_dists[i],
                    };
                    let other_views: Vec<OtherView<'_>> = others
                        .iter()
                        .enumerate()
                        .map(|(slot, &j)| OtherView {
                            agent: j,
                            space: game.joint().agent_space(j),
                            level: agents[j].level,
                            level0: &believed_dists[i][slot],
                            gp: Some(&runtimes[j].posterior),
                            beta_t: runtimes[j].beta.beta(t).map(|b| b * settings.beta_scale).unwrap_or(beta_t),
                        })
                        .collect();
                    let (chosen, sims) = reasoning::multiagent_level2_select(
                        &own_view,
                        i,
                        &other_views,
                        mode,
                        &mut select_rng,
                    )?;
                    let mut steps: Vec<TraceStep> = others
                        .iter()
                        .zip(&sims)
                        .filter_map(|(&j, sim)| {
                            sim.map(|action| TraceStep {
                                level: 1,
                                agent: j,
                                action,
                            })
                        })
                        .collect();
                    steps.push(TraceStep {
                        level: 2,
                        agent: i,
                        action: chosen,
                    });
                    actions[i] = chosen;
                    chains[i] = Some(ReasoningTrace { steps });
                }
            }
        }

        // Realize payoffs and observation noise.
        let joint_point = game.joint().joint_point(&actions);
        let mut true_payoffs = Vec::with_capacity(m);
        let mut noisy = Vec::with_capacity(m);
        let mut gaps = Vec::with_capacity(m);
        for (i, rt) in runtimes.iter().enumerate() {
            let f = game.value(i, &actions);
            let eps = if rt.spec.noise_variance > 0.0 {
                let mut noise_rng = rng::stream(rt.seed, &[tag::NOISE, t as u64]);
                Normal::new(0.0, rt.spec.noise_variance.sqrt())
                    .expect("validated noise variance")
                    .sample(&mut noise_rng)
            } else {
                0.0
            };
            true_payoffs.push(f);
            noisy.push(f + eps);
            gaps.push(game.max_value(i) - f);
        }

        trace.actions.push(actions.clone());
        trace.true_payoffs.push(true_payoffs);
        trace.noisy_payoffs.push(noisy.clone());
        trace.instantaneous_gaps.push(gaps);
        trace.reasoning.push(chains);

        // Perfect-monitoring updates: posteriors first, then level-0
        // states (GP-MW reads the freshly conditioned posterior), then the
        // believers' simulated opponent models.
        for (rt, &y) in runtimes.iter_mut().zip(&noisy) {
            rt.posterior = rt.posterior.condition(&joint_point, y)?;
        }
        let posteriors: Vec<GpPosterior> = runtimes.iter().map(|rt| rt.posterior.clone()).collect();
        for (i, rt) in runtimes.iter_mut().enumerate() {
            let own_space = game.joint().agent_space(i);
            let blocks: Vec<&[f64]> = others_indices(m, i)
                .iter()
                .map(|&j| game.joint().agent_space(j).point(actions[j]))
                .collect();
            let next_beta = rt.beta.beta(t + 1)? * settings.beta_scale;
            rt.level0.advance(
                own_space,
                i,
                &posteriors[i],
                &blocks,
                noisy[i],
                actions[i],
                next_beta,
            )?;
        }
        for i in 0..m {
            let others = others_indices(m, i);
            for (slot, &j) in others.iter().enumerate() {
                if let OpponentLevel0Model::Simulated(state) =
                    &mut runtimes[i].opponent_models[slot]
                {
                    let j_space = game.joint().agent_space(j);
                    let j_blocks: Vec<&[f64]> = others_indices(m, j)
                        .iter()
                        .map(|&jj| game.joint().agent_space(jj).point(actions[jj]))
                        .collect();
                    let j_next_beta = BetaSchedule::with_tightness(
                        j_space.size(),
                        settings.delta,
                        settings.tight_beta,
                    )?
                    .beta(t + 1)?
                        * settings.beta_scale;
                    state.advance(
                        j_space,
                        j,
                        &posteriors[j],
                        &j_blocks,
                        noisy[j],
                        actions[j],
                        j_next_beta,
                    )?;
                }
            }
        }
    }

    Ok(trace)
}

// ---------------------------------------------------------------------------
// Regret metrics
// ---------------------------------------------------------------------------

/// External regret of `agent` over the first `up_to` iterations: the
/// hindsight-best fixed own action against the realized opponent sequence,
/// minus the payoff actually collected. Uses true (noise-free) payoffs
/// from the table; observations only ever affect learning.
pub fn external_regret(
    trace: &GameTrace,
    game: &PayoffTable,
    agent: usize,
    up_to: usize,
) -> Result<f64, GameError> {
    Ok(*external_regret_curve_up_to(trace, game, agent, up_to)?
        .last()
        .ok_or_else(|| GameError::Trace("empty prefix".into()))?)
}

/// External regret at every prefix `1..=horizon`, with the hindsight
/// argmax recomputed per prefix.
pub fn external_regret_curve(
    trace: &GameTrace,
    game: &PayoffTable,
    agent: usize,
) -> Result<Vec<f64>, GameError> {
    external_regret_curve_up_to(trace, game, agent, trace.horizon())
}

fn external_regret_curve_up_to(
    trace: &GameTrace,
    game: &PayoffTable,
    agent: usize,
    up_to: usize,
) -> Result<Vec<f64>, GameError> {
    if up_to == 0 || up_to > trace.horizon() {
        return Err(GameError::Trace(format!(
            "prefix {up_to} invalid for trace length {}",
            trace.horizon()
        )));
    }
    let own_size = game.joint().agent_space(agent).size();
    let mut cumulative = vec![0.0f64; own_size];
    let mut realized = 0.0;
    let mut curve = Vec::with_capacity(up_to);
    let mut indices_buf: Vec<usize> = Vec::new();
    for t in 0..up_to {
        indices_buf.clear();
        indices_buf.extend_from_slice(&trace.actions[t]);
        realized += game.value(agent, &indices_buf);
        for (a, cum) in cumulative.iter_mut().enumerate() {
            indices_buf[agent] = a;
            *cum += game.value(agent, &indices_buf);
        }
        let best = cumulative.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        curve.push(best - realized);
    }
    Ok(curve)
}

/// Mean regret of `agent` over the first `up_to` iterations: the average
/// gap to the global maximum of the agent's own payoff table. Pessimistic
/// upper bound on `external_regret / up_to`.
pub fn mean_regret(
    trace: &GameTrace,
    game: &PayoffTable,
    agent: usize,
    up_to: usize,
) -> Result<f64, GameError> {
    if up_to == 0 || up_to > trace.horizon() {
        return Err(GameError::Trace(format!(
            "prefix {up_to} invalid for trace length {}",
            trace.horizon()
        )));
    }
    let fmax = game.max_value(agent);
    let total: f64 = trace.actions[..up_to]
        .iter()
        .map(|indices| fmax - game.value(agent, indices))
        .sum();
    Ok(total / up_to as f64)
}

/// Mean-regret value at every prefix, from trace data alone (the frozen
/// `fmax` and logged true payoffs).
pub fn mean_regret_curve_from_trace(trace: &GameTrace, agent: usize) -> Vec<f64> {
    let fmax = trace.meta.fmax[agent];
    let mut total = 0.0;
    trace
        .true_payoffs
        .iter()
        .enumerate()
        .map(|(t, payoffs)| {
            total += fmax - payoffs[agent];
            total / (t + 1) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level0::GpMwParams;
    use crate::reasoning::{level1_select, OpponentModel};
    use rand_chacha::rand_core::SeedableRng;

    fn se(l: f64) -> KernelSpec {
        KernelSpec::squared_exponential(l).unwrap()
    }

    fn line_spaces(n: usize) -> Vec<ActionSpace> {
        vec![ActionSpace::grid(1, n).unwrap(), ActionSpace::grid(1, n).unwrap()]
    }

    fn uniform_agent(noise: f64) -> AgentSpec {
        AgentSpec {
            level: 0,
            lite: false,
            level0: Level0Config::RandomSearch,
            believed_opponent_level0: None,
            noise_variance: noise,
            mc_samples: None,
            expectation: ExpectationChoice::Exact,
        }
    }

    fn gpmw_agent(level: u32, lite: bool) -> AgentSpec {
        AgentSpec {
            level,
            lite,
            level0: Level0Config::GpMw(GpMwParams::default()),
            believed_opponent_level0: None,
            noise_variance: 0.01,
            mc_samples: None,
            expectation: ExpectationChoice::Exact,
        }
    }

    fn settings(horizon: usize, seed: u64) -> RunSettings {
        RunSettings {
            horizon,
            master_seed: seed,
            delta: 0.1,
            tight_beta: false,
            beta_scale: 1.0,
        }
    }

    // ── Payoff tables ────────────────────────────────────────────────

    #[test]
    fn constant_sum_identity_holds_tablewise() {
        let game =
            PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(8), 5).unwrap();
        let worst = (0..game.joint().len())
            .map(|f| (game.value_flat(0, f) + game.value_flat(1, f) - 1.0).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-12, "max |f1 + f2 - 1| = {worst}");
    }

    #[test]
    fn common_payoff_tables_are_identical() {
        let game =
            PayoffTable::build(GameType::CommonPayoff, se(0.1), line_spaces(8), 6).unwrap();
        assert_eq!(game.agent_values(0), game.agent_values(1));
    }

    #[test]
    fn tables_are_scaled_into_unit_interval() {
        for gt in [GameType::CommonPayoff, GameType::GeneralSum, GameType::ConstantSum] {
            let game = PayoffTable::build(gt, se(0.1), line_spaces(10), 7).unwrap();
            for agent in 0..2 {
                let vals = game.agent_values(agent);
                assert!(vals.iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
            }
        }
    }

    #[test]
    fn general_sum_draws_are_uncorrelated_on_average() {
        let mut corr_sum = 0.0;
        let n_seeds = 10;
        for seed in 0..n_seeds {
            let game =
                PayoffTable::build(GameType::GeneralSum, se(0.1), line_spaces(15), seed).unwrap();
            let (a, b) = (game.agent_values(0), game.agent_values(1));
            let n = a.len() as f64;
            let (ma, mb) = (
                a.iter().sum::<f64>() / n,
                b.iter().sum::<f64>() / n,
            );
            let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
            let (va, vb) = (
                a.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>() / n,
                b.iter().map(|y| (y - mb) * (y - mb)).sum::<f64>() / n,
            );
            corr_sum += cov / (va * vb).sqrt();
        }
        let avg = corr_sum / n_seeds as f64;
        assert!(avg.abs() < 0.1, "average general-sum correlation {avg}");
    }

    #[test]
    fn build_is_deterministic_in_seed() {
        let a = PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(6), 9).unwrap();
        let b = PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(6), 9).unwrap();
        assert_eq!(a.agent_values(0), b.agent_values(0));
    }

    // ── Engine ───────────────────────────────────────────────────────

    #[test]
    fn one_iteration_smoke() {
        let game = PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(4), 1).unwrap();
        let agents = vec![uniform_agent(0.01), uniform_agent(0.01)];
        let trace = run_repeated_game(&game, &agents, &settings(1, 3), &[]).unwrap();
        assert_eq!(trace.horizon(), 1);
        assert!(trace.actions[0][0] < 4 && trace.actions[0][1] < 4);
        assert_eq!(trace.meta.fmax.len(), 2);
    }

    #[test]
    fn zero_noise_observations_equal_table_values() {
        let game = PayoffTable::build(GameType::GeneralSum, se(0.1), line_spaces(4), 2).unwrap();
        let agents = vec![uniform_agent(0.0), uniform_agent(0.0)];
        let trace = run_repeated_game(&game, &agents, &settings(5, 4), &[]).unwrap();
        for t in 0..5 {
            for i in 0..2 {
                assert_eq!(trace.noisy_payoffs[t][i], trace.true_payoffs[t][i]);
                assert_eq!(trace.true_payoffs[t][i], game.value(i, &trace.actions[t]));
            }
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let game = PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(5), 3).unwrap();
        let agents = vec![gpmw_agent(1, false), gpmw_agent(0, false)];
        let init = vec![InitObservation {
            joint_indices: vec![2, 3],
            noisy_payoffs: vec![0.4, 0.6],
        }];
        let s = settings(10, 5);
        let a = run_repeated_game(&game, &agents, &s, &init).unwrap();
        let b = run_repeated_game(&game, &agents, &s, &init).unwrap();
        assert_eq!(crate::trace::to_string(&a), crate::trace::to_string(&b));
    }

    #[test]
    fn noise_residual_statistics_match_configuration() {
        // 10^4 logged residuals across many short games.
        let sigma2 = 0.04;
        let mut residuals = Vec::with_capacity(10_000);
        let game = PayoffTable::build(GameType::GeneralSum, se(0.1), line_spaces(4), 8).unwrap();
        let agents = vec![uniform_agent(sigma2), uniform_agent(sigma2)];
        let mut seed = 0u64;
        while residuals.len() < 10_000 {
            let trace = run_repeated_game(&game, &agents, &settings(50, 1000 + seed), &[]).unwrap();
            for t in 0..trace.horizon() {
                for i in 0..2 {
                    residuals.push(trace.noisy_payoffs[t][i] - trace.true_payoffs[t][i]);
                }
            }
            seed += 1;
        }
        residuals.truncate(10_000);
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let var = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        let sigma = sigma2_sqrt(sigma2);
        assert!(mean.abs() < 3.0 * sigma / 100.0, "residual mean {mean}");
        assert!((var - sigma2).abs() < 0.1 * sigma2, "residual variance {var}");
    }

    fn sigma2_sqrt(v: f64) -> f64 {
        v.sqrt()
    }

    #[test]
    fn level1_choice_recomputable_from_prefix_history() {
        // No-information-leak audit: rebuild iteration t's level-1 choice
        // offline from the t-1 prefix of the trace (random-search
        // opponent, so the believed strategy is uniform).
        let game = PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(6), 11).unwrap();
        let agents = vec![gpmw_agent(1, false), uniform_agent(0.01)];
        let mut agents = agents;
        agents[0].believed_opponent_level0 = Some(vec![Level0Config::RandomSearch]);
        let init = vec![InitObservation {
            joint_indices: vec![1, 4],
            noisy_payoffs: vec![0.3, 0.7],
        }];
        let s = settings(12, 21);
        let trace = run_repeated_game(&game, &agents, &s, &init).unwrap();

        let own_space = game.joint().agent_space(0);
        let opp_space = game.joint().agent_space(1);
        let uniform = MixedStrategy::uniform(opp_space).unwrap();
        let beta = BetaSchedule::new(own_space.size(), s.delta).unwrap();
        for t in [1usize, 5, 12] {
            // Posterior from the prefix, conditioned in engine order.
            let mut gp = GpPosterior::new(*game.kernel(), agents[0].noise_variance).unwrap();
            for obs in &init {
                let z = game.joint().joint_point(&obs.joint_indices);
                gp = gp.condition(&z, obs.noisy_payoffs[0]).unwrap();
            }
            for s_prev in 0..t - 1 {
                let z = game.joint().joint_point(&trace.actions[s_prev]);
                gp = gp.condition(&z, trace.noisy_payoffs[s_prev][0]).unwrap();
            }
            let mut dummy = rand_chacha::ChaCha12Rng::seed_from_u64(0);
            let (recomputed, _) = level1_select(
                &gp,
                own_space,
                0,
                0,
                OpponentModel { space: opp_space, strategy: &uniform },
                beta.beta(t).unwrap(),
                crate::reasoning::ExpectationMode::Exact,
                &mut dummy,
            )
            .unwrap();
            assert_eq!(recomputed, trace.actions[t - 1][0], "iteration {t}");
        }
    }

    #[test]
    fn gpmw_opponent_model_recomputable_from_prefix_history() {
        // Same audit against a GP-MW opponent: rebuild the opponent's
        // mixed strategy by replaying its multiplicative updates from the
        // shared history, then rebuild the level-1 choice.
        let game = PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(6), 31).unwrap();
        let agents = vec![gpmw_agent(1, false), gpmw_agent(0, false)];
        let init = vec![InitObservation {
            joint_indices: vec![0, 5],
            noisy_payoffs: vec![0.2, 0.8],
        }];
        let s = settings(10, 33);
        let trace = run_repeated_game(&game, &agents, &s, &init).unwrap();

        let own_space = game.joint().agent_space(0);
        let opp_space = game.joint().agent_space(1);
        let beta_me = BetaSchedule::new(own_space.size(), s.delta).unwrap();
        let beta_opp = BetaSchedule::new(opp_space.size(), s.delta).unwrap();
        let t = 10usize;

        // Opponent posterior and GP-MW state replayed from the history.
        let mut gp_opp = GpPosterior::new(*game.kernel(), agents[1].noise_variance).unwrap();
        for obs in &init {
            let z = game.joint().joint_point(&obs.joint_indices);
            gp_opp = gp_opp.condition(&z, obs.noisy_payoffs[1]).unwrap();
        }
        let mut mw = GpMwState::new(opp_space.size(), GpMwParams::default(), Some(s.horizon)).unwrap();
        for s_prev in 0..t - 1 {
            let z = game.joint().joint_point(&trace.actions[s_prev]);
            gp_opp = gp_opp.condition(&z, trace.noisy_payoffs[s_prev][1]).unwrap();
            let my_block = game.joint().agent_space(0).point(trace.actions[s_prev][0]);
            mw.update(
                &gp_opp,
                opp_space,
                1,
                &[my_block],
                beta_opp.beta(s_prev + 2).unwrap(),
            )
            .unwrap();
        }
        let believed = mw.distribution(opp_space).unwrap();

        // My posterior from the prefix.
        let mut gp_me = GpPosterior::new(*game.kernel(), agents[0].noise_variance).unwrap();
        for obs in &init {
            let z = game.joint().joint_point(&obs.joint_indices);
            gp_me = gp_me.condition(&z, obs.noisy_payoffs[0]).unwrap();
        }
        for s_prev in 0..t - 1 {
            let z = game.joint().joint_point(&trace.actions[s_prev]);
            gp_me = gp_me.condition(&z, trace.noisy_payoffs[s_prev][0]).unwrap();
        }
        let mut dummy = rand_chacha::ChaCha12Rng::seed_from_u64(0);
        let (recomputed, _) = level1_select(
            &gp_me,
            own_space,
            0,
            0,
            OpponentModel { space: opp_space, strategy: &believed },
            beta_me.beta(t).unwrap(),
            crate::reasoning::ExpectationMode::Exact,
            &mut dummy,
        )
        .unwrap();
        assert_eq!(recomputed, trace.actions[t - 1][0]);
    }

    #[test]
    fn validation_rejects_bad_rosters() {
        let game = PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(4), 14).unwrap();
        // Wrong roster size.
        let err = run_repeated_game(&game, &[uniform_agent(0.01)], &settings(3, 0), &[]);
        assert!(matches!(err, Err(GameError::Config(_))));
        // Lite at level 2.
        let mut bad = gpmw_agent(2, false);
        bad.lite = true;
        let err = run_repeated_game(&game, &[bad, uniform_agent(0.01)], &settings(3, 0), &[]);
        assert!(matches!(err, Err(GameError::Config(_))));
        // Negative noise.
        let err = run_repeated_game(
            &game,
            &[uniform_agent(-0.1), uniform_agent(0.01)],
            &settings(3, 0),
            &[],
        );
        assert!(matches!(err, Err(GameError::Config(_))));
    }

    #[test]
    fn three_agent_level3_rejected_level2_runs() {
        let spaces = vec![
            ActionSpace::grid(1, 3).unwrap(),
            ActionSpace::grid(1, 3).unwrap(),
            ActionSpace::grid(1, 3).unwrap(),
        ];
        let game = PayoffTable::build(GameType::GeneralSum, se(0.1), spaces, 15).unwrap();
        let roster3 = vec![gpmw_agent(3, false), uniform_agent(0.01), uniform_agent(0.01)];
        assert!(matches!(
            run_repeated_game(&game, &roster3, &settings(2, 0), &[]),
            Err(GameError::Config(_))
        ));
        let roster2 = vec![gpmw_agent(2, false), gpmw_agent(1, false), uniform_agent(0.01)];
        let trace = run_repeated_game(&game, &roster2, &settings(3, 1), &[]).unwrap();
        assert_eq!(trace.horizon(), 3);
        // Level-2 chain logs the simulated level-1 action and the choice.
        let chain = trace.reasoning[0][0].as_ref().unwrap();
        assert_eq!(chain.steps.len(), 2);
        assert_eq!(chain.steps[0].level, 1);
        assert_eq!(chain.steps[0].agent, 1);
        assert_eq!(chain.steps[1].level, 2);
    }

    // ── Regret metrics ───────────────────────────────────────────────

    fn hand_table() -> PayoffTable {
        // f1 over a 2x2 grid, flat order (a0,b0),(a0,b1),(a1,b0),(a1,b1).
        PayoffTable::from_values(
            GameType::GeneralSum,
            se(0.1),
            line_spaces(2),
            vec![vec![1.0, 0.0, 0.0, 1.0], vec![0.5, 0.5, 0.5, 0.5]],
        )
        .unwrap()
    }

    fn hand_trace(actions: Vec<Vec<usize>>, game: &PayoffTable) -> GameTrace {
        let horizon = actions.len();
        let m = game.num_agents();
        let true_payoffs: Vec<Vec<f64>> = actions
            .iter()
            .map(|idx| (0..m).map(|i| game.value(i, idx)).collect())
            .collect();
        let gaps = true_payoffs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(i, &f)| game.max_value(i) - f)
                    .collect()
            })
            .collect();
        GameTrace {
            meta: TraceMeta {
                fmax: (0..m).map(|i| game.max_value(i)).collect(),
                ..TraceMeta::default()
            },
            init: vec![],
            noisy_payoffs: true_payoffs.clone(),
            true_payoffs,
            instantaneous_gaps: gaps,
            reasoning: vec![vec![None; m]; horizon],
            actions,
        }
    }

    #[test]
    fn external_regret_hand_computation() {
        let game = hand_table();
        // Agent 0 plays (0,1) then (1,0): collects 0 + 0; any fixed action
        // collects 1 over the two rounds.
        let trace = hand_trace(vec![vec![0, 1], vec![1, 0]], &game);
        let r = external_regret(&trace, &game, 0, 2).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn external_regret_zero_when_playing_hindsight_best() {
        let game = PayoffTable::from_values(
            GameType::GeneralSum,
            se(0.1),
            line_spaces(2),
            vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.5, 0.5, 0.5, 0.5]],
        )
        .unwrap();
        let trace = hand_trace(vec![vec![0, 0], vec![0, 1], vec![0, 0]], &game);
        let r = external_regret(&trace, &game, 0, 3).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn external_regret_curve_matches_prefix_recomputation() {
        let game = PayoffTable::build(GameType::GeneralSum, se(0.1), line_spaces(5), 16).unwrap();
        let agents = vec![uniform_agent(0.01), uniform_agent(0.01)];
        let trace = run_repeated_game(&game, &agents, &settings(20, 17), &[]).unwrap();
        let curve = external_regret_curve(&trace, &game, 0).unwrap();
        for up_to in [1usize, 7, 20] {
            let direct = external_regret(&trace, &game, 0, up_to).unwrap();
            assert!((curve[up_to - 1] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_regret_examples_and_domination() {
        let game = hand_table();
        // Single iteration at a known cell: gap is max - value.
        let trace = hand_trace(vec![vec![0, 1]], &game);
        let mr = mean_regret(&trace, &game, 0, 1).unwrap();
        assert_eq!(mr, 1.0 - 0.0);
        // Sitting at the global maximizer gives zero mean regret.
        let trace_opt = hand_trace(vec![vec![0, 0], vec![0, 0]], &game);
        assert_eq!(mean_regret(&trace_opt, &game, 0, 2).unwrap(), 0.0);
    }

    #[test]
    fn mean_regret_dominates_external_regret_per_prefix() {
        let game = PayoffTable::build(GameType::ConstantSum, se(0.1), line_spaces(6), 18).unwrap();
        let agents = vec![gpmw_agent(0, false), uniform_agent(0.01)];
        let trace = run_repeated_game(&game, &agents, &settings(25, 19), &[]).unwrap();
        for agent in 0..2 {
            let ext = external_regret_curve(&trace, &game, agent).unwrap();
            for up_to in 1..=25usize {
                let mr = mean_regret(&trace, &game, agent, up_to).unwrap();
                assert!(
                    mr * up_to as f64 >= ext[up_to - 1] - 1e-9,
                    "agent {agent} prefix {up_to}: {mr} * T < {}",
                    ext[up_to - 1]
                );
            }
        }
    }

    #[test]
    fn mean_regret_curve_from_trace_matches_table_route() {
        let game = PayoffTable::build(GameType::CommonPayoff, se(0.1), line_spaces(5), 20).unwrap();
        let agents = vec![uniform_agent(0.01), uniform_agent(0.01)];
        let trace = run_repeated_game(&game, &agents, &settings(15, 21), &[]).unwrap();
        let from_trace = mean_regret_curve_from_trace(&trace, 0);
        for up_to in 1..=15usize {
            let direct = mean_regret(&trace, &game, 0, up_to).unwrap();
            assert!((from_trace[up_to - 1] - direct).abs() < 1e-12);
        }
    }
}
