//! Recursive action selection: level-1, level-k, the cheaper Lite variant,
//! and the generalization to more than two agents.
//!
//! A level-1 agent maximizes the expected GP-UCB value under its model of
//! the opponent's level-0 mixed strategy. A level-k agent best-responds to
//! the opponent's simulated level-(k-1) action; the simulation alternates
//! between the two agents' acquisition surfaces down to a level-1 base
//! case computed by whichever agent the parity of `k` assigns. The Lite
//! variant replaces the expectation with a single sampled opponent action.
//!
//! Ties always break toward the lowest action index.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::acquisition::{ucb_slice, AcquisitionError};
use crate::gp::GpPosterior;
use crate::level0::{MixedStrategy, StrategyError};
use crate::space::ActionSpace;

/// Monte Carlo budget for expectation approximation over opponent spaces
/// of dimension at most two.
pub const DEFAULT_MC_SAMPLES_LOW_DIM: usize = 500;
/// Monte Carlo budget for higher-dimensional opponent spaces.
pub const DEFAULT_MC_SAMPLES_HIGH_DIM: usize = 1000;

/// Ceiling on `|own space| * prod |support_j|` joint acquisition
/// evaluations in exact mode.
pub const EXACT_PRODUCT_BUDGET: usize = 1 << 22;

/// Default Monte Carlo budget for a given total opponent dimension.
pub fn default_mc_samples(opponent_dim: usize) -> usize {
    if opponent_dim <= 2 {
        DEFAULT_MC_SAMPLES_LOW_DIM
    } else {
        DEFAULT_MC_SAMPLES_HIGH_DIM
    }
}

#[derive(Debug, Error)]
pub enum ReasoningError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error("opponent strategy has empty support")]
    EmptySupport,
    #[error("level-k selection requires k >= 2, got {0}")]
    BadLevel(u32),
    #[error("monte_carlo mode requires at least one sample")]
    NoSamples,
    #[error("opponent {agent} declared level {level}, but multi-agent recursion supports opponents at levels 0 and 1 only")]
    UnsupportedLevel { agent: usize, level: u32 },
    #[error("level-1 opponent {agent} has no posterior model configured")]
    MissingOpponentModel { agent: usize },
    #[error("exact expectation needs {required} acquisition evaluations, over the budget of {budget}; use monte_carlo mode")]
    ProductBudgetExceeded { required: usize, budget: usize },
}

/// How expectations over opponent strategies are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpectationMode {
    /// Enumerate the (product) support exactly.
    Exact,
    /// Empirical mean over i.i.d. opponent draws.
    MonteCarlo { samples: usize },
}

/// One simulated step of a recursive selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Reasoning level this step was computed at (1 = base case).
    pub level: u32,
    /// Engine-level index of the agent the step simulates.
    pub agent: usize,
    /// Selected action index within that agent's space.
    pub action: usize,
}

/// The full alternating chain computed during one selection, base case
/// first, top-level action last. A level-k selection records exactly `k`
/// steps.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub steps: Vec<TraceStep>,
}

impl ReasoningTrace {
    pub fn chosen_action(&self) -> Option<usize> {
        self.steps.last().map(|s| s.action)
    }
}

/// An opponent's mixed strategy together with the space it ranges over.
#[derive(Debug, Clone, Copy)]
pub struct OpponentModel<'a> {
    pub space: &'a ActionSpace,
    pub strategy: &'a MixedStrategy,
}

/// Argmax with ties broken toward the lowest index.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

fn check_support(strategy: &MixedStrategy) -> Result<(), ReasoningError> {
    if strategy.support().next().is_none() {
        return Err(ReasoningError::EmptySupport);
    }
    Ok(())
}

/// Expected GP-UCB over one opponent's mixed strategy, per own action.
///
/// Exact mode walks the support in ascending index order; Monte Carlo mode
/// aggregates draw counts and walks distinct draws in ascending order, so
/// both paths are deterministic given the stream.
fn expected_ucb_two_player(
    gp: &GpPosterior,
    own_space: &ActionSpace,
    own_position: usize,
    opponent: OpponentModel<'_>,
    beta_t: f64,
    mode: ExpectationMode,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>, ReasoningError> {
    check_support(opponent.strategy)?;
    let mut acc = vec![0.0; own_space.size()];
    match mode {
        ExpectationMode::Exact => {
            let support: Vec<usize> = opponent.strategy.support().collect();
            let required = own_space.size() * support.len();
            if required > EXACT_PRODUCT_BUDGET {
                return Err(ReasoningError::ProductBudgetExceeded {
                    required,
                    budget: EXACT_PRODUCT_BUDGET,
                });
            }
            for b in support {
                let p = opponent.strategy.probs()[b];
                let block = opponent.space.point(b);
                let slice = ucb_slice(gp, own_space, own_position, &[block], beta_t)?;
                for (a, s) in acc.iter_mut().zip(&slice) {
                    *a += p * s;
                }
            }
        }
        ExpectationMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(ReasoningError::NoSamples);
            }
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for _ in 0..samples {
                *counts.entry(opponent.strategy.sample(rng)?).or_insert(0) += 1;
            }
            for (b, count) in counts {
                let block = opponent.space.point(b);
                let slice = ucb_slice(gp, own_space, own_position, &[block], beta_t)?;
                let w = count as f64 / samples as f64;
                for (a, s) in acc.iter_mut().zip(&slice) {
                    *a += w * s;
                }
            }
        }
    }
    Ok(acc)
}

/// Level-1 selection: the own-space argmax of the expected GP-UCB value
/// under the opponent's level-0 strategy.
#[allow(clippy::too_many_arguments)]
pub fn level1_select(
    gp: &GpPosterior,
    own_space: &ActionSpace,
    own_position: usize,
    own_agent: usize,
    opponent: OpponentModel<'_>,
    beta_t: f64,
    mode: ExpectationMode,
    rng: &mut ChaCha12Rng,
) -> Result<(usize, ReasoningTrace), ReasoningError> {
    let expected = expected_ucb_two_player(gp, own_space, own_position, opponent, beta_t, mode, rng)?;
    let action = argmax_lowest(&expected);
    Ok((
        action,
        ReasoningTrace {
            steps: vec![TraceStep {
                level: 1,
                agent: own_agent,
                action,
            }],
        },
    ))
}

/// R2-B2-Lite level-1 selection: best response to a single action sampled
/// from the opponent's level-0 strategy. Returns the chosen own action and
/// the sampled opponent action.
pub fn r2b2_lite_select(
    gp: &GpPosterior,
    own_space: &ActionSpace,
    own_position: usize,
    opponent: OpponentModel<'_>,
    beta_t: f64,
    rng: &mut ChaCha12Rng,
) -> Result<(usize, usize), ReasoningError> {
    check_support(opponent.strategy)?;
    let sampled = opponent.strategy.sample(rng)?;
    let block = opponent.space.point(sampled);
    let slice = ucb_slice(gp, own_space, own_position, &[block], beta_t)?;
    Ok((argmax_lowest(&slice), sampled))
}

/// One side of a two-agent level-k recursion.
#[derive(Debug, Clone, Copy)]
pub struct LevelKAgent<'a> {
    /// Engine-level agent index recorded in the trace.
    pub agent: usize,
    /// This agent's posterior over the joint payoff surface. Under perfect
    /// monitoring the selecting agent reconstructs its opponent's posterior
    /// from the shared history, so both sides are available to the caller.
    pub gp: &'a GpPosterior,
    pub space: &'a ActionSpace,
    /// Slot in the joint concatenation order.
    pub position: usize,
    pub beta_t: f64,
    /// This agent's model of the *other* agent's level-0 strategy.
    pub opponent_level0: &'a MixedStrategy,
}

/// Level-k (k >= 2) selection for two-agent games.
///
/// The base case is the level-1 action of whichever agent the parity of
/// `k` assigns (the selecting agent when `k` is odd, the opponent when `k`
/// is even); each higher level is a single-point best response to the
/// previous step on the responding agent's own acquisition surface. The
/// returned trace holds the full chain, base first.
pub fn levelk_select(
    me: &LevelKAgent<'_>,
    opponent: &LevelKAgent<'_>,
    k: u32,
    mode: ExpectationMode,
    rng: &mut ChaCha12Rng,
) -> Result<(usize, ReasoningTrace), ReasoningError> {
    if k < 2 {
        return Err(ReasoningError::BadLevel(k));
    }
    let mut steps = Vec::with_capacity(k as usize);
    // The agent acting at level j: me when (k - j) is even, else the opponent.
    let actor = |j: u32| -> &LevelKAgent<'_> {
        if (k - j) % 2 == 0 {
            me
        } else {
            opponent
        }
    };
    // Base case is computed by me when k is odd, by the opponent when even.
    let (base, base_other) = if k % 2 == 1 { (me, opponent) } else { (opponent, me) };
    // Simulated base case uses the same mode and budget as a top-level
    // level-1 selection, on an independent child stream.
    let mut child = ChaCha12Rng::seed_from_u64(rng.next_u64());
    let (mut prev_action, base_trace) = level1_select(
        base.gp,
        base.space,
        base.position,
        base.agent,
        OpponentModel {
            space: base_other.space,
            strategy: base.opponent_level0,
        },
        base.beta_t,
        mode,
        &mut child,
    )?;
    steps.extend(base_trace.steps);
    let mut prev_agent = base;
    for j in 2..=k {
        let responder = actor(j);
        let block = prev_agent.space.point(prev_action);
        let slice = ucb_slice(
            responder.gp,
            responder.space,
            responder.position,
            &[block],
            responder.beta_t,
        )?;
        let action = argmax_lowest(&slice);
        steps.push(TraceStep {
            level: j,
            agent: responder.agent,
            action,
        });
        prev_action = action;
        prev_agent = responder;
    }
    let chosen = steps.last().expect("nonempty chain").action;
    Ok((chosen, ReasoningTrace { steps }))
}

/// What the selecting agent assumes about one other agent when evaluating
/// a joint expectation.
#[derive(Debug, Clone, Copy)]
pub enum OtherBehavior<'a> {
    /// The agent's action is already determined (e.g. a simulated level-1
    /// action); only its coordinate block enters the joint point.
    Fixed {
        space: &'a ActionSpace,
        action: usize,
    },
    /// The agent plays its level-0 mixed strategy.
    Mixed {
        space: &'a ActionSpace,
        strategy: &'a MixedStrategy,
    },
}

/// Expected GP-UCB per own action over the product of all `Mixed` others,
/// with `Fixed` others pinned. `others` are given in agent order with the
/// selecting agent's slot removed; `own_position` says where the own block
/// sits in the joint concatenation.
///
/// Exact mode enumerates the product support row-major (later agents
/// fastest), skipping zero-probability members; Monte Carlo mode draws
/// every mixed agent independently per sample and aggregates counts in
/// combination order.
pub fn expected_ucb(
    gp: &GpPosterior,
    own_space: &ActionSpace,
    own_position: usize,
    others: &[OtherBehavior<'_>],
    beta_t: f64,
    mode: ExpectationMode,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>, ReasoningError> {
    // Mixed slots in agent order.
    let mut mixed: Vec<(usize, &ActionSpace, &MixedStrategy)> = Vec::new();
    for (slot, other) in others.iter().enumerate() {
        if let OtherBehavior::Mixed { space, strategy } = other {
            check_support(strategy)?;
            mixed.push((slot, space, strategy));
        }
    }
    // Fixed blocks fill their slots once.
    let mut blocks: Vec<&[f64]> = others
        .iter()
        .map(|o| match o {
            OtherBehavior::Fixed { space, action } => space.point(*action),
            OtherBehavior::Mixed { space, .. } => space.point(0),
        })
        .collect();

    let mut acc = vec![0.0; own_space.size()];
    match mode {
        ExpectationMode::Exact => {
            let supports: Vec<Vec<usize>> = mixed
                .iter()
                .map(|(_, _, s)| s.support().collect())
                .collect();
            let combos: usize = supports.iter().map(|s| s.len()).product();
            let required = own_space.size().saturating_mul(combos);
            if required > EXACT_PRODUCT_BUDGET {
                return Err(ReasoningError::ProductBudgetExceeded {
                    required,
                    budget: EXACT_PRODUCT_BUDGET,
                });
            }
            let mut cursor = vec![0usize; mixed.len()];
            loop {
                let mut p = 1.0;
                for (m, ((slot, space, strategy), &c)) in mixed.iter().zip(&cursor).enumerate() {
                    let b = supports[m][c];
                    p *= strategy.probs()[b];
                    blocks[*slot] = space.point(b);
                }
                let slice = ucb_slice(gp, own_space, own_position, &blocks, beta_t)?;
                for (a, s) in acc.iter_mut().zip(&slice) {
                    *a += p * s;
                }
                // Odometer increment, last mixed agent fastest.
                let mut dim = mixed.len();
                loop {
                    if dim == 0 {
                        return Ok(acc);
                    }
                    dim -= 1;
                    cursor[dim] += 1;
                    if cursor[dim] < supports[dim].len() {
                        break;
                    }
                    cursor[dim] = 0;
                }
            }
        }
        ExpectationMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(ReasoningError::NoSamples);
            }
            let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for _ in 0..samples {
                let combo: Result<Vec<usize>, StrategyError> = mixed
                    .iter()
                    .map(|(_, _, strategy)| strategy.sample(rng))
                    .collect();
                *counts.entry(combo?).or_insert(0) += 1;
            }
            for (combo, count) in counts {
                for ((slot, space, _), &b) in mixed.iter().zip(&combo) {
                    blocks[*slot] = space.point(b);
                }
                let slice = ucb_slice(gp, own_space, own_position, &blocks, beta_t)?;
                let w = count as f64 / samples as f64;
                for (a, s) in acc.iter_mut().zip(&slice) {
                    *a += w * s;
                }
            }
            Ok(acc)
        }
    }
}

/// Multi-agent level-1 selection: argmax of the expected GP-UCB over the
/// product of all other agents' level-0 strategies.
pub fn multiagent_level1_select(
    gp: &GpPosterior,
    own_space: &ActionSpace,
    own_position: usize,
    opponents: &[OpponentModel<'_>],
    beta_t: f64,
    mode: ExpectationMode,
    rng: &mut ChaCha12Rng,
) -> Result<usize, ReasoningError> {
    let others: Vec<OtherBehavior<'_>> = opponents
        .iter()
        .map(|o| OtherBehavior::Mixed {
            space: o.space,
            strategy: o.strategy,
        })
        .collect();
    let expected = expected_ucb(gp, own_space, own_position, &others, beta_t, mode, rng)?;
    Ok(argmax_lowest(&expected))
}

/// The selecting agent's view of itself in a multi-agent level-2 selection.
#[derive(Debug, Clone, Copy)]
pub struct SelfView<'a> {
    pub gp: &'a GpPosterior,
    pub space: &'a ActionSpace,
    pub beta_t: f64,
    /// The selecting agent's own level-0 strategy, which level-1 others
    /// are assumed to best-respond against.
    pub level0: &'a MixedStrategy,
}

/// The selecting agent's view of one other agent.
#[derive(Debug, Clone, Copy)]
pub struct OtherView<'a> {
    /// Engine-level index, for error reporting.
    pub agent: usize,
    pub space: &'a ActionSpace,
    /// Declared reasoning level: 0 or 1.
    pub level: u32,
    /// The agent's level-0 strategy (its play distribution at level 0, or
    /// the base strategy it is assumed to reason from at level 1).
    pub level0: &'a MixedStrategy,
    /// Posterior of the other agent, required when `level == 1`.
    pub gp: Option<&'a GpPosterior>,
    pub beta_t: f64,
}

/// Multi-agent level-2 selection: every level-1 opponent's action is first
/// simulated with [`multiagent_level1_select`] from that opponent's
/// perspective (it treats everyone else, including the selecting agent, as
/// level 0); the selecting agent then maximizes the expectation over the
/// remaining level-0 opponents with the simulated actions pinned.
///
/// Returns the chosen action and the simulated level-1 action per other
/// agent (`None` for level-0 others).
pub fn multiagent_level2_select(
    own: &SelfView<'_>,
    own_position: usize,
    others: &[OtherView<'_>],
    mode: ExpectationMode,
    rng: &mut ChaCha12Rng,
) -> Result<(usize, Vec<Option<usize>>), ReasoningError> {
    for other in others {
        if other.level > 1 {
            return Err(ReasoningError::UnsupportedLevel {
                agent: other.agent,
                level: other.level,
            });
        }
    }
    // Simulate each level-1 opponent in agent order.
    let mut simulated: Vec<Option<usize>> = vec![None; others.len()];
    for (j, other) in others.iter().enumerate() {
        if other.level != 1 {
            continue;
        }
        let gp_j = other.gp.ok_or(ReasoningError::MissingOpponentModel { agent: other.agent })?;
        // Opponent j's view: everyone else (including the selecting agent)
        // plays its level-0 strategy.
        let mut opponents_of_j: Vec<OpponentModel<'_>> = Vec::with_capacity(others.len());
        for (slot, oo) in others.iter().enumerate() {
            if slot == j {
                continue;
            }
            opponents_of_j.push(OpponentModel {
                space: oo.space,
                strategy: oo.level0,
            });
        }
        // The selecting agent occupies `own_position` in the global agent
        // order; from j's perspective it is one more level-0 opponent.
        // j's global slot is j or j+1 depending on which side of the
        // selecting agent it sits.
        let j_position = if j < own_position { j } else { j + 1 };
        let own_slot_in_j_list = if j_position < own_position {
            own_position - 1
        } else {
            own_position
        };
        opponents_of_j.insert(
            own_slot_in_j_list,
            OpponentModel {
                space: own.space,
                strategy: own.level0,
            },
        );
        let mut child = ChaCha12Rng::seed_from_u64(rng.next_u64());
        simulated[j] = Some(multiagent_level1_select(
            gp_j,
            other.space,
            j_position,
            &opponents_of_j,
            other.beta_t,
            mode,
            &mut child,
        )?);
    }
    // Outer expectation: level-0 others stay mixed, level-1 others pinned.
    let outer: Vec<OtherBehavior<'_>> = others
        .iter()
        .zip(&simulated)
        .map(|(other, sim)| match sim {
            Some(action) => OtherBehavior::Fixed {
                space: other.space,
                action: *action,
            },
            None => OtherBehavior::Mixed {
                space: other.space,
                strategy: other.level0,
            },
        })
        .collect();
    let expected = expected_ucb(own.gp, own.space, own_position, &outer, own.beta_t, mode, rng)?;
    Ok((argmax_lowest(&expected), simulated))
}
