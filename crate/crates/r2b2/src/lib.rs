//! Recursive-reasoning Bayesian optimization for repeated games.
//!
//! Agents with unknown, expensive payoff functions play a repeated game
//! with simultaneous moves and perfect monitoring. Each agent keeps a GP
//! posterior over its payoff surface and selects actions through GP-UCB:
//! level-0 agents play a mixed strategy (random search, EXP3 over random
//! features, or GP-MW); a level-1 agent best-responds to its model of the
//! opponent's level-0 strategy in expectation; a level-k agent
//! best-responds to the opponent's simulated level-(k-1) action. The
//! cheaper Lite variant best-responds to a single sampled opponent action.
//!
//! The crate is organized bottom-up:
//!
//! - [`space`], [`kernel`], [`gp`]: discrete domains, covariance kernels,
//!   exact GP inference and prior sampling;
//! - [`acquisition`]: the confidence schedule and GP-UCB values/slices;
//! - [`level0`]: mixed strategies and the three built-in level-0 learners;
//! - [`reasoning`]: level-1 / level-k / Lite selection and the
//!   more-than-two-agent generalization;
//! - [`game`]: synthetic payoff tables, the repeated-game loop, and
//!   regret metrics;
//! - [`trace`]: the line-delimited replayable trace format;
//! - [`experiment`]: declarative configs, seeded parallel replication,
//!   aggregation, and CSV/JSON emission.

pub mod acquisition;
pub mod experiment;
pub mod game;
pub mod gp;
pub mod kernel;
pub mod level0;
pub mod reasoning;
pub mod rng;
pub mod space;
pub mod trace;

pub use acquisition::{ucb, ucb_slice, BetaSchedule};
pub use game::{AgentSpec, GameTrace, GameType, PayoffTable, RunSettings};
pub use gp::{sample_prior, GpPosterior};
pub use kernel::{KernelFamily, KernelSpec, MaternNu};
pub use level0::{Level0Config, MixedStrategy};
pub use reasoning::{
    level1_select, levelk_select, multiagent_level1_select, multiagent_level2_select,
    r2b2_lite_select, ExpectationMode, ReasoningTrace,
};
pub use space::{ActionSpace, JointSpace};
