//! Cross-module invariants: randomized property tests plus the empirical
//! no-regret properties that back the level-0 and level-k guarantees at
//! desk scale.

use proptest::prelude::*;
use rayon::prelude::*;

use r2b2::acquisition::BetaSchedule;
use r2b2::experiment::{run_replication, ExperimentConfig};
use r2b2::game::mean_regret_curve_from_trace;
use r2b2::kernel::{KernelFamily, KernelSpec, MaternNu};
use r2b2::level0::{GpMwParams, GpMwState, MixedStrategy};
use r2b2::space::ActionSpace;

// ---------------------------------------------------------------------------
// Randomized invariants
// ---------------------------------------------------------------------------

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    (0..3, 0.05f64..0.5, 0.5f64..2.0).prop_map(|(fam, l, sv)| {
        let family = match fam {
            0 => KernelFamily::SquaredExponential,
            1 => KernelFamily::Matern { nu: MaternNu::ThreeHalves },
            _ => KernelFamily::Matern { nu: MaternNu::FiveHalves },
        };
        KernelSpec::new(family, l, sv).unwrap()
    })
}

proptest! {
    #[test]
    fn kernel_is_symmetric_bounded_and_unit_at_identity(
        spec in kernel_strategy(),
        z in prop::collection::vec(0.0f64..1.0, 1..4),
        w in prop::collection::vec(0.0f64..1.0, 1..4),
    ) {
        prop_assume!(z.len() == w.len());
        let kzw = spec.eval(&z, &w).unwrap();
        let kwz = spec.eval(&w, &z).unwrap();
        prop_assert_eq!(kzw, kwz);
        prop_assert!(kzw <= spec.signal_variance + 1e-15);
        prop_assert!(kzw >= 0.0);
        prop_assert!((spec.eval(&z, &z).unwrap() - spec.signal_variance).abs() < 1e-15);
    }

    #[test]
    fn mixed_strategies_stay_normalized_and_bounded(
        raw in prop::collection::vec(1e-6f64..1.0, 2..40),
    ) {
        let sum: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / sum).collect();
        let space = ActionSpace::grid(1, probs.len()).unwrap();
        let strategy = MixedStrategy::new(&space, probs).unwrap();
        let total: f64 = strategy.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let trace = strategy.covariance_trace(&space);
        prop_assert!(trace >= 0.0);
        prop_assert!(trace <= 0.25 + 1e-12); // 1-D coordinates in [0, 1]
    }

    #[test]
    fn beta_schedule_is_positive_and_strictly_increasing(
        domain in 1usize..5000,
        delta in 0.001f64..0.999,
    ) {
        let schedule = BetaSchedule::new(domain, delta).unwrap();
        let mut prev = 0.0;
        for t in 1..=50 {
            let b = schedule.beta(t).unwrap();
            prop_assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn gpmw_updates_preserve_distribution_validity(
        losses in prop::collection::vec(0.0f64..1.0, 8),
        eta in 0.0f64..4.0,
        rounds in 1usize..50,
    ) {
        let space = ActionSpace::grid(1, 8).unwrap();
        let mut state = GpMwState::new(8, GpMwParams::default(), None).unwrap();
        for _ in 0..rounds {
            state.apply_losses(&losses, eta);
        }
        let dist = state.distribution(&space).unwrap();
        let sum: f64 = dist.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(dist.probs().iter().all(|p| p.is_finite() && *p > 0.0));
    }
}

// ---------------------------------------------------------------------------
// Empirical no-regret properties
// ---------------------------------------------------------------------------

fn desk_cfg(game_type: &str, level_a: u32, level_b: u32, seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
schema_version = 1
master_seed = {seed}
horizon = 150
delta = 0.1
beta_scale = 0.5
num_function_samples = 10
num_inits = 1
metric = "external-regret"
output_dir = "unused"

[game]
type = "{game_type}"

[game.kernel]
family = "squared-exponential"
length_scale = 0.1
signal_variance = 0.04

[[agents]]
grid_points_per_axis = 20
level = {level_a}
level0 = {{ kind = "gp-mw" }}

[[agents]]
grid_points_per_axis = 20
level = {level_b}
level0 = {{ kind = "gp-mw" }}
"#
    ))
    .unwrap()
}

fn ls_slope(ys: &[f64], first_t: usize) -> f64 {
    let xs: Vec<f64> = (0..ys.len()).map(|i| (first_t + i) as f64).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// GP-MW at level 0 on both sides is a no-regret learner: the external
/// regret rate R/T' declines through the back half of the horizon,
/// averaged over ten payoff draws.
#[test]
fn gpmw_level0_regret_rate_trends_down() {
    let cfg = desk_cfg("common-payoff", 0, 0, 31);
    let spaces: Vec<ActionSpace> = cfg.agents.iter().map(|a| a.space().unwrap()).collect();
    let curves: Vec<Vec<f64>> = (0..10usize)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&draw| run_replication(&cfg, &spaces, draw, 0).unwrap().1)
        .collect();
    let avg_rate: Vec<f64> = (50..=150)
        .map(|t| curves.iter().map(|c| c[t - 1] / t as f64).sum::<f64>() / curves.len() as f64)
        .collect();
    let slope = ls_slope(&avg_rate, 50);
    assert!(
        slope < 0.0,
        "averaged R/T' slope {slope:e} is not negative (rate {:.4} -> {:.4})",
        avg_rate[0],
        avg_rate.last().unwrap()
    );
}

/// Reasoning one level above the opponent is never worse than dropping to
/// level 0 against that same opponent: a level-2 agent facing a level-1
/// opponent in constant-sum games attains a lower mean regret on average
/// than a level-0 agent facing the identical opponent.
#[test]
fn level2_against_level1_beats_level0_baseline() {
    let spaces: Vec<ActionSpace> = desk_cfg("constant-sum", 0, 1, 0)
        .agents
        .iter()
        .map(|a| a.space().unwrap())
        .collect();
    let finals = |own_level: u32| -> Vec<f64> {
        let cfg = desk_cfg("constant-sum", own_level, 1, 47);
        (0..10usize)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&draw| {
                let (trace, _) = run_replication(&cfg, &spaces, draw, 0).unwrap();
                *mean_regret_curve_from_trace(&trace, 0).last().unwrap()
            })
            .collect()
    };
    let level2 = finals(2);
    let level0 = finals(0);
    let m2 = level2.iter().sum::<f64>() / level2.len() as f64;
    let m0 = level0.iter().sum::<f64>() / level0.len() as f64;
    assert!(
        m2 <= m0,
        "level-2 mean regret {m2:.4} worse than level-0 baseline {m0:.4} against the same level-1 opponent"
    );
}
