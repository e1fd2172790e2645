// Compile check for the README's library sketch (kept as a real test).

use r2b2::game::{run_repeated_game, AgentSpec, ExpectationChoice, RunSettings};
use r2b2::level0::GpMwParams;
use r2b2::Level0Config;
use r2b2::{ActionSpace, GameType, KernelSpec, PayoffTable};

#[test]
fn readme_sketch_runs() {
    let kernel = KernelSpec::new(r2b2::KernelFamily::SquaredExponential, 0.1, 0.04).unwrap();
    let spaces = vec![
        ActionSpace::grid(1, 20).unwrap(),
        ActionSpace::grid(1, 20).unwrap(),
    ];
    let game = PayoffTable::build(GameType::ConstantSum, kernel, spaces, 7).unwrap();
    let agents = vec![
        AgentSpec {
            level: 1,
            lite: false,
            level0: Level0Config::GpMw(GpMwParams::default()),
            believed_opponent_level0: None,
            noise_variance: 0.01,
            mc_samples: None,
            expectation: ExpectationChoice::Exact,
        },
        AgentSpec {
            level: 0,
            lite: false,
            level0: Level0Config::GpMw(GpMwParams::default()),
            believed_opponent_level0: None,
            noise_variance: 0.01,
            mc_samples: None,
            expectation: ExpectationChoice::Exact,
        },
    ];
    let settings = RunSettings {
        horizon: 150,
        master_seed: 1,
        delta: 0.1,
        tight_beta: false,
        beta_scale: 0.5,
    };
    let trace = run_repeated_game(&game, &agents, &settings, &[]).unwrap();
    let regret = r2b2::game::mean_regret(&trace, &game, 0, 150).unwrap();
    assert!(regret.is_finite() && regret >= 0.0);
    println!("final mean regret: {regret:.4}");
}
