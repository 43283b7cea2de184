mod common;

use common::v;
use lq_stackelberg::benchmarks::{self, case2_tanh_p1, case2_tanh_p2};
use lq_stackelberg::equilibrium::{build_strategies, FeedbackStrategy};
use lq_stackelberg::model::{GameSpec, Player, RawGame};
use lq_stackelberg::riccati::{solve_backward, CaseTag, Method};
use lq_stackelberg::sim::{estimate_value_gap, mean_stderr, simulate, simulate_costs, SimConfig};
use lq_stackelberg::Error;
use nalgebra::{DMatrix, DVector};

fn equilibrium(game: &GameSpec, tag: CaseTag) -> (FeedbackStrategy, FeedbackStrategy) {
    let traj = solve_backward(game, tag, 2000, Method::Rk4).unwrap();
    build_strategies(&traj, game, tag).unwrap()
}

fn zero_strategies() -> (FeedbackStrategy, FeedbackStrategy) {
    let z = || vec![DMatrix::zeros(1, 1); 2];
    (
        FeedbackStrategy::leader(vec![0.0, 1.0], z()).unwrap(),
        FeedbackStrategy::follower(vec![0.0, 1.0], z(), z()).unwrap(),
    )
}

/// The tanh game is noise-free along the equilibrium, so the simulated
/// costs carry only the time-stepping error, which halves with the step.
#[test]
fn deterministic_error_halves_with_the_step() {
    let game = benchmarks::case2_tanh();
    let (l, f) = equilibrium(&game, CaseTag::Case2);
    let exact = [0.5 * case2_tanh_p1(0.0), 0.5 * case2_tanh_p2(0.0)];
    let errors: Vec<[f64; 2]> = [100, 200, 400]
        .iter()
        .map(|&n| {
            let r = simulate(&game, &l, &f, &SimConfig::new(v(1.0), 0.0, 4, n, 9)).unwrap();
            assert_eq!(r.j1_stderr, 0.0);
            [r.j1_mean - exact[0], r.j2_mean - exact[1]]
        })
        .collect();
    for i in 0..2 {
        for w in errors.windows(2) {
            let ratio = w[0][i] / w[1][i];
            assert!((1.6..=2.4).contains(&ratio), "player {i}: {errors:?}");
        }
    }
}

/// Geometric Brownian motion with quadratic running cost: the expected
/// Euler cost is a geometric sum of the per-step second-moment factor.
#[test]
fn monte_carlo_matches_euler_expectation() {
    let (a, c, steps) = (0.5, 0.8, 20);
    let game = RawGame::new(1, 1, 1, 0.0, 1.0)
        .dynamics("A", a)
        .dynamics("C", c)
        .cost1("Q", 1.0)
        .cost2("L", 1.0)
        .validate()
        .unwrap();
    let (l, f) = zero_strategies();
    let r = simulate(&game, &l, &f, &SimConfig::new(v(1.0), 0.0, 200_000, steps, 11)).unwrap();
    let h = 1.0 / steps as f64;
    let growth = (1.0 + a * h).powi(2) + c * c * h;
    let running: f64 = (0..steps).map(|k| growth.powi(k as i32)).sum::<f64>() * 0.5 * h;
    let terminal = 0.5 * growth.powi(steps as i32);
    assert!((r.j1_mean - running).abs() < 4.0 * r.j1_stderr, "{} vs {running} ± {}", r.j1_mean, r.j1_stderr);
    assert!((r.j2_mean - terminal).abs() < 4.0 * r.j2_stderr, "{} vs {terminal} ± {}", r.j2_mean, r.j2_stderr);
    let paths = simulate_costs(&game, &l, &f, &SimConfig::new(v(1.0), 0.0, 200_000, steps, 11)).unwrap();
    let (mean, se) = mean_stderr(&paths.terminal);
    assert_eq!(mean, r.terminal_state_mean[0]);
    assert!((mean - (1.0 + a * h).powi(steps as i32)).abs() < 4.0 * se);
}

#[test]
fn costs_scale_quadratically_with_the_initial_state() {
    let game = benchmarks::reference_game();
    let (l, f) = equilibrium(&game, CaseTag::Case1General);
    let one = simulate_costs(&game, &l, &f, &SimConfig::new(v(1.0), 0.0, 300, 100, 5)).unwrap();
    let two = simulate_costs(&game, &l, &f, &SimConfig::new(v(2.0), 0.0, 300, 100, 5)).unwrap();
    for p in 0..300 {
        assert!((two.j1[p] - 4.0 * one.j1[p]).abs() <= 1e-12 * two.j1[p].abs());
        assert!((two.j2[p] - 4.0 * one.j2[p]).abs() <= 1e-12 * two.j2[p].abs());
        assert!((two.terminal[p] - 2.0 * one.terminal[p]).abs() <= 1e-12 * two.terminal[p].abs());
    }
}

#[test]
fn stderr_halves_with_four_times_the_paths() {
    let game = benchmarks::reference_game();
    let (l, f) = equilibrium(&game, CaseTag::Case1General);
    let small = simulate(&game, &l, &f, &SimConfig::new(v(1.0), 0.0, 20_000, 100, 21)).unwrap();
    let large = simulate(&game, &l, &f, &SimConfig::new(v(1.0), 0.0, 80_000, 100, 21)).unwrap();
    for player in Player::BOTH {
        let ratio = large.stderr(player) / small.stderr(player);
        assert!((0.35..=0.65).contains(&ratio), "{player:?}: {ratio}");
    }
}

#[test]
fn thread_count_does_not_change_bits() {
    let game = benchmarks::reference_game();
    let (l, f) = equilibrium(&game, CaseTag::Case1General);
    let cfg = SimConfig::new(v(1.0), 0.0, 3000, 50, 77);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| simulate(&game, &l, &f, &cfg).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.j1_mean.to_bits(), four.j1_mean.to_bits());
    assert_eq!(one.j2_mean.to_bits(), four.j2_mean.to_bits());
    assert_eq!(one.j1_stderr.to_bits(), four.j1_stderr.to_bits());
    assert_eq!(one.terminal_state_mean, four.terminal_state_mean);
}

#[test]
fn value_gaps() {
    let game = benchmarks::case2_tanh();
    let traj = solve_backward(&game, CaseTag::Case2, 2000, Method::Rk4).unwrap();
    let (l, f) = build_strategies(&traj, &game, CaseTag::Case2).unwrap();
    let gaps = estimate_value_gap(&game, &traj, &l, &f, &SimConfig::new(v(1.0), 0.0, 16, 1000, 1)).unwrap();
    for g in gaps {
        assert!(g.gap.abs() < 1e-3, "{g:?}");
        assert_eq!(g.gap, g.monte_carlo - g.value);
    }
    assert!((gaps[0].value - 0.5 * 1f64.tanh()).abs() < 1e-10);

    let game = benchmarks::reference_game();
    let traj = solve_backward(&game, CaseTag::Case1General, 2000, Method::Rk4).unwrap();
    let (l, f) = build_strategies(&traj, &game, CaseTag::Case1General).unwrap();
    let gaps = estimate_value_gap(&game, &traj, &l, &f, &SimConfig::new(v(1.0), 0.0, 20_000, 400, 3)).unwrap();
    for g in gaps {
        assert!(g.gap.abs() <= 4.0 * g.stderr + 0.02 * g.value.abs(), "{g:?}");
    }
}

#[test]
fn runaway_paths_are_reported() {
    let game = RawGame::new(1, 1, 1, 0.0, 1.0).dynamics("A", 100.0).validate().unwrap();
    let (l, f) = zero_strategies();
    let err = simulate(&game, &l, &f, &SimConfig::new(v(1.0), 0.0, 2, 100, 0)).unwrap_err();
    assert!(matches!(err, Error::BlowUp { .. }));
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn late_start_and_bad_configs() {
    let game = RawGame::new(1, 1, 1, 0.0, 1.0).cost1("Q", 1.0).validate().unwrap();
    let (l, f) = zero_strategies();
    let r = simulate(&game, &l, &f, &SimConfig::new(v(2.0), 0.75, 1, 1000, 0)).unwrap();
    assert!((r.j1_mean - 0.5 * 4.0 * 0.25).abs() < 1e-12);
    assert!(simulate(&game, &l, &f, &SimConfig::new(v(1.0), 0.0, 1, 0, 0)).is_err());
    assert!(simulate(&game, &l, &f, &SimConfig::new(v(f64::NAN), 0.0, 1, 10, 0)).is_err());
    assert!(simulate(&game, &f, &l, &SimConfig::new(v(1.0), 0.0, 1, 10, 0)).is_err());
    assert!(simulate(&game, &l, &f, &SimConfig::new(DVector::zeros(3), 0.0, 1, 10, 0)).is_err());
}
