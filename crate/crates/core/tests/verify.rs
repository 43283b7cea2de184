mod common;

use common::{m, v};
use lq_stackelberg::benchmarks;
use lq_stackelberg::equilibrium::{build_strategies, FeedbackStrategy};
use lq_stackelberg::model::{GameSpec, Player};
use lq_stackelberg::riccati::{solve_backward, CaseTag, Method, RiccatiTrajectory};
use lq_stackelberg::sim::SimConfig;
use lq_stackelberg::verify::{
    curvature_check, inequality_holds, perturb, stackelberg_inequality_test, CurvatureFit, PerturbationFamily,
    PerturbationKind, VerificationReport, REPORT_HEADER,
};
use lq_stackelberg::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn solved(game: &GameSpec, tag: CaseTag) -> RiccatiTrajectory {
    solve_backward(game, tag, 2000, Method::Rk4).unwrap()
}

fn run(game: &GameSpec, tag: CaseTag, target: Player, kind: PerturbationKind, eps: &[f64], cfg: &SimConfig) -> VerificationReport {
    let family = PerturbationFamily::standard(game.dims, target, kind).with_magnitudes(eps.to_vec());
    stackelberg_inequality_test(game, &solved(game, tag), &family, cfg).unwrap()
}

#[test]
fn perturbation_examples() {
    let leader = FeedbackStrategy::leader(vec![0.0, 1.0], vec![m(-1.0), m(-1.0)]).unwrap();
    let family = PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![0.5], m(1.0)).unwrap();
    assert_eq!(perturb(&leader, &family, 0.5).unwrap().state_gain, vec![m(-0.5), m(-0.5)]);
    assert_eq!(perturb(&leader, &family, 0.0).unwrap(), leader);

    let wrong = PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![0.5], DMatrix::from_element(1, 2, 1.0)).unwrap();
    assert!(matches!(perturb(&leader, &wrong, 0.1), Err(Error::DimensionMismatch { .. })));
    let follower_family = PerturbationFamily::standard(benchmarks::zero_game().dims, Player::Follower, PerturbationKind::GainOffset);
    assert!(perturb(&leader, &follower_family, 0.1).is_err());

    let game = benchmarks::case2_tanh();
    let (_, follower) = build_strategies(&solved(&game, CaseTag::Case2), &game, CaseTag::Case2).unwrap();
    let shifted = PerturbationFamily::standard(game.dims, Player::Follower, PerturbationKind::ConstantOffset);
    let p = perturb(&follower, &shifted, 0.2).unwrap();
    for (s, x, u) in [(0.0, 1.0, 2.0), (0.5, -3.0, 0.1), (1.0, 7.0, -4.0)] {
        assert_eq!(p.eval(s, &v(x), Some(&v(u))).unwrap()[0], 0.2);
    }
}

#[test]
fn direction_is_normalized() {
    let family = PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![1.0], DMatrix::from_element(1, 4, 3.0)).unwrap();
    assert!((family.direction.norm() - 1.0).abs() < 1e-15);
    assert!(PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![1.0], m(0.0)).is_err());
    assert!(PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![], m(1.0)).is_err());
}

#[test]
fn pass_rule() {
    assert!(inequality_holds(0.0, 0.0, 0.02));
    assert!(inequality_holds(-0.015, 0.0, 0.02));
    assert!(!inequality_holds(-0.05, 0.0, 0.02));
    assert!(inequality_holds(-0.05, 0.011, 0.02));
    assert!(!inequality_holds(-1e-9, 0.0, 0.0));
}

/// Along the tanh equilibrium the follower plays zero, so the leader faces a
/// plain regulator problem whose optimum is unique: every gain deviation
/// costs it something.
#[test]
fn tanh_leader_gain_deviations_cost_the_leader() {
    let game = benchmarks::case2_tanh();
    let cfg = SimConfig::new(v(1.0), 0.0, 100_000, 200, 42);
    let report = run(&game, CaseTag::Case2, Player::Leader, PerturbationKind::GainOffset, &[-0.3, -0.1, 0.1, 0.3], &cfg);
    for c in &report.cells {
        assert!(c.delta_j > 0.0, "{c:?}");
        assert!(c.pass);
    }
    assert!(report.summary().starts_with(REPORT_HEADER));
}

#[test]
fn reference_follower_offsets_pass() {
    let game = benchmarks::reference_game();
    let cfg = SimConfig::new(v(1.0), 0.0, 10_000, 1000, 42);
    let report = run(&game, CaseTag::Case1General, Player::Follower, PerturbationKind::ConstantOffset, &[0.0, -0.1, 0.1], &cfg);
    assert_eq!(report.cells[0].delta_j.to_bits(), 0f64.to_bits());
    assert_eq!(report.cells[0].stderr, 0.0);
    for c in &report.cells {
        assert!(c.delta_j >= -3.0 * c.stderr - 0.02, "{c:?}");
        assert!(c.pass);
    }
}

#[test]
fn curvature_fits() {
    let eps = [0.0, -0.1, 0.1, -0.2, 0.2];
    let square: Vec<f64> = eps.iter().map(|e| e * e).collect();
    let fit = CurvatureFit::fit(&eps, &square).unwrap();
    assert!((fit.curvature - 1.0).abs() < 1e-14 && fit.residual < 1e-16);
    assert_eq!(CurvatureFit::fit(&eps, &[0.0; 5]).unwrap(), CurvatureFit { curvature: 0.0, residual: 0.0 });
    assert!(matches!(CurvatureFit::fit(&eps[..4], &square[..4]), Err(Error::InsufficientData(_))));
    assert!(CurvatureFit::fit(&[-0.1, 0.1, -0.2, 0.2, 0.3], &[0.0; 5]).is_err());
    assert!(CurvatureFit::fit(&[0.0, -0.1, 0.1, -0.2, 0.3], &[0.0; 5]).is_err());
}

/// With `u = K x + ε` the deviation from the leader's optimal feedback law is
/// the constant `ε` along the whole perturbed path and the follower stays at
/// zero, so completing the square gives `ΔJ1 = ½ ε² ∫ R11 ds = ε²/2`.
#[test]
fn tanh_leader_offset_curvature() {
    let game = benchmarks::case2_tanh();
    let cfg = SimConfig::new(v(1.0), 0.0, 64, 1000, 42);
    let eps = lq_stackelberg::verify::DEFAULT_MAGNITUDES;
    let report = run(&game, CaseTag::Case2, Player::Leader, PerturbationKind::ConstantOffset, &eps, &cfg);
    let fit = curvature_check(&report).unwrap();
    let max_dj = report.cells.iter().map(|c| c.delta_j.abs()).fold(0.0, f64::max);
    assert!((fit.curvature - 0.5).abs() < 5e-3, "{fit:?}");
    assert!(fit.residual <= 0.1 * max_dj, "{fit:?} vs {max_dj}");
}

/// The cost difference is even in ε only to leading order: the Euler scheme
/// adds an O(h) odd term, and state-gain deviations add a cubic one. The
/// leader test of the tanh game is noise-free, so its standard error is
/// exactly zero and no nonzero asymmetry fits inside `6·stderr`.
#[test]
#[ignore = "unattainable with a noise-free leader test: stderr is exactly zero while the Euler and cubic odd terms are not"]
fn leader_cost_difference_is_even() {
    let game = benchmarks::case2_tanh();
    let cfg = SimConfig::new(v(1.0), 0.0, 10_000, 1000, 42);
    for kind in PerturbationKind::ALL {
        let report = run(&game, CaseTag::Case2, Player::Leader, kind, &lq_stackelberg::verify::DEFAULT_MAGNITUDES, &cfg);
        for c in &report.cells {
            let mirror = report.cells.iter().find(|d| d.eps == -c.eps).unwrap();
            assert!((c.delta_j - mirror.delta_j).abs() <= 6.0 * c.stderr.max(mirror.stderr), "{kind}: {c:?} vs {mirror:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_magnitude_is_an_exact_copy(gains in proptest::collection::vec(-5.0..5.0f64, 3), eps in -1.0..1.0f64) {
        let strategy = FeedbackStrategy::follower(
            vec![0.0, 0.5, 1.0],
            gains.iter().map(|&g| m(g)).collect(),
            gains.iter().map(|&g| m(-g)).collect(),
        ).unwrap();
        for kind in PerturbationKind::ALL {
            let family = PerturbationFamily::new(Player::Follower, kind, vec![eps], m(1.0)).unwrap();
            prop_assert_eq!(&perturb(&strategy, &family, 0.0).unwrap(), &strategy);
            let shifted = perturb(&strategy, &family, eps).unwrap();
            let back = perturb(&shifted, &family, -eps).unwrap();
            for (a, b) in back.state_gain.iter().zip(&strategy.state_gain) {
                prop_assert!((a - b).amax() <= 1e-15 * (1.0 + b.amax()));
            }
        }
    }

    #[test]
    fn pass_rule_is_monotone(dj in -1.0..1.0f64, se in 0.0..0.1f64, bump in 0.0..1.0f64) {
        if inequality_holds(dj, se, 0.02) && dj >= 0.0 {
            prop_assert!(inequality_holds(dj + bump, se, 0.02));
        }
        if dj >= 0.0 {
            prop_assert!(inequality_holds(dj, se, 0.0));
        }
        prop_assert_eq!(inequality_holds(dj, se, 0.02), dj >= -3.0 * se - 0.02 * (1.0 + dj.abs()));
    }
}
