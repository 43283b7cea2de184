//! Leader-only-drift game with `P1(s) = tanh(1 - s)`: compares the computed
//! kernels and gains with their closed forms, and shows the error order of
//! both integrators.

use lq_stackelberg::benchmarks::{case2_tanh, case2_tanh_p1, case2_tanh_p2};
use lq_stackelberg::equilibrium::build_strategies;
use lq_stackelberg::model::Player;
use lq_stackelberg::riccati::{solve_backward, CaseTag, Method};
use nalgebra::DVector;

fn max_error(steps: usize, method: Method) -> lq_stackelberg::Result<f64> {
    let traj = solve_backward(&case2_tanh(), CaseTag::Case2, steps, method)?;
    Ok(traj
        .grid
        .iter()
        .zip(traj.kernels(Player::Leader))
        .map(|(&s, p)| (p[(0, 0)] - case2_tanh_p1(s)).abs())
        .fold(0.0, f64::max))
}

fn main() -> lq_stackelberg::Result<()> {
    let game = case2_tanh();
    let traj = solve_backward(&game, CaseTag::Case2, 10_000, Method::Rk4)?;
    let (leader, follower) = build_strategies(&traj, &game, CaseTag::Case2)?;

    let mut worst = [0.0f64; 3];
    for (k, &s) in traj.grid.iter().enumerate() {
        worst[0] = worst[0].max((traj.p1[k][(0, 0)] - case2_tanh_p1(s)).abs());
        worst[1] = worst[1].max((traj.p2[k][(0, 0)] - case2_tanh_p2(s)).abs());
        worst[2] = worst[2].max((leader.state_gain[k][(0, 0)] + case2_tanh_p1(s)).abs());
    }
    println!("max |P1 - tanh(1-s)|       = {:.3e}", worst[0]);
    println!("max |P2 - closed form|     = {:.3e}", worst[1]);
    println!("max |K_u + tanh(1-s)|      = {:.3e}", worst[2]);

    let x = DVector::from_element(1, 2.0);
    let u = DVector::from_element(1, -0.3);
    println!("follower at (0.5, 2, -0.3): {}", follower.eval(0.5, &x, Some(&u))?[0]);

    for method in [Method::Rk4, Method::Euler] {
        let errs: Vec<f64> = [250, 500, 1000].iter().map(|&k| max_error(k, method)).collect::<Result<_, _>>()?;
        println!(
            "{:>5}: errors {:.3e} {:.3e} {:.3e}, ratios {:.2} {:.2}",
            method.as_str(),
            errs[0],
            errs[1],
            errs[2],
            errs[0] / errs[1],
            errs[1] / errs[2]
        );
    }
    Ok(())
}
