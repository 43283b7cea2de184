//! The scalar coupled game (`A = 1, B1 = 1, B2 = 0.001, C = 1`) solved by
//! both integrators, with the kernels printed against reversed time.
//!
//! ```text
//! cargo run --release --example reference_example
//! ```

use lq_stackelberg::benchmarks;
use lq_stackelberg::model::Player;
use lq_stackelberg::riccati::{check_solvability, rhs, solve_backward, CaseTag, Method};

fn main() -> lq_stackelberg::Result<()> {
    let game = benchmarks::reference_game();
    let tag = CaseTag::Case1General;

    let snap = game.snapshot(1.0)?;
    let at_end = rhs(&snap, tag, &game.leader_cost().l, &game.follower_cost().l)?;
    println!("rates at T: dP1/ds = {:.12}, dP2/ds = {:.12}", at_end.dp1[(0, 0)], at_end.dp2[(0, 0)]);

    let rk4 = solve_backward(&game, tag, 10_000, Method::Rk4)?;
    let euler = solve_backward(&game, tag, 1_000_000, Method::Euler)?;

    println!("{:>6} {:>14} {:>14} {:>12}", "r", "P1", "P2", "euler diff");
    for i in 0..=10 {
        let s = 1.0 - i as f64 / 10.0;
        let p1 = rk4.kernel_at(Player::Leader, s)?[(0, 0)];
        let p2 = rk4.kernel_at(Player::Follower, s)?[(0, 0)];
        let diff = (p1 - euler.kernel_at(Player::Leader, s)?[(0, 0)])
            .abs()
            .max((p2 - euler.kernel_at(Player::Follower, s)?[(0, 0)]).abs());
        println!("{:>6.2} {p1:>14.9} {p2:>14.9} {diff:>12.2e}", 1.0 - s);
    }

    let report = check_solvability(&rk4, &game, tag);
    let lowest = |f: fn(&lq_stackelberg::riccati::Margins) -> f64| report.margins.iter().map(f).fold(f64::INFINITY, f64::min);
    println!(
        "margins over the grid: follower {:.6}, leader {:.6}, all positive: {}",
        lowest(|m| m.follower),
        lowest(|m| m.leader),
        report.all_ok
    );
    Ok(())
}
