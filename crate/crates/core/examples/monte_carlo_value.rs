//! Simulates both benchmark games under their equilibrium strategies and
//! compares the Monte-Carlo costs with the quadratic values `½ x0ᵀ P(t0) x0`.
//!
//! ```text
//! cargo run --release --example monte_carlo_value -- [n_paths] [n_steps]
//! ```

use std::time::Instant;

use lq_stackelberg::benchmarks;
use lq_stackelberg::equilibrium::build_strategies;
use lq_stackelberg::riccati::{solve_backward, CaseTag, Method};
use lq_stackelberg::sim::{estimate_value_gap, SimConfig};
use nalgebra::DVector;

fn main() -> lq_stackelberg::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n_paths = args.next().unwrap_or(100_000);
    let n_steps = args.next().unwrap_or(1_000);

    for (name, game, tag) in [
        ("coupled scalar game", benchmarks::reference_game(), CaseTag::Case1General),
        ("tanh game", benchmarks::case2_tanh(), CaseTag::Case2),
    ] {
        let started = Instant::now();
        let traj = solve_backward(&game, tag, 10_000, Method::Rk4)?;
        let (leader, follower) = build_strategies(&traj, &game, tag)?;
        let cfg = SimConfig::new(DVector::from_element(1, 1.0), 0.0, n_paths, n_steps, 42);
        let gaps = estimate_value_gap(&game, &traj, &leader, &follower, &cfg)?;
        println!("{name} ({tag}), {n_paths} paths x {n_steps} steps, {:.2?}", started.elapsed());
        for g in gaps {
            println!(
                "  {:8}  MC {:.6}  value {:.6}  gap {:+.6}  stderr {:.6}  gap/stderr {:+.2}",
                g.player.name(),
                g.monte_carlo,
                g.value,
                g.gap,
                g.stderr,
                if g.stderr > 0.0 { g.gap / g.stderr } else { 0.0 }
            );
        }
    }
    Ok(())
}
