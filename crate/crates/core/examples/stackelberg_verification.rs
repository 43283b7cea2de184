//! Perturbs each player's equilibrium strategy and checks that the
//! perturbed player's own cost does not drop, using common random numbers.
//!
//! ```text
//! cargo run --release --example stackelberg_verification -- [n_paths]
//! ```

use std::time::Instant;

use lq_stackelberg::benchmarks;
use lq_stackelberg::model::Player;
use lq_stackelberg::riccati::{solve_backward, CaseTag, Method};
use lq_stackelberg::sim::SimConfig;
use lq_stackelberg::verify::{curvature_check, stackelberg_inequality_test, PerturbationFamily, PerturbationKind};
use nalgebra::DVector;

fn main() -> lq_stackelberg::Result<()> {
    let n_paths = std::env::args().nth(1).map_or(10_000, |a| a.parse().expect("integer path count"));
    for (name, game, tag) in [
        ("coupled scalar game", benchmarks::reference_game(), CaseTag::Case1General),
        ("tanh game", benchmarks::case2_tanh(), CaseTag::Case2),
    ] {
        let traj = solve_backward(&game, tag, 10_000, Method::Rk4)?;
        for x0 in [1.0, -1.0] {
            let cfg = SimConfig::new(DVector::from_element(1, x0), 0.0, n_paths, 1_000, 42);
            for target in Player::BOTH {
                for kind in PerturbationKind::ALL {
                    let started = Instant::now();
                    let family = PerturbationFamily::standard(game.dims, target, kind);
                    let report = stackelberg_inequality_test(&game, &traj, &family, &cfg)?;
                    let fit = curvature_check(&report)?;
                    println!("== {name}, {:.2?}", started.elapsed());
                    print!("{}", report.summary());
                    println!("  curvature {:.6e}, residual {:.3e}", fit.curvature, fit.residual);
                }
            }
        }
    }
    Ok(())
}
