//! Plugs the quadratic value functions back into the value-function PDEs.
//! A correct kernel leaves residuals at rounding level; a kernel shifted by
//! 0.1 does not.

use lq_stackelberg::benchmarks;
use lq_stackelberg::equilibrium::{hamiltonian_residual, pde_residual};
use lq_stackelberg::riccati::{solve_backward, CaseTag, Method};
use nalgebra::DVector;

fn main() -> lq_stackelberg::Result<()> {
    for (game, tag) in [
        (benchmarks::reference_game(), CaseTag::Case1General),
        (benchmarks::case2_tanh(), CaseTag::Case2),
    ] {
        let mut traj = solve_backward(&game, tag, 10_000, Method::Rk4)?;
        println!("{tag}");
        for (s, x) in [(0.1, -3.0), (0.5, 1.0), (0.9, 7.5)] {
            let x = DVector::from_element(1, x);
            let (r1, r2) = pde_residual(&traj, &game, tag, s, &x)?;
            let (h1, h2) = hamiltonian_residual(&traj, &game, s, &x)?;
            println!("  s={s:.1} x={:>5.1}: printed ({r1:+.2e}, {r2:+.2e})  direct ({h1:+.2e}, {h2:+.2e})", x[0]);
        }
        for p in &mut traj.p1 {
            p.add_scalar_mut(0.1);
        }
        let (r1, _) = pde_residual(&traj, &game, tag, 0.5, &DVector::from_element(1, 1.0))?;
        println!("  leader kernel + 0.1 at (0.5, 1): r1 = {r1:+.4}");
    }
    Ok(())
}
