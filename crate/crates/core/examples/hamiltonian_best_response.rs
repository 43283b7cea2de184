//! Pointwise leader/follower problem at one state: closed-form reactions
//! next to a brute-force grid search over the controls.

use lq_stackelberg::benchmarks;
use lq_stackelberg::hamiltonian::{
    check_convexity, follower_best_response, hamiltonian_value, stackelberg_actions, CostateInputs,
};
use lq_stackelberg::model::Player;
use nalgebra::{DMatrix, DVector};

fn argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| lo + i as f64 * step)
        .map(|z| (z, f(z)))
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0
}

fn main() -> lq_stackelberg::Result<()> {
    let game = benchmarks::reference_game();
    let snap = game.snapshot(0.5)?;
    let x = DVector::from_element(1, 1.0);
    let costates = CostateInputs::quadratic(&DMatrix::from_element(1, 1, 1.5), &DMatrix::from_element(1, 1, 0.8), &x);
    let convexity = check_convexity(&snap, &costates);
    println!("curvature margins: follower {:.4}, leader {:?}", convexity.follower_min_eigenvalue, convexity.leader_min_eigenvalue);

    let one = |v: f64| DVector::from_element(1, v);
    let h = |player, mu: f64, nu: f64| hamiltonian_value(player, &snap, &x, &one(mu), &one(nu), &costates).unwrap();

    let mu = 0.3;
    let closed = follower_best_response(&snap, &x, &one(mu), &costates)?[0];
    let grid = argmin(|nu| h(Player::Follower, mu, nu), -10.0, 10.0, 1e-4);
    println!("follower reaction to u = {mu}: closed form {closed:.6}, grid {grid:.4}");

    let (mu_star, nu_star) = stackelberg_actions(&snap, &x, &costates)?;
    let reaction = |mu: f64| follower_best_response(&snap, &x, &one(mu), &costates).unwrap()[0];
    let grid = argmin(|mu| h(Player::Leader, mu, reaction(mu)), -10.0, 10.0, 1e-4);
    println!("leader action: closed form {:.6}, grid {grid:.4}; follower answers {:.6}", mu_star[0], nu_star[0]);
    Ok(())
}
