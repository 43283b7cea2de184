//! Reference games with known answers, shared by the examples, the tests
//! and the `example` command.

use crate::model::{GameSpec, RawGame};

/// Scalar coupled game on `[0, 1]`: `A = 1, B1 = 1, B2 = 0.001, C = 1`,
/// unit state weights, `R11 = 1, R12 = 1` for the leader,
/// `R12 = 0.001, R22 = 1` for the follower, terminal weights 1 and 2.
pub fn reference_game_raw() -> RawGame {
    RawGame::new(1, 1, 1, 0.0, 1.0)
        .dynamics("A", 1.0)
        .dynamics("B1", 1.0)
        .dynamics("B2", 0.001)
        .dynamics("C", 1.0)
        .cost1("Q", 1.0)
        .cost1("R11", 1.0)
        .cost1("R12", 1.0)
        .cost1("L", 1.0)
        .cost2("Q", 1.0)
        .cost2("R12", 0.001)
        .cost2("R22", 1.0)
        .cost2("L", 2.0)
}

pub fn reference_game() -> GameSpec {
    reference_game_raw().validate().expect("built-in game is valid")
}

/// Scalar leader-only-drift game on `[0, 1]` whose leader Riccati solution is
/// `P1(s) = tanh(1 - s)`: `A = 0, B1 = 1, R11 = 1, Q = 1, L = 0` for the
/// leader. The follower only moves the noise (`D2 = 1`) with `Q = 1, R22 = 1,
/// L = 1`, and the leader is charged `R12 = 0.5` on the cross term.
///
/// See [`case2_tanh_p2`] for the follower's closed form.
pub fn case2_tanh_raw() -> RawGame {
    RawGame::new(1, 1, 1, 0.0, 1.0)
        .dynamics("B1", 1.0)
        .dynamics("D2", 1.0)
        .cost1("Q", 1.0)
        .cost1("R11", 1.0)
        .cost1("R12", 0.5)
        .cost2("Q", 1.0)
        .cost2("R22", 1.0)
        .cost2("L", 1.0)
}

pub fn case2_tanh() -> GameSpec {
    case2_tanh_raw().validate().expect("built-in game is valid")
}

/// Leader kernel of [`case2_tanh`] at time `s`.
pub fn case2_tanh_p1(s: f64) -> f64 {
    (1.0 - s).tanh()
}

/// Follower kernel of [`case2_tanh`]: with `r = 1 - s`, `P2` solves
/// `dP2/dr = 1 - 2 tanh(r) P2`, `P2(0) = 1`, so
/// `cosh²(r) P2 = 1 + r/2 + sinh(2r)/4`.
pub fn case2_tanh_p2(s: f64) -> f64 {
    let r = 1.0 - s;
    (1.0 + 0.5 * r + 0.25 * (2.0 * r).sinh()) / r.cosh().powi(2)
}

/// Scalar game with the leader's control absent from the drift and no
/// follower cross weight: `A = 0, C = 0, B2 = 1`, follower `Q = 1, R22 = 1,
/// L = 0`, leader `Q = 1, R11 = 1, R12 = 1`. The follower kernel is
/// `tanh(1 - s)`.
pub fn case1_reduced_tanh() -> GameSpec {
    RawGame::new(1, 1, 1, 0.0, 1.0)
        .dynamics("B2", 1.0)
        .cost1("Q", 1.0)
        .cost1("R11", 1.0)
        .cost1("R12", 1.0)
        .cost2("Q", 1.0)
        .cost2("R22", 1.0)
        .validate()
        .expect("built-in game is valid")
}

/// No dynamics, noise, state or terminal cost; only unit control weights so
/// that every positivity condition holds. All kernels vanish.
pub fn zero_game() -> GameSpec {
    RawGame::new(1, 1, 1, 0.0, 1.0)
        .cost1("R11", 1.0)
        .cost2("R22", 1.0)
        .validate()
        .expect("built-in game is valid")
}
