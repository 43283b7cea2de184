//! Pointwise Stackelberg game on the Hamiltonians.
//!
//! For player `i`,
//!
//! ```text
//! H_i(s, x, μ, ν, p_i, A_i) = ⟨p_i, f⟩ + ½ σᵀ A_i σ + g_i
//! ```
//!
//! with `f` the drift, `σ` the (scalar-noise) diffusion and `g_i` the running
//! cost. The follower minimizes `H_2` in `ν` for every leader action `μ`,
//! which gives the affine reaction `ν = -Ψx - Φμ - ψ`; the leader then
//! minimizes `H_1(μ, reaction(μ))`, a quadratic in `μ` with Hessian
//! `(R̂1 + R̂1ᵀ)/2` and gradient at zero `Yᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, bilinear, min_eigenvalue, symmetrize, FactorError, SpdFactor, SYMMETRY_TOL};
use crate::model::{CoefficientSnapshot, Player};

/// Costates and second-order arguments fed to the Hamiltonians.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateInputs {
    /// Leader costate.
    pub p1: DVector<f64>,
    /// Follower costate.
    pub p2: DVector<f64>,
    /// Leader second-order argument.
    pub a1: DMatrix<f64>,
    /// Follower second-order argument.
    pub a2: DMatrix<f64>,
}

impl CostateInputs {
    /// Symmetrizes `a1`, `a2` when their asymmetry is within `1e-12`.
    pub fn new(p1: DVector<f64>, p2: DVector<f64>, a1: DMatrix<f64>, a2: DMatrix<f64>) -> Result<Self> {
        for (what, m) in [("leader second-order argument", &a1), ("follower second-order argument", &a2)] {
            let gap = asymmetry(m);
            if gap > SYMMETRY_TOL {
                return Err(Error::Asymmetry {
                    what: what.into(),
                    asymmetry: gap,
                });
            }
        }
        Ok(CostateInputs {
            p1,
            p2,
            a1: symmetrize(&a1),
            a2: symmetrize(&a2),
        })
    }

    /// Arguments generated by quadratic value functions `½ xᵀ P_i x`:
    /// `p_i = P_i x`, second-order argument `P_i`.
    pub fn quadratic(p1: &DMatrix<f64>, p2: &DMatrix<f64>, x: &DVector<f64>) -> Self {
        CostateInputs {
            p1: p1 * x,
            p2: p2 * x,
            a1: p1.clone(),
            a2: p2.clone(),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        check_len("p1", &self.p1, n)?;
        check_len("p2", &self.p2, n)?;
        check_shape("A′", &self.a1, (n, n))?;
        check_shape("A″", &self.a2, (n, n))
    }
}

fn check_len(what: &str, v: &DVector<f64>, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::dims(what, (n, 1), (v.len(), 1)));
    }
    Ok(())
}

fn check_shape(what: &str, m: &DMatrix<f64>, shape: (usize, usize)) -> Result<()> {
    if m.shape() != shape {
        return Err(Error::dims(what, shape, m.shape()));
    }
    Ok(())
}

/// `H_i(s, x, μ, ν, p_i, A_i)` for the requested player.
pub fn hamiltonian_value(
    player: Player,
    snap: &CoefficientSnapshot,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    nu: &DVector<f64>,
    costates: &CostateInputs,
) -> Result<f64> {
    let dims = snap.dims;
    check_len("x", x, dims.n)?;
    check_len("μ", mu, dims.m1)?;
    check_len("ν", nu, dims.m2)?;
    costates.check(dims.n)?;
    let (p, a) = match player {
        Player::Leader => (&costates.p1, &costates.a1),
        Player::Follower => (&costates.p2, &costates.a2),
    };
    let f = snap.drift(x, mu, nu);
    let sigma = snap.diffusion(x, mu, nu);
    Ok(p.dot(&f) + 0.5 * bilinear(&sigma, a, &sigma) + snap.cost(player).running(x, mu, nu))
}

/// Follower reaction coefficients: `ν* = -Ψx - Φμ - ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerGains {
    /// `R̂2 = D2ᵀA″D2 + R22`, the Hessian of `H_2` in `ν`.
    pub curvature: DMatrix<f64>,
    /// `Ψ` (m2×n).
    pub state_gain: DMatrix<f64>,
    /// `Φ` (m2×m1).
    pub leader_gain: DMatrix<f64>,
    /// `ψ` (m2).
    pub offset: DVector<f64>,
}

impl FollowerGains {
    pub fn response(&self, x: &DVector<f64>, mu: &DVector<f64>) -> DVector<f64> {
        -(&self.state_gain * x) - &self.leader_gain * mu - &self.offset
    }
}

fn convexity_error(what: &str, err: FactorError) -> Error {
    match err {
        FactorError::NotPositive(min_eigenvalue) => Error::ConvexityViolation {
            what: what.into(),
            min_eigenvalue,
        },
        FactorError::Singular => Error::SingularMatrix(what.into()),
    }
}

fn follower_curvature(snap: &CoefficientSnapshot, costates: &CostateInputs) -> DMatrix<f64> {
    let d2 = &snap.dynamics.d2;
    symmetrize(&(d2.transpose() * &costates.a2 * d2 + &snap.follower_cost().r22))
}

pub fn follower_gains(snap: &CoefficientSnapshot, costates: &CostateInputs) -> Result<FollowerGains> {
    costates.check(snap.dims.n)?;
    let dy = &snap.dynamics;
    let c2 = snap.follower_cost();
    let curvature = follower_curvature(snap, costates);
    let factor = SpdFactor::new(&curvature).map_err(|e| convexity_error("follower curvature", e))?;
    let d2t_a2 = dy.d2.transpose() * &costates.a2;
    let state_gain = factor.solve(&(&d2t_a2 * &dy.c + &c2.m2));
    let leader_gain = factor.solve(&(&d2t_a2 * &dy.d1 + c2.r12.transpose()));
    let offset = factor.solve_vec(&(dy.b2.transpose() * &costates.p2 + &d2t_a2 * &dy.lambda + &c2.rho2));
    Ok(FollowerGains {
        curvature,
        state_gain,
        leader_gain,
        offset,
    })
}

/// The follower's pointwise minimizer of `H_2` given the leader's action.
pub fn follower_best_response(
    snap: &CoefficientSnapshot,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    costates: &CostateInputs,
) -> Result<DVector<f64>> {
    check_len("x", x, snap.dims.n)?;
    check_len("μ", mu, snap.dims.m1)?;
    Ok(follower_gains(snap, costates)?.response(x, mu))
}

/// `H_2` written in completed-square form
///
/// ```text
/// ½|R̂2^{1/2}(ν + Ψx + Φμ + ψ)|² + ν-free terms.
/// ```
///
/// Equal to [`hamiltonian_value`] for the follower; kept as a separate
/// evaluation route for cross-checks.
pub fn follower_completed_square(
    snap: &CoefficientSnapshot,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    nu: &DVector<f64>,
    costates: &CostateInputs,
) -> Result<f64> {
    let g = follower_gains(snap, costates)?;
    let dy = &snap.dynamics;
    let c2 = snap.follower_cost();
    let a2 = &costates.a2;
    let p2 = &costates.p2;
    let r = &g.curvature;
    let shift = nu + &g.state_gain * x + &g.leader_gain * mu + &g.offset;
    let square = 0.5 * bilinear(&shift, r, &shift);

    let ct_a2 = dy.c.transpose() * a2;
    let x_quad = &ct_a2 * &dy.c + &c2.q - g.state_gain.transpose() * r * &g.state_gain;
    let x_lin = dy.a.transpose() * p2 + &ct_a2 * &dy.d1 * mu + &ct_a2 * &dy.lambda + c2.m1.transpose() * mu + &c2.q_vec
        - g.state_gain.transpose() * r * &g.leader_gain * mu
        - g.state_gain.transpose() * r * &g.offset;
    let mu_quad = dy.d1.transpose() * a2 * &dy.d1 + &c2.r11 - g.leader_gain.transpose() * r * &g.leader_gain;
    let mu_lin = dy.b1.transpose() * p2 + dy.d1.transpose() * a2 * &dy.lambda + &c2.rho1
        - g.leader_gain.transpose() * r * &g.offset;
    let constant = p2.dot(&dy.b) + 0.5 * bilinear(&dy.lambda, a2, &dy.lambda) - 0.5 * bilinear(&g.offset, r, &g.offset);

    Ok(square
        + 0.5 * bilinear(x, &x_quad, x)
        + x_lin.dot(x)
        + 0.5 * bilinear(mu, &mu_quad, mu)
        + mu_lin.dot(mu)
        + constant)
}

/// Stationarity data of `μ ↦ H_1(μ, follower reaction(μ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderStationarity {
    /// `R̂1`, assembled term by term; not symmetric in general.
    pub curvature_raw: DMatrix<f64>,
    /// `Yᵀ`: gradient of the reduced leader Hamiltonian at `μ = 0`.
    pub linear: DVector<f64>,
    /// `(R̂1 + R̂1ᵀ)/2`, the Hessian in `μ`.
    pub curvature: DMatrix<f64>,
}

pub fn leader_stationarity(
    snap: &CoefficientSnapshot,
    x: &DVector<f64>,
    costates: &CostateInputs,
    gains: &FollowerGains,
) -> Result<LeaderStationarity> {
    let dims = snap.dims;
    check_len("x", x, dims.n)?;
    costates.check(dims.n)?;
    check_shape("Φ", &gains.leader_gain, (dims.m2, dims.m1))?;
    check_shape("Ψ", &gains.state_gain, (dims.m2, dims.n))?;
    check_len("ψ", &gains.offset, dims.m2)?;

    let dy = &snap.dynamics;
    let c1 = snap.leader_cost();
    let a1 = &costates.a1;
    let p1 = &costates.p1;
    let phi = &gains.leader_gain;
    let phi_t = phi.transpose();
    let psi_x = &gains.state_gain * x;
    let off = &gains.offset;

    let d1t_a1 = dy.d1.transpose() * a1;
    let d2t_a1 = dy.d2.transpose() * a1;
    let d2t_a1_d1 = &d2t_a1 * &dy.d1;
    let d2t_a1_d2 = &d2t_a1 * &dy.d2;

    let curvature_raw = &d1t_a1 * &dy.d1 - &phi_t * &d2t_a1_d1 * 2.0 + &phi_t * &d2t_a1_d2 * phi + &c1.r11
        - &phi_t * c1.r12.transpose() * 2.0
        + &phi_t * &c1.r22 * phi;

    let cx = &dy.c * x;
    let linear = dy.b1.transpose() * p1 - &phi_t * (dy.b2.transpose() * p1) + &d1t_a1 * &cx - &phi_t * (&d2t_a1 * &cx)
        - &d2t_a1_d1.transpose() * &psi_x
        - &d2t_a1_d1.transpose() * off
        + &d1t_a1 * &dy.lambda
        + &phi_t * (&d2t_a1_d2 * &psi_x)
        + &phi_t * (&d2t_a1_d2 * off)
        - &phi_t * (&d2t_a1 * &dy.lambda)
        + &c1.m1 * x
        - &phi_t * (&c1.m2 * x)
        - &c1.r12 * &psi_x
        - &c1.r12 * off
        + &phi_t * (&c1.r22 * &psi_x)
        + &phi_t * (&c1.r22 * off)
        + &c1.rho1
        - &phi_t * &c1.rho2;

    let curvature = symmetrize(&curvature_raw);
    Ok(LeaderStationarity {
        curvature_raw,
        linear,
        curvature,
    })
}

/// The leader's pointwise action: solves `(R̂1 + R̂1ᵀ)/2 μ = -Yᵀ`.
pub fn leader_best_response(
    snap: &CoefficientSnapshot,
    x: &DVector<f64>,
    costates: &CostateInputs,
) -> Result<DVector<f64>> {
    let gains = follower_gains(snap, costates)?;
    let st = leader_stationarity(snap, x, costates, &gains)?;
    let factor = SpdFactor::new(&st.curvature).map_err(|e| convexity_error("leader curvature", e))?;
    Ok(-factor.solve_vec(&st.linear))
}

/// Leader action and the follower's reaction to it.
pub fn stackelberg_actions(
    snap: &CoefficientSnapshot,
    x: &DVector<f64>,
    costates: &CostateInputs,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let gains = follower_gains(snap, costates)?;
    let st = leader_stationarity(snap, x, costates, &gains)?;
    let factor = SpdFactor::new(&st.curvature).map_err(|e| convexity_error("leader curvature", e))?;
    let mu = -factor.solve_vec(&st.linear);
    let nu = gains.response(x, &mu);
    Ok((mu, nu))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport {
    pub follower_ok: bool,
    pub leader_ok: bool,
    pub follower_min_eigenvalue: f64,
    /// `None` when the follower curvature is singular, since the leader's
    /// reduced problem is then undefined.
    pub leader_min_eigenvalue: Option<f64>,
}

/// Strict-convexity margins of both pointwise problems.
pub fn check_convexity(snap: &CoefficientSnapshot, costates: &CostateInputs) -> ConvexityReport {
    let follower_min = min_eigenvalue(&follower_curvature(snap, costates));
    let leader_min = follower_gains(snap, costates).ok().and_then(|g| {
        let x = DVector::zeros(snap.dims.n);
        leader_stationarity(snap, &x, costates, &g)
            .ok()
            .map(|st| min_eigenvalue(&st.curvature))
    });
    let ok = |v: f64| v > crate::linalg::PD_THRESHOLD;
    ConvexityReport {
        follower_ok: ok(follower_min),
        leader_ok: leader_min.is_some_and(ok),
        follower_min_eigenvalue: follower_min,
        leader_min_eigenvalue: leader_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::model::RawGame;

    fn v(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    fn m(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn scalar_costates(p1: f64, p2: f64, a1: f64, a2: f64) -> CostateInputs {
        CostateInputs::new(v(p1), v(p2), m(a1), m(a2)).unwrap()
    }

    #[test]
    fn zero_hamiltonian() {
        let snap = RawGame::new(1, 1, 1, 0.0, 1.0).validate().unwrap().snapshot(0.0).unwrap();
        let c = scalar_costates(0.0, 0.0, 0.0, 0.0);
        let h = hamiltonian_value(Player::Leader, &snap, &v(0.0), &v(0.0), &v(0.0), &c).unwrap();
        assert_eq!(h, 0.0);
    }

    #[test]
    fn hand_computed_follower_hamiltonian() {
        let snap = RawGame::new(1, 1, 1, 0.0, 1.0)
            .dynamics("A", 1.0)
            .dynamics("B1", 1.0)
            .dynamics("B2", 1.0)
            .dynamics("D2", 1.0)
            .cost2("Q", 1.0)
            .cost2("R22", 1.0)
            .validate()
            .unwrap()
            .snapshot(0.0)
            .unwrap();
        let c = scalar_costates(0.0, 1.0, 0.0, 1.0);
        let h = hamiltonian_value(Player::Follower, &snap, &v(1.0), &v(0.0), &v(2.0), &c).unwrap();
        assert_eq!(h, 7.5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let snap = RawGame::new(1, 1, 1, 0.0, 1.0).validate().unwrap().snapshot(0.0).unwrap();
        let c = scalar_costates(0.0, 0.0, 0.0, 0.0);
        let bad = DVector::zeros(2);
        assert!(matches!(
            hamiltonian_value(Player::Leader, &snap, &bad, &v(0.0), &v(0.0), &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn gains_example_snapshot() -> CoefficientSnapshot {
        RawGame::new(1, 1, 1, 0.0, 1.0)
            .dynamics("C", 1.0)
            .dynamics("D2", 1.0)
            .dynamics("B2", 1.0)
            .cost2("R22", 1.0)
            .validate()
            .unwrap()
            .snapshot(0.0)
            .unwrap()
    }

    #[test]
    fn follower_gains_by_hand() {
        let snap = gains_example_snapshot();
        let g = follower_gains(&snap, &scalar_costates(0.0, 1.0, 0.0, 1.0)).unwrap();
        assert_eq!(g.curvature[(0, 0)], 2.0);
        assert!((g.state_gain[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(g.leader_gain[(0, 0)], 0.0);
        assert!((g.offset[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn follower_response_by_hand() {
        let snap = gains_example_snapshot();
        let nu = follower_best_response(&snap, &v(2.0), &v(7.0), &scalar_costates(0.0, 1.0, 0.0, 1.0)).unwrap();
        assert!((nu[0] + 1.5).abs() < 1e-14);
    }

    #[test]
    fn follower_response_zero_when_only_r22() {
        let snap = RawGame::new(2, 1, 2, 0.0, 1.0)
            .cost2("R22", DMatrix::<f64>::identity(2, 2))
            .validate()
            .unwrap()
            .snapshot(0.0)
            .unwrap();
        let c = CostateInputs::new(DVector::zeros(2), DVector::zeros(2), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)).unwrap();
        let nu = follower_best_response(&snap, &DVector::from_vec(vec![3.0, -1.0]), &v(5.0), &c).unwrap();
        assert_eq!(nu, DVector::zeros(2));
    }

    #[test]
    fn singular_follower_curvature() {
        let snap = RawGame::new(1, 1, 1, 0.0, 1.0).validate().unwrap().snapshot(0.0).unwrap();
        let err = follower_gains(&snap, &scalar_costates(0.0, 0.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::ConvexityViolation { .. }));
    }

    #[test]
    fn case1_structure_gains() {
        let snap = benchmarks::reference_game().snapshot(0.0).unwrap();
        let c = scalar_costates(1.3, -0.7, 4.0, 9.0);
        let g = follower_gains(&snap, &c).unwrap();
        assert_eq!(g.curvature[(0, 0)], 1.0);
        assert_eq!(g.state_gain[(0, 0)], 0.0);
        assert_eq!(g.leader_gain[(0, 0)], 0.001);
        assert!((g.offset[0] - 0.001 * -0.7).abs() < 1e-18);
        let mu = v(2.0);
        let nu = follower_best_response(&snap, &v(1.0), &mu, &c).unwrap();
        assert!((nu[0] - -(0.001 * 2.0 + 0.001 * -0.7)).abs() < 1e-15);
        let st = leader_stationarity(&snap, &v(1.0), &c, &g).unwrap();
        assert!((st.curvature_raw[(0, 0)] - 0.998).abs() < 1e-15);
    }

    #[test]
    fn leader_only_r11() {
        let snap = RawGame::new(1, 1, 1, 0.0, 1.0)
            .cost1("R11", 1.0)
            .cost2("R22", 1.0)
            .validate()
            .unwrap()
            .snapshot(0.0)
            .unwrap();
        let c = scalar_costates(0.0, 0.0, 0.0, 0.0);
        let g = follower_gains(&snap, &c).unwrap();
        let st = leader_stationarity(&snap, &v(3.0), &c, &g).unwrap();
        assert_eq!(st.curvature_raw, m(1.0));
        assert_eq!(st.linear, v(0.0));
        assert_eq!(leader_best_response(&snap, &v(3.0), &c).unwrap(), v(0.0));
    }

    #[test]
    fn case2_structure_leader() {
        let game = RawGame::new(2, 2, 1, 0.0, 1.0)
            .dynamics("A", DMatrix::from_row_slice(2, 2, &[0.1, 0.2, -0.3, 0.4]))
            .dynamics("B1", DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]))
            .dynamics("D2", DMatrix::from_row_slice(2, 1, &[0.3, -0.2]))
            .cost1("R11", DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]))
            .cost1("Q", DMatrix::<f64>::identity(2, 2))
            .cost2("R22", 1.0)
            .validate()
            .unwrap();
        let snap = game.snapshot(0.2).unwrap();
        let p1 = DVector::from_vec(vec![0.7, -1.1]);
        let c = CostateInputs::new(p1.clone(), DVector::from_vec(vec![0.2, 0.1]), DMatrix::<f64>::identity(2, 2), DMatrix::<f64>::identity(2, 2)).unwrap();
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let g = follower_gains(&snap, &c).unwrap();
        assert_eq!(g.leader_gain, DMatrix::zeros(1, 2));
        assert_eq!(g.state_gain, DMatrix::zeros(1, 2));
        let st = leader_stationarity(&snap, &x, &c, &g).unwrap();
        assert_eq!(st.curvature_raw, snap.leader_cost().r11);
        let expected_linear = snap.dynamics.b1.transpose() * &p1;
        assert!((st.linear - &expected_linear).norm() < 1e-14);
        let mu = leader_best_response(&snap, &x, &c).unwrap();
        let direct = -snap.leader_cost().r11.clone().try_inverse().unwrap() * expected_linear;
        assert!((mu - direct).norm() < 1e-12);
    }

    #[test]
    fn convexity_reports() {
        let snap = benchmarks::reference_game().snapshot(0.0).unwrap();
        let r = check_convexity(&snap, &scalar_costates(1.0, 2.0, 5.0, -3.0));
        assert!(r.follower_ok && r.leader_ok);
        assert_eq!(r.follower_min_eigenvalue, 1.0);
        assert!((r.leader_min_eigenvalue.unwrap() - 0.998).abs() < 1e-15);

        let snap = RawGame::new(1, 1, 1, 0.0, 1.0).cost2("R22", -1.0).validate().unwrap().snapshot(0.0).unwrap();
        let r = check_convexity(&snap, &scalar_costates(0.0, 0.0, 0.0, 0.0));
        assert!(!r.follower_ok && !r.leader_ok);

        let snap = RawGame::new(1, 1, 1, 0.0, 1.0)
            .cost1("R11", 0.002)
            .cost1("R12", 1.0)
            .cost2("R12", 0.001)
            .cost2("R22", 1.0)
            .validate()
            .unwrap()
            .snapshot(0.0)
            .unwrap();
        let r = check_convexity(&snap, &scalar_costates(0.0, 0.0, 0.0, 0.0));
        assert!(r.follower_ok);
        assert!(!r.leader_ok);
        assert!(r.leader_min_eigenvalue.unwrap().abs() < 1e-15);
    }

    #[test]
    fn asymmetric_second_order_argument_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(CostateInputs::new(DVector::zeros(2), DVector::zeros(2), a, DMatrix::zeros(2, 2)).is_err());
    }
}
