//! Feedback strategies and value functions built from Riccati kernels, and
//! residuals of the value-function PDEs under the quadratic ansatz
//! `V_i(s, x) = ½ xᵀ P_i(s) x`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    follower_gains, hamiltonian_value, leader_stationarity, stackelberg_actions, CostateInputs,
};
use crate::linalg::{bilinear, symmetrize, FactorError, SpdFactor};
use crate::model::{CoefficientSnapshot, GameSpec, Player};
use crate::riccati::{case_preconditions, lerp, locate, CaseTag, RiccatiTrajectory};

/// Affine state feedback with gain tables on a time grid.
///
/// Leader: `u = K(s) x + offset`. Follower: `v = K(s) x + K_u(s) u + offset`.
/// Gains are linearly interpolated between grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackStrategy {
    pub player: Player,
    pub grid: Vec<f64>,
    /// Gain on the state: `K_u` for the leader, `K_vx` for the follower.
    pub state_gain: Vec<DMatrix<f64>>,
    /// Follower's gain on the leader's control, `K_vu`; empty for the leader.
    pub control_gain: Vec<DMatrix<f64>>,
    pub offset: DVector<f64>,
}

impl FeedbackStrategy {
    pub fn leader(grid: Vec<f64>, state_gain: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = state_gain.first().map_or(0, |k| k.nrows());
        Self::checked(Player::Leader, grid, state_gain, Vec::new(), DVector::zeros(m))
    }

    pub fn follower(grid: Vec<f64>, state_gain: Vec<DMatrix<f64>>, control_gain: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = state_gain.first().map_or(0, |k| k.nrows());
        Self::checked(Player::Follower, grid, state_gain, control_gain, DVector::zeros(m))
    }

    fn checked(
        player: Player,
        grid: Vec<f64>,
        state_gain: Vec<DMatrix<f64>>,
        control_gain: Vec<DMatrix<f64>>,
        offset: DVector<f64>,
    ) -> Result<Self> {
        if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("strategy grid must be non-empty and strictly increasing".into()));
        }
        if state_gain.len() != grid.len() {
            return Err(Error::dims("state gain table", (grid.len(), 1), (state_gain.len(), 1)));
        }
        if player == Player::Follower && control_gain.len() != grid.len() {
            return Err(Error::dims("control gain table", (grid.len(), 1), (control_gain.len(), 1)));
        }
        let shape = state_gain[0].shape();
        if let Some(k) = state_gain.iter().find(|k| k.shape() != shape) {
            return Err(Error::dims("state gain", shape, k.shape()));
        }
        if let Some(first) = control_gain.first() {
            if let Some(k) = control_gain.iter().find(|k| k.shape() != first.shape()) {
                return Err(Error::dims("control gain", first.shape(), k.shape()));
            }
        }
        if state_gain.iter().chain(&control_gain).any(|k| !k.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite {
                what: format!("{} gains", player.name()),
            });
        }
        Ok(FeedbackStrategy {
            player,
            grid,
            state_gain,
            control_gain,
            offset,
        })
    }

    pub fn t0(&self) -> f64 {
        self.grid[0]
    }

    pub fn t_end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Control dimension.
    pub fn dim(&self) -> usize {
        self.state_gain[0].nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.state_gain[0].ncols()
    }

    fn check_time(&self, s: f64) -> Result<()> {
        if !(s >= self.t0() && s <= self.t_end()) {
            return Err(Error::OutOfHorizon {
                s,
                t0: self.t0(),
                t_end: self.t_end(),
            });
        }
        Ok(())
    }

    /// Interpolated `(state gain, control gain)`; the control gain is `None`
    /// for the leader.
    pub fn gains_at(&self, s: f64) -> Result<(DMatrix<f64>, Option<DMatrix<f64>>)> {
        self.check_time(s)?;
        let at = locate(&self.grid, s);
        let control = (!self.control_gain.is_empty()).then(|| lerp(&self.control_gain, at));
        Ok((lerp(&self.state_gain, at), control))
    }

    /// The control at `(s, x)`; the follower also needs the leader's control
    /// `u`.
    pub fn eval(&self, s: f64, x: &DVector<f64>, u: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        if x.len() != self.state_dim() {
            return Err(Error::dims("x", (self.state_dim(), 1), (x.len(), 1)));
        }
        let (k, ku) = self.gains_at(s)?;
        let mut out = k * x + &self.offset;
        if let Some(ku) = ku {
            let u = u.ok_or_else(|| Error::Config("follower strategy needs the leader's control".into()))?;
            if u.len() != ku.ncols() {
                return Err(Error::dims("u", (ku.ncols(), 1), (u.len(), 1)));
            }
            out += ku * u;
        }
        Ok(out)
    }
}

/// `½ xᵀ P_i(s) x` along a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct ValueFunction<'a> {
    pub player: Player,
    pub traj: &'a RiccatiTrajectory,
}

impl ValueFunction<'_> {
    pub fn eval(&self, s: f64, x: &DVector<f64>) -> Result<f64> {
        value(self.traj, self.player, s, x)
    }
}

pub fn value(traj: &RiccatiTrajectory, player: Player, s: f64, x: &DVector<f64>) -> Result<f64> {
    let p = traj.kernel_at(player, s)?;
    if x.len() != p.nrows() {
        return Err(Error::dims("x", (p.nrows(), 1), (x.len(), 1)));
    }
    Ok(0.5 * bilinear(x, &p, x))
}

fn condition(what: &str, s: f64) -> impl Fn(FactorError) -> Error + '_ {
    move |e| match e {
        FactorError::NotPositive(margin) => Error::ConditionViolation {
            condition: what.into(),
            s,
            margin,
        },
        FactorError::Singular => Error::SingularMatrix(format!("{what} at s = {s}")),
    }
}

/// Case-1 building blocks at one time.
struct Case1Parts {
    /// `R22⁻¹` of the follower.
    r: SpdFactor,
    /// `B1ᵀ - R12ᶠ R⁻¹ B2ᵀ`
    e: DMatrix<f64>,
    /// `R12ˡ R⁻¹ B2ᵀ`
    f: DMatrix<f64>,
    /// `-Δ`
    neg_delta: SpdFactor,
}

impl Case1Parts {
    fn new(snap: &CoefficientSnapshot) -> Result<Self> {
        let c1 = snap.leader_cost();
        let c2 = snap.follower_cost();
        let r = SpdFactor::new(&c2.r22).map_err(condition("follower control weight cost2.R22 positive definite", snap.s))?;
        let r_b2t = r.solve(&snap.dynamics.b2.transpose());
        let e = snap.dynamics.b1.transpose() - &c2.r12 * &r_b2t;
        let f = &c1.r12 * &r_b2t;
        let cross = &c2.r12 * r.solve(&c1.r12.transpose());
        let neg_delta = SpdFactor::new(&(&c1.r11 - &cross - cross.transpose()))
            .map_err(condition("leader effective weight positive definite", snap.s))?;
        Ok(Case1Parts { r, e, f, neg_delta })
    }

    /// `Δ⁻¹ y`
    fn delta_solve(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        -self.neg_delta.solve(y)
    }
}

/// Equilibrium strategies at every node of `traj`.
///
/// Case 1: `K_u = Δ⁻¹Γ`, `K_vu = -R22⁻¹ R12ᶠᵀ`, `K_vx = -R22⁻¹ B2ᵀ P2`.
/// Case 2: `K_u = -R11⁻¹ B1ᵀ P1`, follower gains zero.
pub fn build_strategies(
    traj: &RiccatiTrajectory,
    game: &GameSpec,
    tag: CaseTag,
) -> Result<(FeedbackStrategy, FeedbackStrategy)> {
    if let Some(k) = traj.solvable.iter().position(|ok| !ok) {
        let m = traj.margins[k];
        return Err(Error::ConditionViolation {
            condition: "trajectory solvable on the whole grid".into(),
            s: traj.grid[k],
            margin: m.follower.min(m.leader),
        });
    }
    let dims = game.dims;
    let nodes = traj.grid.len();
    let mut ku = Vec::with_capacity(nodes);
    let mut kvx = Vec::with_capacity(nodes);
    let mut kvu = Vec::with_capacity(nodes);
    let constant = game.is_time_invariant();
    let mut cached: Option<(CoefficientSnapshot, Option<Case1Parts>, Option<SpdFactor>)> = None;
    for (k, &s) in traj.grid.iter().enumerate() {
        if cached.is_none() || !constant {
            let snap = game.snapshot_clamped(s);
            let (parts, r11) = match tag {
                CaseTag::Case1General | CaseTag::Case1Reduced => (Some(Case1Parts::new(&snap)?), None),
                CaseTag::Case2 => {
                    let r11 = SpdFactor::new(&snap.leader_cost().r11)
                        .map_err(condition("leader control weight cost1.R11 positive definite", s))?;
                    (None, Some(r11))
                }
            };
            cached = Some((snap, parts, r11));
        }
        let (snap, parts, r11) = cached.as_ref().expect("filled above");
        let (p1, p2) = (&traj.p1[k], &traj.p2[k]);
        match (parts, r11) {
            (Some(c), _) => {
                let gamma = &c.e * p1 - &c.f * p2;
                ku.push(c.delta_solve(&gamma));
                kvu.push(-c.r.solve(&snap.follower_cost().r12.transpose()));
                kvx.push(-c.r.solve(&(snap.dynamics.b2.transpose() * p2)));
            }
            (None, Some(r11)) => {
                ku.push(-r11.solve(&(snap.dynamics.b1.transpose() * p1)));
                kvx.push(DMatrix::zeros(dims.m2, dims.n));
                kvu.push(DMatrix::zeros(dims.m2, dims.m1));
            }
            (None, None) => unreachable!("one of the case parts is always built"),
        }
    }
    Ok((
        FeedbackStrategy::leader(traj.grid.clone(), ku)?,
        FeedbackStrategy::follower(traj.grid.clone(), kvx, kvu)?,
    ))
}

/// Kernels, their rates, the snapshot and costates at `(s, x)`.
struct Ansatz {
    snap: CoefficientSnapshot,
    p1: DMatrix<f64>,
    p2: DMatrix<f64>,
    dp1: DMatrix<f64>,
    dp2: DMatrix<f64>,
}

impl Ansatz {
    fn new(traj: &RiccatiTrajectory, game: &GameSpec, s: f64, x: &DVector<f64>) -> Result<Self> {
        let snap = game.snapshot(s)?;
        if x.len() != game.dims.n {
            return Err(Error::dims("x", (game.dims.n, 1), (x.len(), 1)));
        }
        Ok(Ansatz {
            snap,
            p1: traj.kernel_at(Player::Leader, s)?,
            p2: traj.kernel_at(Player::Follower, s)?,
            dp1: traj.rate_at(Player::Leader, s)?,
            dp2: traj.rate_at(Player::Follower, s)?,
        })
    }

    fn costates(&self, x: &DVector<f64>) -> CostateInputs {
        CostateInputs::quadratic(&symmetrize(&self.p1), &symmetrize(&self.p2), x)
    }
}

/// Left-hand sides `(r1, r2)` of the two value-function PDEs at `(s, x)` with
/// `V_i = ½ xᵀ P_i x` taken from `traj`.
///
/// `∂V_i/∂s = ½ xᵀ Ṗ_i x` uses the right-hand-side rates stored at the grid
/// nodes, so a kernel that does not solve its equation leaves a nonzero
/// residual. Case 1 evaluates the simplified equations of that structure;
/// Case 2 evaluates the general equations ([`general_pde_residual`]).
pub fn pde_residual(
    traj: &RiccatiTrajectory,
    game: &GameSpec,
    tag: CaseTag,
    s: f64,
    x: &DVector<f64>,
) -> Result<(f64, f64)> {
    let violations = case_preconditions(game, tag);
    if !violations.is_empty() {
        return Err(Error::CasePreconditions(violations));
    }
    let a = Ansatz::new(traj, game, s, x)?;
    match tag {
        CaseTag::Case1General | CaseTag::Case1Reduced => case1_residual(&a, x),
        CaseTag::Case2 => general_terms(&a.snap, &a.costates(x), &a.dp1, &a.dp2, x),
    }
}

fn case1_residual(a: &Ansatz, x: &DVector<f64>) -> Result<(f64, f64)> {
    let snap = &a.snap;
    let dy = &snap.dynamics;
    let c1 = snap.leader_cost();
    let c2 = snap.follower_cost();
    let parts = Case1Parts::new(snap)?;
    let p1 = &a.p1 * x;
    let p2 = &a.p2 * x;
    let col = |v: DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());

    // G = E p1 - R12ˡ R⁻¹ B2ᵀ p2, and Δ⁻¹G.
    let g = &parts.e * &p1 - &parts.f * &p2;
    let dg = parts.delta_solve(&col(g.clone())).column(0).into_owned();
    let r_r12lt = parts.r.solve(&c1.r12.transpose());
    let middle1 = &c1.r11 * 0.5 - &c2.r12 * &r_r12lt;
    let w = &c2.r12 * parts.r.solve(&c2.r12.transpose());
    let b2t_p2 = dy.b2.transpose() * &p2;
    let r_b2t_p2 = parts.r.solve_vec(&b2t_p2);
    let ax = &dy.a * x;

    let r1 = 0.5 * bilinear(x, &a.dp1, x)
        + bilinear(&dg, &middle1, &dg)
        + g.dot(&dg)
        + 0.5 * bilinear(x, &(dy.c.transpose() * &a.p1 * &dy.c + &c1.q), x)
        + p1.dot(&ax)
        - (dy.b2.transpose() * &p1).dot(&r_b2t_p2);
    let r2 = 0.5 * bilinear(x, &a.dp2, x) - 0.5 * bilinear(&dg, &w, &dg)
        + (&parts.e * &p2).dot(&dg)
        + 0.5 * bilinear(x, &(dy.c.transpose() * &a.p2 * &dy.c + &c2.q), x)
        + p2.dot(&ax)
        - 0.5 * b2t_p2.dot(&r_b2t_p2);
    Ok((r1, r2))
}

/// Left-hand sides of the general-coefficient value-function PDEs with the
/// follower's reaction and the leader's action substituted, for value
/// functions whose derivatives at `(s, x)` are `∂V_i/∂s = ½ xᵀ Ṗ_i x`,
/// `∂V_i/∂x = costates.p_i`, `∂²V_i/∂x² = costates.a_i`.
pub fn general_pde_residual(
    snap: &CoefficientSnapshot,
    costates: &CostateInputs,
    dp1: &DMatrix<f64>,
    dp2: &DMatrix<f64>,
    x: &DVector<f64>,
) -> Result<(f64, f64)> {
    general_terms(snap, costates, dp1, dp2, x)
}

fn general_terms(
    snap: &CoefficientSnapshot,
    cs: &CostateInputs,
    dp1: &DMatrix<f64>,
    dp2: &DMatrix<f64>,
    x: &DVector<f64>,
) -> Result<(f64, f64)> {
    let dy = &snap.dynamics;
    let c1 = snap.leader_cost();
    let c2 = snap.follower_cost();
    let gains = follower_gains(snap, cs)?;
    let st = leader_stationarity(snap, x, cs, &gains)?;
    let factor = SpdFactor::new(&st.curvature).map_err(|e| match e {
        FactorError::NotPositive(min_eigenvalue) => Error::ConvexityViolation {
            what: "leader curvature".into(),
            min_eigenvalue,
        },
        FactorError::Singular => Error::SingularMatrix("leader curvature".into()),
    })?;
    let mu = -factor.solve_vec(&st.linear);

    let (psi_gain, phi, psi) = (&gains.state_gain, &gains.leader_gain, &gains.offset);
    let (a1, a2) = (&cs.a1, &cs.a2);
    let (p1, p2) = (&cs.p1, &cs.p2);
    let r2hat = &gains.curvature;
    let phi_t = phi.transpose();
    let psi_t = psi_gain.transpose();
    let d2t_a1 = dy.d2.transpose() * a1;

    // Leader.
    let quad_mu = &dy.d1.transpose() * a1 * &dy.d1 * 0.5 - &phi_t * &d2t_a1 * &dy.d1
        + &phi_t * &d2t_a1 * &dy.d2 * phi * 0.5
        + &c1.r11 * 0.5
        - &phi_t * c1.r12.transpose()
        + &phi_t * &c1.r22 * phi * 0.5;
    let d2phi_minus_d1 = &dy.d2 * phi - &dy.d1;
    // Column form of (-xᵀCᵀA′ + xᵀΨᵀD2ᵀA′ + ψᵀD2ᵀA′ - λᵀA′).
    let row = a1 * (-(&dy.c * x) + &dy.d2 * (psi_gain * x) + &dy.d2 * psi - &dy.lambda);
    let lin_mu = (dy.b1.transpose() - &phi_t * dy.b2.transpose()) * p1
        + d2phi_minus_d1.transpose() * row
        + &c1.m1 * x
        - &phi_t * (&c1.m2 * x)
        + (&c1.r22 * phi - c1.r12.transpose()).transpose() * (psi_gain * x + psi)
        + &c1.rho1
        - &phi_t * &c1.rho2;
    let quad_x = dy.c.transpose() * a1 * &dy.c * 0.5 - dy.c.transpose() * a1 * &dy.d2 * psi_gain
        + &psi_t * &d2t_a1 * &dy.d2 * psi_gain * 0.5
        + &c1.q * 0.5
        - &psi_t * &c1.m2
        + &psi_t * &c1.r22 * psi_gain * 0.5;
    let lin_x = (&dy.a - &dy.b2 * psi_gain).transpose() * p1
        + (&dy.d2 * psi_gain - &dy.c).transpose() * (&d2t_a1.transpose() * psi)
        + (&dy.c - &dy.d2 * psi_gain).transpose() * (a1 * &dy.lambda)
        + (&c1.r22 * psi_gain - &c1.m2).transpose() * psi
        + &c1.q_vec
        - &psi_t * &c1.rho2;
    let constant1 = p1.dot(&(&dy.b - &dy.b2 * psi)) + 0.5 * bilinear(psi, &(&d2t_a1 * &dy.d2), psi)
        - psi.dot(&(&d2t_a1 * &dy.lambda))
        + 0.5 * bilinear(&dy.lambda, a1, &dy.lambda)
        + 0.5 * bilinear(psi, &c1.r22, psi)
        - c1.rho2.dot(psi);
    let r1 = 0.5 * bilinear(x, dp1, x)
        + bilinear(&mu, &quad_mu, &mu)
        + lin_mu.dot(&mu)
        + bilinear(x, &quad_x, x)
        + lin_x.dot(x)
        + constant1;

    // Follower.
    let quad_x2 = dy.c.transpose() * a2 * &dy.c + &c2.q - &psi_t * r2hat * psi_gain;
    let lin_x2 = dy.a.transpose() * p2 + dy.c.transpose() * a2 * (&dy.d1 * &mu)
        + dy.c.transpose() * (a2 * &dy.lambda)
        + c2.m1.transpose() * &mu
        + &c2.q_vec
        - &psi_t * (r2hat * (phi * &mu))
        - &psi_t * (r2hat * psi);
    let quad_mu2 = dy.d1.transpose() * a2 * &dy.d1 + &c2.r11 - &phi_t * r2hat * phi;
    let lin_mu2 = dy.b1.transpose() * p2 + dy.d1.transpose() * (a2 * &dy.lambda) + &c2.rho1 - &phi_t * (r2hat * psi);
    let constant2 =
        p2.dot(&dy.b) + 0.5 * bilinear(&dy.lambda, a2, &dy.lambda) - 0.5 * bilinear(psi, r2hat, psi);
    let r2 = 0.5 * bilinear(x, dp2, x)
        + 0.5 * bilinear(x, &quad_x2, x)
        + lin_x2.dot(x)
        + 0.5 * bilinear(&mu, &quad_mu2, &mu)
        + lin_mu2.dot(&mu)
        + constant2;
    Ok((r1, r2))
}

/// `∂V_i/∂s + H_i` at the pointwise Stackelberg actions, computed straight
/// from the Hamiltonians. Equal to [`pde_residual`] whenever the case
/// formulas are consistent with the Hamiltonians.
pub fn hamiltonian_residual(traj: &RiccatiTrajectory, game: &GameSpec, s: f64, x: &DVector<f64>) -> Result<(f64, f64)> {
    let a = Ansatz::new(traj, game, s, x)?;
    let cs = a.costates(x);
    let (mu, nu) = stackelberg_actions(&a.snap, x, &cs)?;
    let h1 = hamiltonian_value(Player::Leader, &a.snap, x, &mu, &nu, &cs)?;
    let h2 = hamiltonian_value(Player::Follower, &a.snap, x, &mu, &nu, &cs)?;
    Ok((0.5 * bilinear(x, &a.dp1, x) + h1, 0.5 * bilinear(x, &a.dp2, x) + h2))
}
