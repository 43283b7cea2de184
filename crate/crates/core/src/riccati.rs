//! Coupled Riccati equations for the quadratic value kernels `P1`, `P2`, and
//! their backward integration from the terminal weights.
//!
//! Three coefficient structures are supported:
//!
//! * [`CaseTag::Case1General`]: no noise on the controls, no affine or
//!   cross-state terms. With `R = R22` (follower), `E = B1ᵀ - R12ᶠ R⁻¹ B2ᵀ`,
//!   `Γ = E P1 - R12ˡ R⁻¹ B2ᵀ P2` and
//!   `Δ = R12ᶠ R⁻¹ R12ˡᵀ + R12ˡ R⁻¹ R12ᶠᵀ - R11ˡ`,
//!
//!   ```text
//!   -Ṗ1 = ΓᵀΔ⁻¹Γ + CᵀP1C + Q1 + P1A + AᵀP1 - P1 S P2 - P2 S P1
//!    Ṗ2 = ΓᵀΔ⁻¹ W Δ⁻¹Γ - P2 EᵀΔ⁻¹Γ - ΓᵀΔ⁻¹E P2
//!         - CᵀP2C - Q2 - P2A - AᵀP2 + P2 S P2
//!   ```
//!
//!   where `S = B2 R⁻¹ B2ᵀ` and `W = R12ᶠ R⁻¹ R12ᶠᵀ`.
//! * [`CaseTag::Case1Reduced`]: the same with `B1 = 0` and no follower cross
//!   weight; `P2` solves a standard Riccati equation and `P1` a linear one.
//! * [`CaseTag::Case2`]: only the leader steers the drift and only the
//!   follower moves the noise; `P1` is the leader's LQR kernel and `P2`
//!   solves a linear equation driven by it.
//!
//! Superscripts ˡ/ᶠ mark the leader's and follower's cost weights.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, asymmetry, max_abs, min_eigenvalue, symmetrize, FactorError, SpdFactor, PD_THRESHOLD};
use crate::model::{CoefficientSnapshot, Coefficient, GameSpec, Player};

/// Entries beyond this magnitude are treated as finite-time escape.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Fewest integration steps accepted by [`solve_backward`].
pub const MIN_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    Case1General,
    Case1Reduced,
    Case2,
}

impl CaseTag {
    pub const ALL: [CaseTag; 3] = [CaseTag::Case1General, CaseTag::Case1Reduced, CaseTag::Case2];

    /// Command-line spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Case1General => "case1",
            CaseTag::Case1Reduced => "case1-reduced",
            CaseTag::Case2 => "case2",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown case {s:?} (expected case1, case1-reduced or case2)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Euler,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Euler => "euler",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "euler" => Ok(Method::Euler),
            _ => Err(Error::Config(format!("unknown method {s:?} (expected rk4 or euler)"))),
        }
    }
}

/// Coefficients that must vanish for `tag`, as `(label, coefficient)`.
fn required_zero(game: &GameSpec, tag: CaseTag) -> Vec<(&'static str, Coefficient)> {
    let d = &game.dynamics;
    let [c1, c2] = &game.cost;
    let vector = |v: &nalgebra::DVector<f64>| Coefficient::Constant(DMatrix::from_column_slice(v.len(), 1, v.as_slice()));
    let mut out = vec![
        ("b", d.b.clone()),
        ("D1", d.d1.clone()),
        ("lambda", d.lambda.clone()),
        ("cost1.M1", c1.m1.clone()),
        ("cost1.M2", c1.m2.clone()),
        ("cost2.M1", c2.m1.clone()),
        ("cost2.M2", c2.m2.clone()),
        ("cost1.R22", c1.r22.clone()),
        ("cost2.R11", c2.r11.clone()),
        ("cost1.q", c1.q_vec.clone()),
        ("cost1.rho1", c1.rho1.clone()),
        ("cost1.rho2", c1.rho2.clone()),
        ("cost2.q", c2.q_vec.clone()),
        ("cost2.rho1", c2.rho1.clone()),
        ("cost2.rho2", c2.rho2.clone()),
        ("cost1.N", vector(&c1.n_vec)),
        ("cost2.N", vector(&c2.n_vec)),
    ];
    match tag {
        CaseTag::Case1General => out.push(("D2", d.d2.clone())),
        CaseTag::Case1Reduced => {
            out.push(("D2", d.d2.clone()));
            out.push(("B1", d.b1.clone()));
            out.push(("cost2.R12", c2.r12.clone()));
        }
        CaseTag::Case2 => {
            out.push(("B2", d.b2.clone()));
            out.push(("C", d.c.clone()));
            out.push(("cost2.R12", c2.r12.clone()));
        }
    }
    out
}

/// Structural restrictions of `tag` that `game` violates, e.g. `"b ≠ 0"`.
/// Zero is tested exactly.
pub fn case_preconditions(game: &GameSpec, tag: CaseTag) -> Vec<String> {
    required_zero(game, tag)
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(label, _)| format!("{label} ≠ 0"))
        .collect()
}

/// Smallest eigenvalues of the matrices whose positive definiteness the
/// equations assume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub follower: f64,
    pub leader: f64,
}

impl Margins {
    pub fn ok(&self) -> bool {
        self.follower > PD_THRESHOLD && self.leader > PD_THRESHOLD
    }
}

/// Right-hand side `(dP1/ds, dP2/ds)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub dp1: DMatrix<f64>,
    pub dp2: DMatrix<f64>,
    /// Largest asymmetry of the two rates before symmetrization.
    pub asymmetry: f64,
    pub margins: Margins,
}

const FOLLOWER_WEIGHT: &str = "follower control weight cost2.R22 positive definite";
const LEADER_WEIGHT: &str = "leader control weight cost1.R11 positive definite";
const CASE1_LEADER: &str =
    "leader effective weight R11 - R12ᶠ R22⁻¹ R12ˡᵀ - R12ˡ R22⁻¹ R12ᶠᵀ positive definite";
const CASE2_FOLLOWER: &str = "follower curvature D2ᵀ P2 D2 + R22 positive definite";

fn factor(m: &DMatrix<f64>, condition: &str, s: f64) -> Result<SpdFactor> {
    SpdFactor::new(m).map_err(|e| match e {
        FactorError::NotPositive(margin) => Error::ConditionViolation {
            condition: condition.into(),
            s,
            margin,
        },
        FactorError::Singular => Error::SingularMatrix(format!("{condition} at s = {s}")),
    })
}

/// Coefficient combinations of one case at one time, factored once.
enum System {
    Case1 {
        a: DMatrix<f64>,
        c: DMatrix<f64>,
        q1: DMatrix<f64>,
        q2: DMatrix<f64>,
        /// `B1ᵀ - R12ᶠ R⁻¹ B2ᵀ`
        e: DMatrix<f64>,
        /// `R12ˡ R⁻¹ B2ᵀ`
        f: DMatrix<f64>,
        /// `-Δ`
        neg_delta: SpdFactor,
        s2: DMatrix<f64>,
        w: DMatrix<f64>,
        margins: Margins,
    },
    Reduced {
        a: DMatrix<f64>,
        c: DMatrix<f64>,
        q1: DMatrix<f64>,
        q2: DMatrix<f64>,
        s2: DMatrix<f64>,
        /// `B2 R⁻¹ R12ˡᵀ R11⁻¹ R12ˡ R⁻¹ B2ᵀ`
        cross: DMatrix<f64>,
        margins: Margins,
    },
    Case2 {
        s: f64,
        a: DMatrix<f64>,
        q1: DMatrix<f64>,
        q2: DMatrix<f64>,
        /// `B1 R11⁻¹ B1ᵀ`
        s1: DMatrix<f64>,
        d2: DMatrix<f64>,
        r22: DMatrix<f64>,
        leader_margin: f64,
    },
}

impl System {
    fn new(snap: &CoefficientSnapshot, tag: CaseTag) -> Result<Self> {
        let s = snap.s;
        let dy = &snap.dynamics;
        let c1 = snap.leader_cost();
        let c2 = snap.follower_cost();
        match tag {
            CaseTag::Case1General => {
                let r = factor(&c2.r22, FOLLOWER_WEIGHT, s)?;
                let r_b2t = r.solve(&dy.b2.transpose());
                let r_r12ft = r.solve(&c2.r12.transpose());
                let e = dy.b1.transpose() - &c2.r12 * &r_b2t;
                let f = &c1.r12 * &r_b2t;
                let cross = &c2.r12 * r.solve(&c1.r12.transpose());
                let delta = &cross + cross.transpose() - &c1.r11;
                let neg_delta = factor(&(-&delta), CASE1_LEADER, s)?;
                Ok(System::Case1 {
                    a: dy.a.clone(),
                    c: dy.c.clone(),
                    q1: c1.q.clone(),
                    q2: c2.q.clone(),
                    margins: Margins {
                        follower: r.min_eigenvalue,
                        leader: neg_delta.min_eigenvalue,
                    },
                    e,
                    f,
                    neg_delta,
                    s2: &dy.b2 * &r_b2t,
                    w: &c2.r12 * r_r12ft,
                })
            }
            CaseTag::Case1Reduced => {
                let r = factor(&c2.r22, FOLLOWER_WEIGHT, s)?;
                let r11 = factor(&c1.r11, LEADER_WEIGHT, s)?;
                let r_b2t = r.solve(&dy.b2.transpose());
                let g = &c1.r12 * &r_b2t;
                Ok(System::Reduced {
                    a: dy.a.clone(),
                    c: dy.c.clone(),
                    q1: c1.q.clone(),
                    q2: c2.q.clone(),
                    s2: &dy.b2 * &r_b2t,
                    cross: g.transpose() * r11.solve(&g),
                    margins: Margins {
                        follower: r.min_eigenvalue,
                        leader: r11.min_eigenvalue,
                    },
                })
            }
            CaseTag::Case2 => {
                let r11 = factor(&c1.r11, LEADER_WEIGHT, s)?;
                Ok(System::Case2 {
                    s,
                    a: dy.a.clone(),
                    q1: c1.q.clone(),
                    q2: c2.q.clone(),
                    s1: &dy.b1 * r11.solve(&dy.b1.transpose()),
                    d2: dy.d2.clone(),
                    r22: c2.r22.clone(),
                    leader_margin: r11.min_eigenvalue,
                })
            }
        }
    }

    fn rates(&self, p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<Rates> {
        let (dp1, dp2, margins) = match self {
            System::Case1 {
                a,
                c,
                q1,
                q2,
                e,
                f,
                neg_delta,
                s2,
                w,
                margins,
                ..
            } => {
                let gamma = e * p1 - f * p2;
                // Δ⁻¹Γ
                let z = -neg_delta.solve(&gamma);
                let zt = z.transpose();
                let p1_s2_p2 = p1 * s2 * p2;
                let dp1 = -(gamma.transpose() * &z + c.transpose() * p1 * c + q1 + p1 * a + a.transpose() * p1
                    - &p1_s2_p2
                    - p1_s2_p2.transpose());
                let e_p2 = e * p2;
                let dp2 = &zt * w * &z - e_p2.transpose() * &z - &zt * &e_p2 - c.transpose() * p2 * c - q2 - p2 * a
                    - a.transpose() * p2
                    + p2 * s2 * p2;
                (dp1, dp2, *margins)
            }
            System::Reduced {
                a,
                c,
                q1,
                q2,
                s2,
                cross,
                margins,
            } => {
                let p1_s2_p2 = p1 * s2 * p2;
                let dp1 = -(c.transpose() * p1 * c + q1 + p1 * a + a.transpose() * p1
                    - &p1_s2_p2
                    - p1_s2_p2.transpose()
                    - p2 * cross * p2);
                let dp2 = -(c.transpose() * p2 * c + q2 + p2 * a + a.transpose() * p2 - p2 * s2 * p2);
                (dp1, dp2, *margins)
            }
            System::Case2 {
                s,
                a,
                q1,
                q2,
                s1,
                d2,
                r22,
                leader_margin,
            } => {
                let follower = min_eigenvalue(&(d2.transpose() * p2 * d2 + r22));
                if follower.is_nan() || follower <= PD_THRESHOLD {
                    return Err(Error::ConditionViolation {
                        condition: CASE2_FOLLOWER.into(),
                        s: *s,
                        margin: follower,
                    });
                }
                let dp1 = -(p1 * a + a.transpose() * p1 + q1 - p1 * s1 * p1);
                let p2_s1_p1 = p2 * s1 * p1;
                let dp2 = -(p2 * a + a.transpose() * p2 + q2 - &p2_s1_p1 - p2_s1_p1.transpose());
                (
                    dp1,
                    dp2,
                    Margins {
                        follower,
                        leader: *leader_margin,
                    },
                )
            }
        };
        let gap = asymmetry(&dp1).max(asymmetry(&dp2));
        Ok(Rates {
            dp1: symmetrize(&dp1),
            dp2: symmetrize(&dp2),
            asymmetry: gap,
            margins,
        })
    }
}

/// `(dP1/ds, dP2/ds)` for the structure `tag` at one snapshot.
pub fn rhs(snap: &CoefficientSnapshot, tag: CaseTag, p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<Rates> {
    check_kernels(snap.dims.n, p1, p2)?;
    System::new(snap, tag)?.rates(p1, p2)
}

pub fn rhs_case1(snap: &CoefficientSnapshot, p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<Rates> {
    rhs(snap, CaseTag::Case1General, p1, p2)
}

pub fn rhs_case1_reduced(snap: &CoefficientSnapshot, p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<Rates> {
    rhs(snap, CaseTag::Case1Reduced, p1, p2)
}

pub fn rhs_case2(snap: &CoefficientSnapshot, p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<Rates> {
    rhs(snap, CaseTag::Case2, p1, p2)
}

fn check_kernels(n: usize, p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<()> {
    for (what, p) in [("P1", p1), ("P2", p2)] {
        if p.shape() != (n, n) {
            return Err(Error::dims(what, (n, n), p.shape()));
        }
    }
    Ok(())
}

/// Kernels sampled on a uniform grid, in forward time.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiTrajectory {
    pub tag: CaseTag,
    pub method: Method,
    /// `t0 = s_0 < … < s_K = T`.
    pub grid: Vec<f64>,
    pub p1: Vec<DMatrix<f64>>,
    pub p2: Vec<DMatrix<f64>>,
    /// Right-hand side evaluated at each node's kernels.
    pub dp1: Vec<DMatrix<f64>>,
    pub dp2: Vec<DMatrix<f64>>,
    pub margins: Vec<Margins>,
    pub solvable: Vec<bool>,
    /// Largest asymmetry seen in any right-hand side before symmetrization.
    pub max_asymmetry: f64,
}

/// Bracketing nodes and weight for linear interpolation on a grid.
pub(crate) fn locate(grid: &[f64], s: f64) -> (usize, usize, f64) {
    let last = grid.len() - 1;
    if s <= grid[0] {
        return (0, 0, 0.0);
    }
    if s >= grid[last] {
        return (last, last, 0.0);
    }
    let hi = grid.partition_point(|&t| t <= s);
    let lo = hi - 1;
    let w = (s - grid[lo]) / (grid[hi] - grid[lo]);
    if w == 0.0 {
        (lo, lo, 0.0)
    } else {
        (lo, hi, w)
    }
}

pub(crate) fn lerp(samples: &[DMatrix<f64>], (lo, hi, w): (usize, usize, f64)) -> DMatrix<f64> {
    if lo == hi {
        samples[lo].clone()
    } else {
        &samples[lo] * (1.0 - w) + &samples[hi] * w
    }
}

impl RiccatiTrajectory {
    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.grid[0]
    }

    pub fn t_end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    fn check(&self, s: f64) -> Result<()> {
        if !(s >= self.t0() && s <= self.t_end()) {
            return Err(Error::OutOfHorizon {
                s,
                t0: self.t0(),
                t_end: self.t_end(),
            });
        }
        Ok(())
    }

    pub fn kernels(&self, player: Player) -> &[DMatrix<f64>] {
        match player {
            Player::Leader => &self.p1,
            Player::Follower => &self.p2,
        }
    }

    pub fn rates(&self, player: Player) -> &[DMatrix<f64>] {
        match player {
            Player::Leader => &self.dp1,
            Player::Follower => &self.dp2,
        }
    }

    /// `P_i(s)`, linearly interpolated between nodes.
    pub fn kernel_at(&self, player: Player, s: f64) -> Result<DMatrix<f64>> {
        self.check(s)?;
        Ok(lerp(self.kernels(player), locate(&self.grid, s)))
    }

    /// `dP_i/ds` at `s`, interpolated from the node rates.
    pub fn rate_at(&self, player: Player, s: f64) -> Result<DMatrix<f64>> {
        self.check(s)?;
        Ok(lerp(self.rates(player), locate(&self.grid, s)))
    }

    pub fn all_solvable(&self) -> bool {
        self.solvable.iter().all(|&ok| ok)
    }
}

/// Uniform grid with the last node pinned to `t_end`.
pub(crate) fn uniform_grid(t0: f64, t_end: f64, steps: usize) -> Vec<f64> {
    let h = (t_end - t0) / steps as f64;
    let mut grid: Vec<f64> = (0..steps).map(|k| t0 + k as f64 * h).collect();
    grid.push(t_end);
    grid
}

/// Supplies the case system at a time, reusing it for constant games.
struct SystemSource<'a> {
    game: &'a GameSpec,
    tag: CaseTag,
    fixed: Option<System>,
}

impl<'a> SystemSource<'a> {
    fn new(game: &'a GameSpec, tag: CaseTag) -> Result<Self> {
        let fixed = if game.is_time_invariant() {
            Some(System::new(&game.snapshot_clamped(game.horizon.t_end()), tag)?)
        } else {
            None
        };
        Ok(SystemSource { game, tag, fixed })
    }

    fn rates(&self, s: f64, p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<Rates> {
        let located = |e: Error| match e {
            Error::ConditionViolation { condition, margin, .. } => Error::ConditionViolation { condition, s, margin },
            other => other,
        };
        match &self.fixed {
            Some(sys) => sys.rates(p1, p2).map_err(located),
            None => System::new(&self.game.snapshot_clamped(s), self.tag)?.rates(p1, p2),
        }
    }
}

fn blow_up_check(p1: &DMatrix<f64>, p2: &DMatrix<f64>, s: f64) -> Result<()> {
    for (what, p) in [("P1", p1), ("P2", p2)] {
        if !all_finite(p) || max_abs(p) > BLOW_UP_THRESHOLD {
            return Err(Error::BlowUp { what: what.into(), s });
        }
    }
    Ok(())
}

/// Integrates the kernels of `tag` backward from `P_i(T) = L_i` with `steps`
/// fixed steps, in reversed time `r = T - s`.
///
/// Every stage is symmetrized. Integration halts with
/// [`Error::ConditionViolation`] at the first time a positivity condition
/// fails and with [`Error::BlowUp`] when an entry exceeds
/// [`BLOW_UP_THRESHOLD`].
pub fn solve_backward(game: &GameSpec, tag: CaseTag, steps: usize, method: Method) -> Result<RiccatiTrajectory> {
    let violations = case_preconditions(game, tag);
    if !violations.is_empty() {
        return Err(Error::CasePreconditions(violations));
    }
    if steps < MIN_STEPS {
        return Err(Error::Config(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    let source = SystemSource::new(game, tag)?;
    let grid = uniform_grid(game.horizon.t0(), game.horizon.t_end(), steps);
    let h = (game.horizon.t_end() - game.horizon.t0()) / steps as f64;

    let n_nodes = steps + 1;
    let mut p1s = Vec::with_capacity(n_nodes);
    let mut p2s = Vec::with_capacity(n_nodes);
    let mut dp1s = Vec::with_capacity(n_nodes);
    let mut dp2s = Vec::with_capacity(n_nodes);
    let mut margins = Vec::with_capacity(n_nodes);
    let mut max_asymmetry = 0.0f64;

    let mut p1 = game.leader_cost().l.clone();
    let mut p2 = game.follower_cost().l.clone();
    // Walk nodes from T down to t0; stored reversed and flipped at the end.
    for k in (0..=steps).rev() {
        let s = grid[k];
        let here = source.rates(s, &p1, &p2)?;
        max_asymmetry = max_asymmetry.max(here.asymmetry);
        if k > 0 {
            let s_next = grid[k - 1];
            let (n1, n2) = match method {
                Method::Euler => (symmetrize(&(&p1 - &here.dp1 * h)), symmetrize(&(&p2 - &here.dp2 * h))),
                Method::Rk4 => {
                    // dP/dr = -dP/ds; stages at s, s - h/2, s - h/2, s - h.
                    let s_mid = s - 0.5 * h;
                    let stage = |sa: f64, a1: &DMatrix<f64>, a2: &DMatrix<f64>| source.rates(sa, a1, a2);
                    let k1 = &here;
                    let y1 = symmetrize(&(&p1 - &k1.dp1 * (0.5 * h)));
                    let y2 = symmetrize(&(&p2 - &k1.dp2 * (0.5 * h)));
                    let k2 = stage(s_mid, &y1, &y2)?;
                    let y1 = symmetrize(&(&p1 - &k2.dp1 * (0.5 * h)));
                    let y2 = symmetrize(&(&p2 - &k2.dp2 * (0.5 * h)));
                    let k3 = stage(s_mid, &y1, &y2)?;
                    let y1 = symmetrize(&(&p1 - &k3.dp1 * h));
                    let y2 = symmetrize(&(&p2 - &k3.dp2 * h));
                    let k4 = stage(s_next, &y1, &y2)?;
                    for k in [&k2, &k3, &k4] {
                        max_asymmetry = max_asymmetry.max(k.asymmetry);
                    }
                    let w = h / 6.0;
                    (
                        symmetrize(&(&p1 - (&k1.dp1 + &k2.dp1 * 2.0 + &k3.dp1 * 2.0 + &k4.dp1) * w)),
                        symmetrize(&(&p2 - (&k1.dp2 + &k2.dp2 * 2.0 + &k3.dp2 * 2.0 + &k4.dp2) * w)),
                    )
                }
            };
            blow_up_check(&n1, &n2, s_next)?;
            p1s.push(std::mem::replace(&mut p1, n1));
            p2s.push(std::mem::replace(&mut p2, n2));
        } else {
            p1s.push(p1.clone());
            p2s.push(p2.clone());
        }
        dp1s.push(here.dp1);
        dp2s.push(here.dp2);
        margins.push(here.margins);
    }
    for v in [&mut p1s, &mut p2s, &mut dp1s, &mut dp2s] {
        v.reverse();
    }
    margins.reverse();
    let solvable = margins.iter().map(Margins::ok).collect();
    log::debug!("{tag} {method} K={steps}: max pre-symmetrization asymmetry {max_asymmetry:e}");
    Ok(RiccatiTrajectory {
        tag,
        method,
        grid,
        p1: p1s,
        p2: p2s,
        dp1: dp1s,
        dp2: dp2s,
        margins,
        solvable,
        max_asymmetry,
    })
}

/// Per-node positivity margins plus the sufficient conditions under which
/// the standard Riccati sub-equations of a case are globally solvable.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvabilityReport {
    pub grid: Vec<f64>,
    pub margins: Vec<Margins>,
    pub ok: Vec<bool>,
    pub all_ok: bool,
    /// Named sufficient conditions (uniformly positive control weight,
    /// nonnegative state and terminal weights). Empty for
    /// [`CaseTag::Case1General`], which has no such result.
    pub sufficient_conditions: Vec<(String, bool)>,
}

impl SolvabilityReport {
    /// Whether all sufficient conditions hold; `None` when there are none.
    pub fn sufficient(&self) -> Option<bool> {
        if self.sufficient_conditions.is_empty() {
            None
        } else {
            Some(self.sufficient_conditions.iter().all(|(_, ok)| *ok))
        }
    }
}

fn margins_at(snap: &CoefficientSnapshot, tag: CaseTag, p2: &DMatrix<f64>) -> Margins {
    let c1 = snap.leader_cost();
    let c2 = snap.follower_cost();
    match tag {
        CaseTag::Case1General => {
            let follower = min_eigenvalue(&c2.r22);
            let leader = match SpdFactor::new(&c2.r22) {
                Ok(r) => {
                    let cross = &c2.r12 * r.solve(&c1.r12.transpose());
                    min_eigenvalue(&(&c1.r11 - &cross - cross.transpose()))
                }
                Err(_) => f64::NAN,
            };
            Margins { follower, leader }
        }
        CaseTag::Case1Reduced => Margins {
            follower: min_eigenvalue(&c2.r22),
            leader: min_eigenvalue(&c1.r11),
        },
        CaseTag::Case2 => Margins {
            follower: min_eigenvalue(&(snap.dynamics.d2.transpose() * p2 * &snap.dynamics.d2 + &c2.r22)),
            leader: min_eigenvalue(&c1.r11),
        },
    }
}

/// Tolerance for calling a weight positive semidefinite.
const PSD_TOL: f64 = 1e-12;

pub fn check_solvability(traj: &RiccatiTrajectory, game: &GameSpec, tag: CaseTag) -> SolvabilityReport {
    let snaps: Vec<CoefficientSnapshot> = traj.grid.iter().map(|&s| game.snapshot_clamped(s)).collect();
    let margins: Vec<Margins> = snaps
        .iter()
        .zip(&traj.p2)
        .map(|(snap, p2)| margins_at(snap, tag, p2))
        .collect();
    let ok: Vec<bool> = margins.iter().map(Margins::ok).collect();

    let uniformly_pd = |pick: &dyn Fn(&CoefficientSnapshot) -> DMatrix<f64>| {
        snaps.iter().map(|s| min_eigenvalue(&pick(s))).fold(f64::INFINITY, f64::min) > PD_THRESHOLD
    };
    let psd = |pick: &dyn Fn(&CoefficientSnapshot) -> DMatrix<f64>| {
        snaps.iter().all(|s| min_eigenvalue(&pick(s)) >= -PSD_TOL)
    };
    let l_psd = |player: Player| min_eigenvalue(&game.cost[player.index()].l) >= -PSD_TOL;

    let mut sufficient_conditions = Vec::new();
    let mut push = |name: &str, holds: bool| sufficient_conditions.push((name.to_string(), holds));
    match tag {
        CaseTag::Case1General => {}
        CaseTag::Case1Reduced => {
            push("cost2.R22 uniformly positive definite", uniformly_pd(&|s| s.follower_cost().r22.clone()));
            push("cost2.Q positive semidefinite", psd(&|s| s.follower_cost().q.clone()));
            push("cost2.L positive semidefinite", l_psd(Player::Follower));
            push("cost1.R11 positive definite", uniformly_pd(&|s| s.leader_cost().r11.clone()));
        }
        CaseTag::Case2 => {
            push("cost1.R11 uniformly positive definite", uniformly_pd(&|s| s.leader_cost().r11.clone()));
            push("cost1.Q positive semidefinite", psd(&|s| s.leader_cost().q.clone()));
            push("cost1.L positive semidefinite", l_psd(Player::Leader));
            push("cost2.R22 uniformly positive definite", uniformly_pd(&|s| s.follower_cost().r22.clone()));
            push("cost2.Q positive semidefinite", psd(&|s| s.follower_cost().q.clone()));
            push("cost2.L positive semidefinite", l_psd(Player::Follower));
        }
    }
    SolvabilityReport {
        grid: traj.grid.clone(),
        all_ok: ok.iter().all(|&b| b),
        margins,
        ok,
        sufficient_conditions,
    }
}
