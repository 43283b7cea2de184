//! Linear-quadratic game data: dimensions, horizon, dynamics and cost
//! coefficients, validation, and evaluation of every coefficient at a time.
//!
//! The state follows
//!
//! ```text
//! dx = (A x + B1 u + B2 v + b) ds + (C x + D1 u + D2 v + λ) dW,   W scalar
//! ```
//!
//! and player `i` pays
//!
//! ```text
//! J_i = ½ E { ∫ [xᵀQx + 2uᵀM1x + 2vᵀM2x + uᵀR11u + 2uᵀR12v + vᵀR22v
//!               + 2qᵀx + 2ρ1ᵀu + 2ρ2ᵀv] ds + xᵀ(T) L x(T) + 2Nᵀx(T) }.
//! ```
//!
//! Coefficients are either constants or piecewise-linear tables over the
//! horizon. Control sets are the full Euclidean spaces.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, bilinear, symmetrize, SYMMETRY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    t0: f64,
    t_end: f64,
}

impl Horizon {
    pub fn new(t0: f64, t_end: f64) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite()) {
            return Err(Error::NonFinite {
                what: "horizon".into(),
            });
        }
        if t0 >= t_end {
            return Err(Error::Horizon { t0, t_end });
        }
        Ok(Horizon { t0, t_end })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> f64 {
        self.t_end - self.t0
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.t0 && s <= self.t_end
    }

    pub fn check(&self, s: f64) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::OutOfHorizon {
                s,
                t0: self.t0,
                t_end: self.t_end,
            })
        }
    }
}

/// The two players. The leader moves first at every instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Leader,
    Follower,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::Leader => 0,
            Player::Follower => 1,
        }
    }

    /// 1 for the leader, 2 for the follower.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Player::Leader => "leader",
            Player::Follower => "follower",
        }
    }

    pub const BOTH: [Player; 2] = [Player::Leader, Player::Follower];
}

/// A matrix-valued coefficient: constant, or sampled and linearly
/// interpolated in time.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(DMatrix<f64>),
    Table {
        times: Vec<f64>,
        values: Vec<DMatrix<f64>>,
    },
}

impl Coefficient {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Coefficient::Constant(DMatrix::zeros(rows, cols))
    }

    /// Column vector constant.
    pub fn vector(entries: &[f64]) -> Self {
        Coefficient::Constant(DMatrix::from_column_slice(entries.len(), 1, entries))
    }

    pub fn matrix(rows: usize, cols: usize, row_major: &[f64]) -> Self {
        Coefficient::Constant(DMatrix::from_row_slice(rows, cols, row_major))
    }

    pub fn table(times: Vec<f64>, values: Vec<DMatrix<f64>>) -> Self {
        Coefficient::Table { times, values }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Coefficient::Constant(m) => m.shape(),
            Coefficient::Table { values, .. } => values.first().map_or((0, 0), |m| m.shape()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }

    /// True when the coefficient vanishes identically (every sample exactly 0).
    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Constant(m) => m.iter().all(|&v| v == 0.0),
            Coefficient::Table { values, .. } => {
                values.iter().all(|m| m.iter().all(|&v| v == 0.0))
            }
        }
    }

    /// Value at `s`; tables are clamped at their ends.
    pub fn at(&self, s: f64) -> DMatrix<f64> {
        match self {
            Coefficient::Constant(m) => m.clone(),
            Coefficient::Table { times, values } => {
                let last = times.len() - 1;
                if s <= times[0] {
                    return values[0].clone();
                }
                if s >= times[last] {
                    return values[last].clone();
                }
                let hi = times.partition_point(|&t| t <= s);
                let lo = hi - 1;
                if times[lo] == s {
                    return values[lo].clone();
                }
                let w = (s - times[lo]) / (times[hi] - times[lo]);
                &values[lo] * (1.0 - w) + &values[hi] * w
            }
        }
    }

    fn map(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Coefficient {
        match self {
            Coefficient::Constant(m) => Coefficient::Constant(f(m)),
            Coefficient::Table { times, values } => Coefficient::Table {
                times: times.clone(),
                values: values.iter().map(f).collect(),
            },
        }
    }

    fn samples(&self) -> Box<dyn Iterator<Item = &DMatrix<f64>> + '_> {
        match self {
            Coefficient::Constant(m) => Box::new(std::iter::once(m)),
            Coefficient::Table { values, .. } => Box::new(values.iter()),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Constant(DMatrix::from_element(1, 1, v))
    }
}

impl From<DMatrix<f64>> for Coefficient {
    fn from(m: DMatrix<f64>) -> Self {
        Coefficient::Constant(m)
    }
}

impl From<DVector<f64>> for Coefficient {
    fn from(v: DVector<f64>) -> Self {
        let n = v.len();
        Coefficient::Constant(DMatrix::from_column_slice(n, 1, v.as_slice()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsCoeffs {
    pub a: Coefficient,
    pub b1: Coefficient,
    pub b2: Coefficient,
    pub c: Coefficient,
    pub d1: Coefficient,
    pub d2: Coefficient,
    pub b: Coefficient,
    pub lambda: Coefficient,
}

/// Cost weights of one player. `R21` is not stored; it is `R12ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostCoeffs {
    pub q: Coefficient,
    pub m1: Coefficient,
    pub m2: Coefficient,
    pub r11: Coefficient,
    pub r12: Coefficient,
    pub r22: Coefficient,
    pub q_vec: Coefficient,
    pub rho1: Coefficient,
    pub rho2: Coefficient,
    pub l: DMatrix<f64>,
    pub n_vec: DVector<f64>,
}

impl CostCoeffs {
    /// Terminal cost `½ xᵀ L x + Nᵀ x`.
    pub fn terminal(&self, x: &DVector<f64>) -> f64 {
        0.5 * bilinear(x, &self.l, x) + self.n_vec.dot(x)
    }
}

/// A validated linear-quadratic game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub dims: Dims,
    pub horizon: Horizon,
    pub dynamics: DynamicsCoeffs,
    pub cost: [CostCoeffs; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSnapshot {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lambda: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSnapshot {
    pub q: DMatrix<f64>,
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub r11: DMatrix<f64>,
    pub r12: DMatrix<f64>,
    pub r21: DMatrix<f64>,
    pub r22: DMatrix<f64>,
    pub q_vec: DVector<f64>,
    pub rho1: DVector<f64>,
    pub rho2: DVector<f64>,
    pub l: DMatrix<f64>,
    pub n_vec: DVector<f64>,
}

/// Every coefficient of a game evaluated at one time `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSnapshot {
    pub s: f64,
    pub dims: Dims,
    pub dynamics: DynamicsSnapshot,
    pub cost: [CostSnapshot; 2],
}

impl CoefficientSnapshot {
    pub fn cost(&self, player: Player) -> &CostSnapshot {
        &self.cost[player.index()]
    }

    pub fn leader_cost(&self) -> &CostSnapshot {
        &self.cost[0]
    }

    pub fn follower_cost(&self) -> &CostSnapshot {
        &self.cost[1]
    }

    /// Drift `A x + B1 u + B2 v + b`.
    pub fn drift(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let d = &self.dynamics;
        &d.a * x + &d.b1 * u + &d.b2 * v + &d.b
    }

    /// Diffusion `C x + D1 u + D2 v + λ` (scalar Brownian motion).
    pub fn diffusion(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let d = &self.dynamics;
        &d.c * x + &d.d1 * u + &d.d2 * v + &d.lambda
    }
}

fn to_vector(m: DMatrix<f64>) -> DVector<f64> {
    let n = m.len();
    DVector::from_column_slice(&m.as_slice()[..n])
}

impl CostSnapshot {
    /// Running cost integrand `g` at `(x, u, v)`.
    pub fn running(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        0.5 * (bilinear(x, &self.q, x)
            + 2.0 * bilinear(u, &self.m1, x)
            + 2.0 * bilinear(v, &self.m2, x)
            + bilinear(u, &self.r11, u)
            + 2.0 * bilinear(u, &self.r12, v)
            + bilinear(v, &self.r22, v))
            + self.q_vec.dot(x)
            + self.rho1.dot(u)
            + self.rho2.dot(v)
    }

    /// Terminal cost `½ xᵀ L x + Nᵀ x`.
    pub fn terminal(&self, x: &DVector<f64>) -> f64 {
        0.5 * bilinear(x, &self.l, x) + self.n_vec.dot(x)
    }
}

impl GameSpec {
    /// Unvalidated form holding every coefficient that is not identically
    /// zero. Validating it gives back an equal game.
    pub fn to_raw(&self) -> RawGame {
        let mut raw = RawGame::new(self.dims.n, self.dims.m1, self.dims.m2, self.horizon.t0(), self.horizon.t_end());
        let d = &self.dynamics;
        for (key, c) in [
            ("A", &d.a),
            ("B1", &d.b1),
            ("B2", &d.b2),
            ("C", &d.c),
            ("D1", &d.d1),
            ("D2", &d.d2),
            ("b", &d.b),
            ("lambda", &d.lambda),
        ] {
            if !c.is_zero() {
                raw.dynamics.insert(key.into(), c.clone());
            }
        }
        for (cost, map) in self.cost.iter().zip([&mut raw.cost1, &mut raw.cost2]) {
            let l = Coefficient::Constant(cost.l.clone());
            let n_vec = Coefficient::from(cost.n_vec.clone());
            for (key, c) in [
                ("Q", &cost.q),
                ("M1", &cost.m1),
                ("M2", &cost.m2),
                ("R11", &cost.r11),
                ("R12", &cost.r12),
                ("R22", &cost.r22),
                ("q", &cost.q_vec),
                ("rho1", &cost.rho1),
                ("rho2", &cost.rho2),
                ("L", &l),
                ("N", &n_vec),
            ] {
                if !c.is_zero() {
                    map.insert(key.into(), c.clone());
                }
            }
        }
        raw
    }

    pub fn leader_cost(&self) -> &CostCoeffs {
        &self.cost[0]
    }

    pub fn follower_cost(&self) -> &CostCoeffs {
        &self.cost[1]
    }

    /// True when no coefficient is a table.
    pub fn is_time_invariant(&self) -> bool {
        let d = &self.dynamics;
        [&d.a, &d.b1, &d.b2, &d.c, &d.d1, &d.d2, &d.b, &d.lambda]
            .iter()
            .all(|c| c.is_constant())
            && self.cost.iter().all(|c| {
                [&c.q, &c.m1, &c.m2, &c.r11, &c.r12, &c.r22, &c.q_vec, &c.rho1, &c.rho2]
                    .iter()
                    .all(|k| k.is_constant())
            })
    }

    /// All coefficients at `s`, which must lie in the horizon.
    pub fn snapshot(&self, s: f64) -> Result<CoefficientSnapshot> {
        self.horizon.check(s)?;
        Ok(self.snapshot_clamped(s))
    }

    /// Like [`GameSpec::snapshot`] but clamps `s` into the horizon; used by
    /// integrators whose stage times can round just past an endpoint.
    pub(crate) fn snapshot_clamped(&self, s: f64) -> CoefficientSnapshot {
        let s = s.clamp(self.horizon.t0, self.horizon.t_end);
        let d = &self.dynamics;
        let cost = |c: &CostCoeffs| {
            let r12 = c.r12.at(s);
            CostSnapshot {
                q: c.q.at(s),
                m1: c.m1.at(s),
                m2: c.m2.at(s),
                r11: c.r11.at(s),
                r21: r12.transpose(),
                r12,
                r22: c.r22.at(s),
                q_vec: to_vector(c.q_vec.at(s)),
                rho1: to_vector(c.rho1.at(s)),
                rho2: to_vector(c.rho2.at(s)),
                l: c.l.clone(),
                n_vec: c.n_vec.clone(),
            }
        };
        CoefficientSnapshot {
            s,
            dims: self.dims,
            dynamics: DynamicsSnapshot {
                a: d.a.at(s),
                b1: d.b1.at(s),
                b2: d.b2.at(s),
                c: d.c.at(s),
                d1: d.d1.at(s),
                d2: d.d2.at(s),
                b: to_vector(d.b.at(s)),
                lambda: to_vector(d.lambda.at(s)),
            },
            cost: [cost(&self.cost[0]), cost(&self.cost[1])],
        }
    }
}

/// Dynamics coefficient names accepted in game data.
pub const DYNAMICS_KEYS: [&str; 8] = ["A", "B1", "B2", "C", "D1", "D2", "b", "lambda"];

/// Cost coefficient names accepted in game data.
pub const COST_KEYS: [&str; 12] = [
    "Q", "M1", "M2", "R11", "R12", "R21", "R22", "q", "rho1", "rho2", "L", "N",
];

/// Expected `(rows, cols)` of a named coefficient; vectors are columns.
pub fn coefficient_shape(dims: Dims, key: &str) -> Option<(usize, usize)> {
    let Dims { n, m1, m2 } = dims;
    Some(match key {
        "A" | "C" | "Q" | "L" => (n, n),
        "B1" | "D1" => (n, m1),
        "B2" | "D2" => (n, m2),
        "b" | "lambda" | "q" | "N" => (n, 1),
        "M1" => (m1, n),
        "M2" => (m2, n),
        "R11" => (m1, m1),
        "R12" => (m1, m2),
        "R21" => (m2, m1),
        "R22" => (m2, m2),
        "rho1" => (m1, 1),
        "rho2" => (m2, 1),
        _ => return None,
    })
}

/// Unvalidated game data, keyed by coefficient name. Missing coefficients
/// are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawGame {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub t0: f64,
    pub t_end: f64,
    pub dynamics: BTreeMap<String, Coefficient>,
    pub cost1: BTreeMap<String, Coefficient>,
    pub cost2: BTreeMap<String, Coefficient>,
}

impl RawGame {
    pub fn new(n: usize, m1: usize, m2: usize, t0: f64, t_end: f64) -> Self {
        RawGame {
            n,
            m1,
            m2,
            t0,
            t_end,
            ..Default::default()
        }
    }

    pub fn dynamics(mut self, key: &str, value: impl Into<Coefficient>) -> Self {
        self.dynamics.insert(key.to_string(), value.into());
        self
    }

    pub fn cost1(mut self, key: &str, value: impl Into<Coefficient>) -> Self {
        self.cost1.insert(key.to_string(), value.into());
        self
    }

    pub fn cost2(mut self, key: &str, value: impl Into<Coefficient>) -> Self {
        self.cost2.insert(key.to_string(), value.into());
        self
    }

    pub fn validate(&self) -> Result<GameSpec> {
        validate_game(self)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Matrix,
    Vector,
    Symmetric,
}

struct Checker<'a> {
    raw: &'a RawGame,
}

impl Checker<'_> {
    fn get(
        &self,
        map: &BTreeMap<String, Coefficient>,
        section: &str,
        key: &str,
        rows: usize,
        cols: usize,
        kind: Kind,
    ) -> Result<Coefficient> {
        let what = format!("{section}.{key}");
        let Some(coeff) = map.get(key) else {
            return Ok(Coefficient::zeros(rows, cols));
        };
        if let Coefficient::Table { times, values } = coeff {
            self.check_table(&what, times, values)?;
        }
        let mut coeff = coeff.clone();
        // Vectors may be written as rows.
        if kind == Kind::Vector && coeff.shape() == (1, rows) && rows != 1 {
            coeff = coeff.map(|m| m.transpose());
        }
        for m in coeff.samples() {
            if m.shape() != (rows, cols) {
                return Err(Error::dims(what, (rows, cols), m.shape()));
            }
            if !m.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { what });
            }
        }
        if kind == Kind::Symmetric {
            for m in coeff.samples() {
                let gap = asymmetry(m);
                if gap > SYMMETRY_TOL {
                    return Err(Error::Asymmetry {
                        what,
                        asymmetry: gap,
                    });
                }
            }
            coeff = coeff.map(symmetrize);
        }
        Ok(coeff)
    }

    fn check_table(&self, what: &str, times: &[f64], values: &[DMatrix<f64>]) -> Result<()> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidSpec(format!(
                "{what}: table needs matching non-empty times ({}) and values ({})",
                times.len(),
                values.len()
            )));
        }
        if !times.iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("{what}.times"),
            });
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec(format!(
                "{what}: table times must be strictly increasing"
            )));
        }
        if times[0] > self.raw.t0 || times[times.len() - 1] < self.raw.t_end {
            return Err(Error::InvalidSpec(format!(
                "{what}: table must cover the horizon [{}, {}]",
                self.raw.t0, self.raw.t_end
            )));
        }
        let shape = values[0].shape();
        if let Some(bad) = values.iter().find(|m| m.shape() != shape) {
            return Err(Error::dims(what, shape, bad.shape()));
        }
        Ok(())
    }

    fn constant(&self, coeff: Coefficient, what: &str) -> Result<DMatrix<f64>> {
        match coeff {
            Coefficient::Constant(m) => Ok(m),
            Coefficient::Table { .. } => Err(Error::InvalidSpec(format!(
                "{what}: terminal weights must be constant"
            ))),
        }
    }

    fn cost(&self, map: &BTreeMap<String, Coefficient>, section: &str) -> Result<CostCoeffs> {
        let Dims { n, m1, m2 } = Dims {
            n: self.raw.n,
            m1: self.raw.m1,
            m2: self.raw.m2,
        };
        for key in map.keys() {
            if !COST_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidSpec(format!("unknown coefficient {section}.{key}")));
            }
        }
        let r12 = self.get(map, section, "R12", m1, m2, Kind::Matrix)?;
        if map.contains_key("R21") {
            let r21 = self.get(map, section, "R21", m2, m1, Kind::Matrix)?;
            let consistent = match (&r12, &r21) {
                (Coefficient::Constant(a), Coefficient::Constant(b)) => {
                    Some(crate::linalg::max_abs(&(a.transpose() - b)))
                }
                (
                    Coefficient::Table { times: ta, values: va },
                    Coefficient::Table { times: tb, values: vb },
                ) if ta == tb => Some(
                    va.iter()
                        .zip(vb)
                        .map(|(a, b)| crate::linalg::max_abs(&(a.transpose() - b)))
                        .fold(0.0, f64::max),
                ),
                _ => None,
            };
            match consistent {
                Some(gap) if gap <= SYMMETRY_TOL => {}
                Some(gap) => {
                    return Err(Error::Asymmetry {
                        what: format!("{section}.R21 vs {section}.R12ᵀ"),
                        asymmetry: gap,
                    })
                }
                None => {
                    return Err(Error::InvalidSpec(format!(
                        "{section}.R21 must be given on the same time grid as R12"
                    )))
                }
            }
        }
        let l = self.get(map, section, "L", n, n, Kind::Symmetric)?;
        let n_vec = self.get(map, section, "N", n, 1, Kind::Vector)?;
        Ok(CostCoeffs {
            q: self.get(map, section, "Q", n, n, Kind::Symmetric)?,
            m1: self.get(map, section, "M1", m1, n, Kind::Matrix)?,
            m2: self.get(map, section, "M2", m2, n, Kind::Matrix)?,
            r11: self.get(map, section, "R11", m1, m1, Kind::Symmetric)?,
            r12,
            r22: self.get(map, section, "R22", m2, m2, Kind::Symmetric)?,
            q_vec: self.get(map, section, "q", n, 1, Kind::Vector)?,
            rho1: self.get(map, section, "rho1", m1, 1, Kind::Vector)?,
            rho2: self.get(map, section, "rho2", m2, 1, Kind::Vector)?,
            l: self.constant(l, &format!("{section}.L"))?,
            n_vec: to_vector(self.constant(n_vec, &format!("{section}.N"))?),
        })
    }
}

/// Checks shapes, finiteness, symmetry and the horizon, symmetrizing the
/// symmetric weights (`Q`, `R11`, `R22`, `L`) whose asymmetry is within
/// `1e-12`.
pub fn validate_game(raw: &RawGame) -> Result<GameSpec> {
    if raw.n == 0 || raw.m1 == 0 || raw.m2 == 0 {
        return Err(Error::InvalidSpec(format!(
            "dimensions must be positive (n = {}, m1 = {}, m2 = {})",
            raw.n, raw.m1, raw.m2
        )));
    }
    let horizon = Horizon::new(raw.t0, raw.t_end)?;
    let dims = Dims {
        n: raw.n,
        m1: raw.m1,
        m2: raw.m2,
    };
    for key in raw.dynamics.keys() {
        if !DYNAMICS_KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidSpec(format!("unknown coefficient dynamics.{key}")));
        }
    }
    let ck = Checker { raw };
    let dy = &raw.dynamics;
    let (n, m1, m2) = (dims.n, dims.m1, dims.m2);
    let dynamics = DynamicsCoeffs {
        a: ck.get(dy, "dynamics", "A", n, n, Kind::Matrix)?,
        b1: ck.get(dy, "dynamics", "B1", n, m1, Kind::Matrix)?,
        b2: ck.get(dy, "dynamics", "B2", n, m2, Kind::Matrix)?,
        c: ck.get(dy, "dynamics", "C", n, n, Kind::Matrix)?,
        d1: ck.get(dy, "dynamics", "D1", n, m1, Kind::Matrix)?,
        d2: ck.get(dy, "dynamics", "D2", n, m2, Kind::Matrix)?,
        b: ck.get(dy, "dynamics", "b", n, 1, Kind::Vector)?,
        lambda: ck.get(dy, "dynamics", "lambda", n, 1, Kind::Vector)?,
    };
    let cost = [ck.cost(&raw.cost1, "cost1")?, ck.cost(&raw.cost2, "cost2")?];
    Ok(GameSpec {
        dims,
        horizon,
        dynamics,
        cost,
    })
}
