//! Euler–Maruyama Monte Carlo of the closed-loop state and both players'
//! costs.
//!
//! Every path draws its noise from its own ChaCha8 stream (`seed` is the
//! key, the path index the stream id) and consumes exactly two 64-bit words
//! per step, so step `k` of path `p` always sees the same normal variate no
//! matter how many paths run or in which order. Two runs that differ only
//! in the strategies therefore share their noise, which is what makes cost
//! differences cheap to estimate.
//!
//! Per-path results are combined by pairwise summation in path order, so
//! the output does not depend on thread scheduling.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::equilibrium::{value, FeedbackStrategy};
use crate::error::{Error, Result};
use crate::model::{CoefficientSnapshot, GameSpec, Player};
use crate::riccati::RiccatiTrajectory;

/// Path components beyond this magnitude abort the run.
pub const PATH_BLOW_UP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub initial_state: DVector<f64>,
    pub start_time: f64,
    /// Number of leading paths whose samples are kept.
    pub stored_paths: usize,
    /// Keep every `store_every`-th step of stored paths (the last step is
    /// always kept).
    pub store_every: usize,
}

impl SimConfig {
    pub fn new(initial_state: DVector<f64>, start_time: f64, n_paths: usize, n_steps: usize, seed: u64) -> Self {
        SimConfig {
            n_paths,
            n_steps,
            seed,
            initial_state,
            start_time,
            stored_paths: 0,
            store_every: 1,
        }
    }

    pub fn with_stored_paths(mut self, paths: usize, every: usize) -> Self {
        self.stored_paths = paths;
        self.store_every = every.max(1);
        self
    }
}

/// One stored sample of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub path: usize,
    pub s: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub j1_mean: f64,
    pub j1_stderr: f64,
    pub j2_mean: f64,
    pub j2_stderr: f64,
    pub terminal_state_mean: DVector<f64>,
    pub paths_stored: Option<Vec<PathSample>>,
}

impl SimulationResult {
    pub fn mean(&self, player: Player) -> f64 {
        match player {
            Player::Leader => self.j1_mean,
            Player::Follower => self.j2_mean,
        }
    }

    pub fn stderr(&self, player: Player) -> f64 {
        match player {
            Player::Leader => self.j1_stderr,
            Player::Follower => self.j2_stderr,
        }
    }
}

/// Per-path realized costs, indexed by path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCosts {
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    /// Terminal states, path-major.
    pub terminal: Vec<f64>,
    pub n: usize,
    pub stored: Vec<PathSample>,
}

impl PathCosts {
    pub fn costs(&self, player: Player) -> &[f64] {
        match player {
            Player::Leader => &self.j1,
            Player::Follower => &self.j2,
        }
    }

    pub fn summary(self, keep_paths: bool) -> SimulationResult {
        let (j1_mean, j1_stderr) = mean_stderr(&self.j1);
        let (j2_mean, j2_stderr) = mean_stderr(&self.j2);
        let paths = self.j1.len();
        let terminal_state_mean = DVector::from_iterator(
            self.n,
            (0..self.n).map(|i| {
                let column: Vec<f64> = (0..paths).map(|p| self.terminal[p * self.n + i]).collect();
                pairwise_sum(&column) / paths as f64
            }),
        );
        SimulationResult {
            j1_mean,
            j1_stderr,
            j2_mean,
            j2_stderr,
            terminal_state_mean,
            paths_stored: keep_paths.then_some(self.stored),
        }
    }
}

/// Sum by recursive halving; the result depends only on the slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and standard error of the mean (zero for a single sample).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Closed-loop coefficients for every step, stored flat.
///
/// With `z = [x; u; v] = Z x + z0`, the drift is `Fc x + fc`, the diffusion
/// `Sc x + sc` and player `i`'s running cost `½ xᵀ Hi x + hiᵀ x + ci`.
struct StepTables {
    n: usize,
    d: usize,
    fc: Vec<f64>,
    fconst: Vec<f64>,
    sc: Vec<f64>,
    sconst: Vec<f64>,
    h: [Vec<f64>; 2],
    hlin: [Vec<f64>; 2],
    hconst: [Vec<f64>; 2],
    z: Vec<f64>,
    z0: Vec<f64>,
}

fn push_row_major(out: &mut Vec<f64>, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
}

/// `[A B1 B2]`, `[C D1 D2]` and the stacked cost weights of both players.
struct Stacked {
    f: DMatrix<f64>,
    b: DVector<f64>,
    s: DMatrix<f64>,
    lambda: DVector<f64>,
    g: [DMatrix<f64>; 2],
    glin: [DVector<f64>; 2],
}

impl Stacked {
    fn new(snap: &CoefficientSnapshot) -> Self {
        let dy = &snap.dynamics;
        let (n, m1, m2) = (snap.dims.n, snap.dims.m1, snap.dims.m2);
        let d = n + m1 + m2;
        let mut f = DMatrix::zeros(n, d);
        f.view_mut((0, 0), (n, n)).copy_from(&dy.a);
        f.view_mut((0, n), (n, m1)).copy_from(&dy.b1);
        f.view_mut((0, n + m1), (n, m2)).copy_from(&dy.b2);
        let mut s = DMatrix::zeros(n, d);
        s.view_mut((0, 0), (n, n)).copy_from(&dy.c);
        s.view_mut((0, n), (n, m1)).copy_from(&dy.d1);
        s.view_mut((0, n + m1), (n, m2)).copy_from(&dy.d2);
        let cost = |player: Player| {
            let c = snap.cost(player);
            let mut g = DMatrix::zeros(d, d);
            g.view_mut((0, 0), (n, n)).copy_from(&c.q);
            g.view_mut((n, 0), (m1, n)).copy_from(&c.m1);
            g.view_mut((0, n), (n, m1)).copy_from(&c.m1.transpose());
            g.view_mut((n + m1, 0), (m2, n)).copy_from(&c.m2);
            g.view_mut((0, n + m1), (n, m2)).copy_from(&c.m2.transpose());
            g.view_mut((n, n), (m1, m1)).copy_from(&c.r11);
            g.view_mut((n, n + m1), (m1, m2)).copy_from(&c.r12);
            g.view_mut((n + m1, n), (m2, m1)).copy_from(&c.r21);
            g.view_mut((n + m1, n + m1), (m2, m2)).copy_from(&c.r22);
            let mut lin = DVector::zeros(d);
            lin.rows_mut(0, n).copy_from(&c.q_vec);
            lin.rows_mut(n, m1).copy_from(&c.rho1);
            lin.rows_mut(n + m1, m2).copy_from(&c.rho2);
            (g, lin)
        };
        let (g1, l1) = cost(Player::Leader);
        let (g2, l2) = cost(Player::Follower);
        Stacked {
            f,
            b: dy.b.clone(),
            s,
            lambda: dy.lambda.clone(),
            g: [g1, g2],
            glin: [l1, l2],
        }
    }
}

impl StepTables {
    fn build(
        game: &GameSpec,
        leader: &FeedbackStrategy,
        follower: &FeedbackStrategy,
        start: f64,
        h: f64,
        steps: usize,
    ) -> Result<Self> {
        let dims = game.dims;
        let (n, m1, m2) = (dims.n, dims.m1, dims.m2);
        let d = n + m1 + m2;
        let mut t = StepTables {
            n,
            d,
            fc: Vec::with_capacity(steps * n * n),
            fconst: Vec::with_capacity(steps * n),
            sc: Vec::with_capacity(steps * n * n),
            sconst: Vec::with_capacity(steps * n),
            h: [Vec::with_capacity(steps * n * n), Vec::with_capacity(steps * n * n)],
            hlin: [Vec::with_capacity(steps * n), Vec::with_capacity(steps * n)],
            hconst: [Vec::with_capacity(steps), Vec::with_capacity(steps)],
            z: Vec::with_capacity(steps * d * n),
            z0: Vec::with_capacity(steps * d),
        };
        let constant = game.is_time_invariant().then(|| Stacked::new(&game.snapshot_clamped(start)));
        for k in 0..steps {
            let s = start + k as f64 * h;
            let varying;
            let st = match &constant {
                Some(st) => st,
                None => {
                    varying = Stacked::new(&game.snapshot_clamped(s));
                    &varying
                }
            };
            let (ku, _) = leader.gains_at(s)?;
            let (kvx, kvu) = follower.gains_at(s)?;
            let kvu = kvu.expect("follower strategy carries a control gain");
            let mut z = DMatrix::zeros(d, n);
            z.view_mut((0, 0), (n, n)).fill_with_identity();
            z.view_mut((n, 0), (m1, n)).copy_from(&ku);
            z.view_mut((n + m1, 0), (m2, n)).copy_from(&(&kvx + &kvu * &ku));
            let mut z0 = DVector::zeros(d);
            z0.rows_mut(n, m1).copy_from(&leader.offset);
            z0.rows_mut(n + m1, m2).copy_from(&(&kvu * &leader.offset + &follower.offset));

            push_row_major(&mut t.fc, &(&st.f * &z));
            t.fconst.extend((&st.f * &z0 + &st.b).iter());
            push_row_major(&mut t.sc, &(&st.s * &z));
            t.sconst.extend((&st.s * &z0 + &st.lambda).iter());
            for i in 0..2 {
                let gz = &st.g[i] * &z;
                push_row_major(&mut t.h[i], &(z.transpose() * &gz));
                let gz0 = &st.g[i] * &z0;
                t.hlin[i].extend((z.transpose() * (&gz0 + &st.glin[i])).iter());
                t.hconst[i].push(0.5 * z0.dot(&gz0) + st.glin[i].dot(&z0));
            }
            push_row_major(&mut t.z, &z);
            t.z0.extend(z0.iter());
        }
        Ok(t)
    }
}

/// Standard normal from exactly two 64-bit words (Box–Muller, cosine branch).
#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let a = rng.next_u64();
    let b = rng.next_u64();
    let u1 = ((a >> 11) + 1) as f64 * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[inline]
fn quad(m: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        let mut r = 0.0;
        for j in 0..n {
            r += row[j] * x[j];
        }
        acc += x[i] * r;
    }
    acc
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

struct PathOutcome {
    j: [f64; 2],
    terminal: Vec<f64>,
    stored: Vec<PathSample>,
}

struct Runner<'a> {
    tables: StepTables,
    game: &'a GameSpec,
    cfg: &'a SimConfig,
    h: f64,
    sqrt_h: f64,
}

impl Runner<'_> {
    fn sample(&self, path: usize, k: usize, s: f64, x: &[f64]) -> PathSample {
        let t = &self.tables;
        let (n, d) = (t.n, t.d);
        let (m1, _) = (self.game.dims.m1, self.game.dims.m2);
        let k = k.min(self.cfg.n_steps - 1);
        let z = &t.z[k * d * n..(k + 1) * d * n];
        let z0 = &t.z0[k * d..(k + 1) * d];
        let full: Vec<f64> = (0..d).map(|r| dot(&z[r * n..(r + 1) * n], x) + z0[r]).collect();
        PathSample {
            path,
            s,
            x: x.to_vec(),
            u: full[n..n + m1].to_vec(),
            v: full[n + m1..].to_vec(),
        }
    }

    fn run_path(&self, path: usize) -> Result<PathOutcome> {
        let t = &self.tables;
        let n = t.n;
        let (h, sqrt_h) = (self.h, self.sqrt_h);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(path as u64);
        let mut x: Vec<f64> = self.cfg.initial_state.iter().copied().collect();
        let mut next = vec![0.0; n];
        let mut j = [0.0f64; 2];
        let store = path < self.cfg.stored_paths;
        let mut stored = Vec::new();
        for k in 0..self.cfg.n_steps {
            let s = self.cfg.start_time + k as f64 * h;
            if store && k % self.cfg.store_every == 0 {
                stored.push(self.sample(path, k, s, &x));
            }
            let xi = normal(&mut rng);
            let nn = k * n * n;
            let nv = k * n;
            for (i, ji) in j.iter_mut().enumerate() {
                let running = 0.5 * quad(&t.h[i][nn..nn + n * n], &x) + dot(&t.hlin[i][nv..nv + n], &x) + t.hconst[i][k];
                *ji += running * h;
            }
            let noise = sqrt_h * xi;
            for r in 0..n {
                let frow = &t.fc[nn + r * n..nn + (r + 1) * n];
                let srow = &t.sc[nn + r * n..nn + (r + 1) * n];
                let drift = dot(frow, &x) + t.fconst[nv + r];
                let diff = dot(srow, &x) + t.sconst[nv + r];
                next[r] = x[r] + drift * h + diff * noise;
            }
            std::mem::swap(&mut x, &mut next);
            if x.iter().any(|v| v.is_nan() || v.abs() > PATH_BLOW_UP) {
                return Err(Error::BlowUp {
                    what: format!("simulated path {path}"),
                    s: s + h,
                });
            }
        }
        let t_end = self.game.horizon.t_end();
        if store {
            stored.push(self.sample(path, self.cfg.n_steps, t_end, &x));
        }
        let xv = DVector::from_column_slice(&x);
        for (i, ji) in j.iter_mut().enumerate() {
            *ji += self.game.cost[i].terminal(&xv);
        }
        Ok(PathOutcome { j, terminal: x, stored })
    }
}

fn check_config(game: &GameSpec, leader: &FeedbackStrategy, follower: &FeedbackStrategy, cfg: &SimConfig) -> Result<()> {
    let dims = game.dims;
    if cfg.n_paths == 0 || cfg.n_steps == 0 {
        return Err(Error::Config("need at least one path and one step".into()));
    }
    if cfg.initial_state.len() != dims.n {
        return Err(Error::dims("initial state", (dims.n, 1), (cfg.initial_state.len(), 1)));
    }
    if !cfg.initial_state.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            what: "initial state".into(),
        });
    }
    let (t0, t_end) = (game.horizon.t0(), game.horizon.t_end());
    if !(cfg.start_time >= t0 && cfg.start_time < t_end) {
        return Err(Error::OutOfHorizon {
            s: cfg.start_time,
            t0,
            t_end,
        });
    }
    if leader.player != Player::Leader || follower.player != Player::Follower {
        return Err(Error::Config("strategies passed in the wrong order".into()));
    }
    for (what, k, shape) in [
        ("leader gain", &leader.state_gain[0], (dims.m1, dims.n)),
        ("follower state gain", &follower.state_gain[0], (dims.m2, dims.n)),
        ("follower control gain", &follower.control_gain[0], (dims.m2, dims.m1)),
    ] {
        if k.shape() != shape {
            return Err(Error::dims(what, shape, k.shape()));
        }
    }
    if leader.offset.len() != dims.m1 || follower.offset.len() != dims.m2 {
        return Err(Error::Config("strategy offsets do not match control dimensions".into()));
    }
    Ok(())
}

/// Per-path costs of the closed loop under `(leader, follower)`.
pub fn simulate_costs(
    game: &GameSpec,
    leader: &FeedbackStrategy,
    follower: &FeedbackStrategy,
    cfg: &SimConfig,
) -> Result<PathCosts> {
    check_config(game, leader, follower, cfg)?;
    let h = (game.horizon.t_end() - cfg.start_time) / cfg.n_steps as f64;
    let runner = Runner {
        tables: StepTables::build(game, leader, follower, cfg.start_time, h, cfg.n_steps)?,
        game,
        cfg,
        h,
        sqrt_h: h.sqrt(),
    };
    let outcomes: Vec<PathOutcome> = (0..cfg.n_paths)
        .into_par_iter()
        .with_min_len(256)
        .map(|p| runner.run_path(p))
        .collect::<Result<_>>()?;
    let n = game.dims.n;
    let mut costs = PathCosts {
        j1: Vec::with_capacity(cfg.n_paths),
        j2: Vec::with_capacity(cfg.n_paths),
        terminal: Vec::with_capacity(cfg.n_paths * n),
        n,
        stored: Vec::new(),
    };
    for o in outcomes {
        costs.j1.push(o.j[0]);
        costs.j2.push(o.j[1]);
        costs.terminal.extend(o.terminal);
        costs.stored.extend(o.stored);
    }
    Ok(costs)
}

/// Means and standard errors of both players' costs.
pub fn simulate(
    game: &GameSpec,
    leader: &FeedbackStrategy,
    follower: &FeedbackStrategy,
    cfg: &SimConfig,
) -> Result<SimulationResult> {
    let keep = cfg.stored_paths > 0;
    Ok(simulate_costs(game, leader, follower, cfg)?.summary(keep))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueGap {
    pub player: Player,
    pub monte_carlo: f64,
    pub value: f64,
    /// `monte_carlo - value`.
    pub gap: f64,
    pub stderr: f64,
}

/// Simulated equilibrium cost minus the quadratic value `½ x0ᵀ P_i x0` at the
/// start time, for both players.
pub fn estimate_value_gap(
    game: &GameSpec,
    traj: &RiccatiTrajectory,
    leader: &FeedbackStrategy,
    follower: &FeedbackStrategy,
    cfg: &SimConfig,
) -> Result<[ValueGap; 2]> {
    let result = simulate(game, leader, follower, cfg)?;
    let gap = |player: Player| -> Result<ValueGap> {
        let v = value(traj, player, cfg.start_time, &cfg.initial_state)?;
        Ok(ValueGap {
            player,
            monte_carlo: result.mean(player),
            value: v,
            gap: result.mean(player) - v,
            stderr: result.stderr(player),
        })
    };
    Ok([gap(Player::Leader)?, gap(Player::Follower)?])
}
