//! Monte-Carlo check of the two equilibrium inequalities.
//!
//! Neither player should be able to lower its own cost by deviating. The
//! harness samples structured deviations (a perturbation family) and
//! compares costs path by path under common random numbers. It can falsify
//! an equilibrium but never prove one.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::equilibrium::{build_strategies, FeedbackStrategy};
use crate::error::{Error, Result};
use crate::model::{Dims, GameSpec, Player};
use crate::riccati::RiccatiTrajectory;
use crate::sim::{mean_stderr, simulate_costs, SimConfig};

/// `{0, ±0.05, ±0.1, ±0.2}`.
pub const DEFAULT_MAGNITUDES: [f64; 7] = [0.0, -0.05, 0.05, -0.1, 0.1, -0.2, 0.2];

/// Relative allowance for Euler discretization bias in the pass rule.
pub const DEFAULT_BIAS_ALLOWANCE: f64 = 0.02;

/// Standard errors of slack in the pass rule.
pub const STDERR_MULTIPLIER: f64 = 3.0;

pub const REPORT_HEADER: &str =
    "sampled perturbation families under common random numbers: a falsification harness, not a proof";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    /// Adds `ε·direction` to the state gain.
    GainOffset,
    /// Adds `ε·direction` to the affine offset.
    ConstantOffset,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 2] = [PerturbationKind::GainOffset, PerturbationKind::ConstantOffset];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbationKind::GainOffset => "gain_offset",
            PerturbationKind::ConstantOffset => "constant_offset",
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gain_offset" => Ok(PerturbationKind::GainOffset),
            "constant_offset" => Ok(PerturbationKind::ConstantOffset),
            other => Err(Error::Config(format!("unknown perturbation kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFamily {
    pub target: Player,
    pub kind: PerturbationKind,
    pub magnitudes: Vec<f64>,
    /// Unit Frobenius norm; `m × n` for gain offsets, `m × 1` otherwise.
    pub direction: DMatrix<f64>,
}

impl PerturbationFamily {
    /// Normalizes `direction` to unit Frobenius norm.
    pub fn new(target: Player, kind: PerturbationKind, magnitudes: Vec<f64>, direction: DMatrix<f64>) -> Result<Self> {
        let norm = direction.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Config("perturbation direction must be finite and nonzero".into()));
        }
        if magnitudes.is_empty() || !magnitudes.iter().all(|e| e.is_finite()) {
            return Err(Error::Config("perturbation magnitudes must be finite and non-empty".into()));
        }
        Ok(PerturbationFamily {
            target,
            kind,
            magnitudes,
            direction: direction / norm,
        })
    }

    /// Default magnitudes along the normalized all-ones direction.
    pub fn standard(dims: Dims, target: Player, kind: PerturbationKind) -> Self {
        let m = match target {
            Player::Leader => dims.m1,
            Player::Follower => dims.m2,
        };
        let cols = match kind {
            PerturbationKind::GainOffset => dims.n,
            PerturbationKind::ConstantOffset => 1,
        };
        Self::new(target, kind, DEFAULT_MAGNITUDES.to_vec(), DMatrix::from_element(m, cols, 1.0))
            .expect("all-ones direction is valid")
    }

    pub fn with_magnitudes(mut self, magnitudes: Vec<f64>) -> Self {
        self.magnitudes = magnitudes;
        self
    }
}

/// `strategy` shifted by `eps` along the family's direction. `eps = 0`
/// returns an exact copy.
pub fn perturb(strategy: &FeedbackStrategy, family: &PerturbationFamily, eps: f64) -> Result<FeedbackStrategy> {
    if strategy.player != family.target {
        return Err(Error::Config(format!(
            "family targets the {} but the strategy belongs to the {}",
            family.target.name(),
            strategy.player.name()
        )));
    }
    let mut out = strategy.clone();
    let dir = &family.direction;
    match family.kind {
        PerturbationKind::GainOffset => {
            let shape = strategy.state_gain[0].shape();
            if dir.shape() != shape {
                return Err(Error::dims("gain perturbation direction", shape, dir.shape()));
            }
            if eps != 0.0 {
                for k in &mut out.state_gain {
                    *k += dir * eps;
                }
            }
        }
        PerturbationKind::ConstantOffset => {
            let shape = (strategy.offset.len(), 1);
            if dir.shape() != shape {
                return Err(Error::dims("offset perturbation direction", shape, dir.shape()));
            }
            if eps != 0.0 {
                out.offset += DVector::from_column_slice(dir.as_slice()) * eps;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationCell {
    pub target: Player,
    pub kind: PerturbationKind,
    pub eps: f64,
    /// Perturbed minus equilibrium cost of the target.
    pub delta_j: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub cells: Vec<VerificationCell>,
    pub initial_state: DVector<f64>,
    pub start_time: f64,
    pub bias_allowance: f64,
    /// Equilibrium cost of the target.
    pub baseline: f64,
    pub baseline_stderr: f64,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "{REPORT_HEADER}\nx0 = {:?}, s = {}, baseline J = {:.6} ± {:.6}\n",
            self.initial_state.as_slice(),
            self.start_time,
            self.baseline,
            self.baseline_stderr
        );
        for c in &self.cells {
            out.push_str(&format!(
                "  {:8} {:15} eps {:+.3}  dJ {:+.6e} ± {:.3e}  {}\n",
                c.target.name(),
                c.kind.as_str(),
                c.eps,
                c.delta_j,
                c.stderr,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// `ΔJ ≥ −3·stderr − bias·(1 + |ΔJ|)`.
pub fn inequality_holds(delta_j: f64, stderr: f64, bias_allowance: f64) -> bool {
    delta_j >= -STDERR_MULTIPLIER * stderr - bias_allowance * (1.0 + delta_j.abs())
}

pub fn stackelberg_inequality_test(
    game: &GameSpec,
    traj: &RiccatiTrajectory,
    family: &PerturbationFamily,
    cfg: &SimConfig,
) -> Result<VerificationReport> {
    stackelberg_inequality_test_with(game, traj, family, cfg, DEFAULT_BIAS_ALLOWANCE)
}

/// Perturbs the target's equilibrium strategy at every magnitude and
/// compares the target's cost path by path.
///
/// In the leader test the follower keeps its reaction map, so it answers
/// the perturbed leader control through its control gain.
pub fn stackelberg_inequality_test_with(
    game: &GameSpec,
    traj: &RiccatiTrajectory,
    family: &PerturbationFamily,
    cfg: &SimConfig,
    bias_allowance: f64,
) -> Result<VerificationReport> {
    let (leader, follower) = build_strategies(traj, game, traj.tag)?;
    let base = simulate_costs(game, &leader, &follower, cfg)?;
    let base_costs = base.costs(family.target);
    let (baseline, baseline_stderr) = mean_stderr(base_costs);
    let mut cells = Vec::with_capacity(family.magnitudes.len());
    for &eps in &family.magnitudes {
        let costs = match family.target {
            Player::Leader => simulate_costs(game, &perturb(&leader, family, eps)?, &follower, cfg)?,
            Player::Follower => simulate_costs(game, &leader, &perturb(&follower, family, eps)?, cfg)?,
        };
        let diffs: Vec<f64> = costs.costs(family.target).iter().zip(base_costs).map(|(p, b)| p - b).collect();
        let (delta_j, stderr) = mean_stderr(&diffs);
        log::debug!("{} {} eps {eps}: dJ {delta_j:e} ± {stderr:e}", family.target.name(), family.kind);
        cells.push(VerificationCell {
            target: family.target,
            kind: family.kind,
            eps,
            delta_j,
            stderr,
            pass: inequality_holds(delta_j, stderr, bias_allowance),
        });
    }
    Ok(VerificationReport {
        cells,
        initial_state: cfg.initial_state.clone(),
        start_time: cfg.start_time,
        bias_allowance,
        baseline,
        baseline_stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureFit {
    /// Least-squares `c` in `ΔJ ≈ c·ε²`.
    pub curvature: f64,
    /// Largest absolute deviation from the fitted parabola.
    pub residual: f64,
}

impl CurvatureFit {
    /// Needs at least five magnitudes, including zero, forming a set
    /// symmetric about zero.
    pub fn fit(eps: &[f64], delta_j: &[f64]) -> Result<Self> {
        if eps.len() != delta_j.len() {
            return Err(Error::InsufficientData("magnitudes and cost differences differ in length".into()));
        }
        if eps.len() < 5 {
            return Err(Error::InsufficientData(format!("{} magnitudes, need at least 5", eps.len())));
        }
        if !eps.contains(&0.0) {
            return Err(Error::InsufficientData("magnitudes must include 0".into()));
        }
        if eps.iter().any(|e| !eps.contains(&-e)) {
            return Err(Error::InsufficientData("magnitudes are not symmetric about 0".into()));
        }
        let den: f64 = eps.iter().map(|e| e.powi(4)).sum();
        let num: f64 = eps.iter().zip(delta_j).map(|(e, d)| e * e * d).sum();
        let curvature = num / den;
        let residual = eps
            .iter()
            .zip(delta_j)
            .map(|(e, d)| (d - curvature * e * e).abs())
            .fold(0.0, f64::max);
        Ok(CurvatureFit { curvature, residual })
    }
}

pub fn curvature_check(report: &VerificationReport) -> Result<CurvatureFit> {
    let eps: Vec<f64> = report.cells.iter().map(|c| c.eps).collect();
    let dj: Vec<f64> = report.cells.iter().map(|c| c.delta_j).collect();
    CurvatureFit::fit(&eps, &dj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::riccati::{solve_backward, CaseTag, Method};

    fn m(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn gain_offset_adds_to_gain() {
        let s = FeedbackStrategy::leader(vec![0.0, 1.0], vec![m(-1.0), m(-1.0)]).unwrap();
        let fam = PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![0.5], m(1.0)).unwrap();
        let p = perturb(&s, &fam, 0.5).unwrap();
        assert_eq!(p.state_gain[0][(0, 0)], -0.5);
        assert_eq!(perturb(&s, &fam, 0.0).unwrap(), s);
    }

    #[test]
    fn constant_offset_on_zero_follower() {
        let game = benchmarks::case2_tanh();
        let traj = solve_backward(&game, CaseTag::Case2, 100, Method::Rk4).unwrap();
        let (_, f) = build_strategies(&traj, &game, CaseTag::Case2).unwrap();
        let fam = PerturbationFamily::standard(game.dims, Player::Follower, PerturbationKind::ConstantOffset);
        let p = perturb(&f, &fam, 0.2).unwrap();
        let x = DVector::from_element(1, 3.0);
        let u = DVector::from_element(1, -1.0);
        assert_eq!(p.eval(0.4, &x, Some(&u)).unwrap()[0], 0.2);
    }

    #[test]
    fn perturb_rejects_mismatch() {
        let s = FeedbackStrategy::leader(vec![0.0, 1.0], vec![m(-1.0), m(-1.0)]).unwrap();
        let fam = PerturbationFamily::new(Player::Follower, PerturbationKind::GainOffset, vec![0.5], m(1.0)).unwrap();
        assert!(perturb(&s, &fam, 0.5).is_err());
        let fam = PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![0.5], DMatrix::zeros(1, 2).add_scalar(1.0)).unwrap();
        assert!(matches!(perturb(&s, &fam, 0.5), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn direction_is_normalized() {
        let fam = PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![1.0], DMatrix::from_element(2, 2, 3.0)).unwrap();
        assert!((fam.direction.norm() - 1.0).abs() < 1e-15);
        assert!(PerturbationFamily::new(Player::Leader, PerturbationKind::GainOffset, vec![1.0], DMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn curvature_fits() {
        let eps = [0.0, -0.1, 0.1, -0.2, 0.2];
        let sq: Vec<f64> = eps.iter().map(|e| e * e).collect();
        let fit = CurvatureFit::fit(&eps, &sq).unwrap();
        assert!((fit.curvature - 1.0).abs() < 1e-14 && fit.residual < 1e-15);
        let flat = CurvatureFit::fit(&eps, &[0.0; 5]).unwrap();
        assert_eq!(flat.curvature, 0.0);
        assert!(CurvatureFit::fit(&eps[..4], &sq[..4]).is_err());
        assert!(CurvatureFit::fit(&[0.0, 0.1, 0.2, 0.3, -0.1], &[0.0; 5]).is_err());
        assert!(CurvatureFit::fit(&[-0.3, -0.1, 0.1, 0.3, 0.2], &[0.0; 5]).is_err());
    }

    #[test]
    fn zero_magnitude_is_exactly_zero() {
        let game = benchmarks::reference_game();
        let traj = solve_backward(&game, CaseTag::Case1General, 200, Method::Rk4).unwrap();
        let cfg = SimConfig::new(DVector::from_element(1, 1.0), 0.0, 200, 50, 42);
        for target in Player::BOTH {
            let fam = PerturbationFamily::standard(game.dims, target, PerturbationKind::GainOffset).with_magnitudes(vec![0.0, 0.1]);
            let r = stackelberg_inequality_test(&game, &traj, &fam, &cfg).unwrap();
            assert_eq!(r.cells[0].delta_j.to_bits(), 0.0f64.to_bits());
            assert_eq!(r.cells[0].stderr, 0.0);
            assert!(r.cells[0].pass);
        }
    }

    #[test]
    fn pass_rule() {
        assert!(inequality_holds(0.0, 0.0, 0.02));
        assert!(inequality_holds(-0.02, 0.0, 0.02));
        assert!(!inequality_holds(-0.03, 0.0, 0.02));
        assert!(inequality_holds(-0.03, 0.01, 0.0));
    }
}
