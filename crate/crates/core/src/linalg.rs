//! Small dense helpers on top of `nalgebra` used by every numerical module.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

/// Smallest eigenvalue a matrix must exceed to count as positive definite.
pub const PD_THRESHOLD: f64 = 1e-10;

/// Input symmetry tolerance applied when validating game data.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of the symmetric part of a square matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => f64::INFINITY,
        1 => m[(0, 0)],
        _ => SymmetricEigen::new(symmetrize(m))
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v == 0.0)
}

/// `xᵀ A y` without temporaries.
pub fn bilinear(x: &DVector<f64>, a: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        let mut col = 0.0;
        for i in 0..a.nrows() {
            col += x[i] * a[(i, j)];
        }
        acc += col * y[j];
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorError {
    /// Smallest eigenvalue at or below [`PD_THRESHOLD`].
    NotPositive(f64),
    Singular,
}

/// Cholesky factor of a matrix certified positive definite.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    pub min_eigenvalue: f64,
}

impl SpdFactor {
    /// Factors the symmetric part of `m` after checking its smallest
    /// eigenvalue against [`PD_THRESHOLD`].
    pub fn new(m: &DMatrix<f64>) -> Result<Self, FactorError> {
        let min_eigenvalue = min_eigenvalue(m);
        if min_eigenvalue.is_nan() || min_eigenvalue <= PD_THRESHOLD {
            return Err(FactorError::NotPositive(min_eigenvalue));
        }
        let chol = Cholesky::new(symmetrize(m)).ok_or(FactorError::Singular)?;
        Ok(SpdFactor {
            chol,
            min_eigenvalue,
        })
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(rhs)
    }

    pub fn solve_vec(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}
