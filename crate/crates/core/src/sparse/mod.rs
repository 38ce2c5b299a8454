//! Complex sparse recovery: greedy pursuit for single and jointly sparse
//! measurements, and an accelerated proximal solver for the L1-penalized
//! least-squares problem.

mod fista;
mod group_omp;
mod linalg;
mod omp;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fista::{fista_bpdn, spectral_norm_sq, FistaOptions};
pub use group_omp::group_omp;
pub use linalg::least_squares;
pub use omp::omp;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Columns are expected to have unit norm to within this tolerance.
pub const UNIT_COLUMN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SparseError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("column {column} has norm {norm}, expected 1")]
    NotUnitColumn { column: usize, norm: f64 },
    #[error("sparsity {k} exceeds the {rows} available rows")]
    SparsityTooLarge { k: usize, rows: usize },
    #[error("lambda must be positive, got {0}")]
    Lambda(f64),
    #[error("no stopping rule given")]
    NoStop,
    #[error("no measurements")]
    Empty,
}

/// Residual norms below this fraction of the measurement norm stop the
/// greedy solvers even without a tolerance.
pub(crate) const EXACT_FIT: f64 = 1e-12;

/// Stopping rule for the greedy solvers. Iteration ends at whichever limit
/// is hit first.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stop {
    pub max_atoms: Option<usize>,
    /// Absolute residual norm (Frobenius over all measurements).
    pub tolerance: Option<f64>,
}

impl Stop {
    pub fn atoms(k: usize) -> Self {
        Self { max_atoms: Some(k), tolerance: None }
    }

    pub fn residual(eps: f64) -> Self {
        Self { max_atoms: None, tolerance: Some(eps) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    /// Atom indices in selection order.
    pub support: Vec<usize>,
    /// `coefficients[j][s]`: measurement `j`, atom `support[s]`.
    pub coefficients: Vec<Vec<Complex64>>,
    pub residual_norm: f64,
    /// Residual norm after each iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// Set when a least-squares refit met a rank-deficient submatrix and fell
    /// back to the minimum-norm solution.
    pub rank_deficient: bool,
    pub converged: bool,
}

impl SparseSolution {
    fn empty(measurements: usize, residual_norm: f64) -> Self {
        Self {
            support: Vec::new(),
            coefficients: vec![Vec::new(); measurements],
            residual_norm,
            residual_history: Vec::new(),
            iterations: 0,
            rank_deficient: false,
            converged: true,
        }
    }

    /// Dense coefficient vector of measurement `j` over `num_atoms` atoms.
    pub fn dense(&self, num_atoms: usize, j: usize) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); num_atoms];
        for (s, &atom) in self.support.iter().enumerate() {
            x[atom] = self.coefficients[j][s];
        }
        x
    }

    /// Support sorted ascending.
    pub fn sorted_support(&self) -> Vec<usize> {
        let mut s = self.support.clone();
        s.sort_unstable();
        s
    }
}

pub(crate) fn check_unit_columns(a: &CMatrix) -> Result<(), SparseError> {
    for (column, col) in a.column_iter().enumerate() {
        let norm = col.norm();
        if (norm - 1.0).abs() > UNIT_COLUMN_TOL {
            return Err(SparseError::NotUnitColumn { column, norm });
        }
    }
    Ok(())
}

/// Scales every column to unit norm and returns the original norms. Zero
/// columns are left untouched with norm 0.
pub fn normalize_columns(a: &mut CMatrix) -> Vec<f64> {
    let mut norms = Vec::with_capacity(a.ncols());
    for mut col in a.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col.unscale_mut(n);
        }
        norms.push(n);
    }
    norms
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}
