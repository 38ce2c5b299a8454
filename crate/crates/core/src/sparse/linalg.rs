use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CMatrix, CVector};

/// Singular values below this fraction of the largest are treated as zero.
const RANK_TOL: f64 = 1e-10;

/// Minimum-norm least-squares solution of `a x ≈ y`. The flag reports a
/// numerically rank-deficient `a`.
pub fn least_squares(a: &CMatrix, y: &CVector) -> (CVector, bool) {
    if a.ncols() == 0 {
        return (CVector::zeros(0), false);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * RANK_TOL;
    let deficient = a.ncols() > a.nrows() || svd.singular_values.iter().any(|&s| s <= eps);
    let x = svd.solve(y, eps).expect("both singular-vector sets were computed");
    (x, deficient)
}

pub(crate) fn select_columns(a: &CMatrix, support: &[usize]) -> CMatrix {
    DMatrix::from_fn(a.nrows(), support.len(), |r, c| a[(r, support[c])])
}

pub(crate) fn residual(a: &CMatrix, x: &CVector, y: &CVector) -> CVector {
    if x.is_empty() {
        return y.clone();
    }
    y - a * x
}

pub(crate) fn to_vec(x: &CVector) -> Vec<Complex64> {
    x.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_overdetermined() {
        let a = CMatrix::from_fn(4, 2, |r, c| Complex64::new((r + c) as f64, (r * c) as f64 + 1.0));
        let x = CVector::from_vec(vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)]);
        let y = &a * &x;
        let (got, deficient) = least_squares(&a, &y);
        assert!(!deficient);
        assert!((got - x).norm() < 1e-12);
    }

    #[test]
    fn duplicate_columns_give_min_norm() {
        let col = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let a = CMatrix::from_columns(&[col.clone(), col.clone()]);
        let y = col * Complex64::new(2.0, 0.0);
        let (x, deficient) = least_squares(&a, &y);
        assert!(deficient);
        assert!((x[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((x[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
