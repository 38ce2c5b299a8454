use super::linalg::{least_squares, residual, select_columns, to_vec};
use super::{argmax, EXACT_FIT, check_unit_columns, CMatrix, CVector, SparseError, SparseSolution, Stop};

/// Orthogonal matching pursuit on a dictionary with unit-norm columns.
///
/// Each iteration adds the atom most correlated with the residual and refits
/// all coefficients by least squares.
pub fn omp(a: &CMatrix, y: &CVector, stop: Stop) -> Result<SparseSolution, SparseError> {
    if a.nrows() != y.len() {
        return Err(SparseError::Shape(format!("{} rows vs {} measurements", a.nrows(), y.len())));
    }
    check_unit_columns(a)?;
    if stop.max_atoms.is_none() && stop.tolerance.is_none() {
        return Err(SparseError::NoStop);
    }
    let limit = a.ncols().min(a.nrows());
    if let Some(k) = stop.max_atoms {
        if k > a.nrows() {
            return Err(SparseError::SparsityTooLarge { k, rows: a.nrows() });
        }
    }
    let max_atoms = stop.max_atoms.unwrap_or(limit).min(limit);
    let mut r = y.clone();
    let mut rnorm = r.norm();
    if rnorm == 0.0 {
        return Ok(SparseSolution::empty(1, 0.0));
    }
    // residuals at rounding level count as exact fits
    let tol = stop.tolerance.unwrap_or(0.0).max(EXACT_FIT * rnorm);
    let mut sol = SparseSolution::empty(1, rnorm);
    let mut coef = CVector::zeros(0);
    while sol.support.len() < max_atoms && rnorm > tol {
        let corr = a.ad_mul(&r);
        let pick = argmax(corr.iter().enumerate().map(|(j, c)| {
            if sol.support.contains(&j) {
                f64::NEG_INFINITY
            } else {
                c.norm()
            }
        }));
        let Some((atom, _)) = pick else { break };
        sol.support.push(atom);
        let sub = select_columns(a, &sol.support);
        let (x, deficient) = least_squares(&sub, y);
        sol.rank_deficient |= deficient;
        r = residual(&sub, &x, y);
        rnorm = r.norm();
        coef = x;
        sol.iterations += 1;
        sol.residual_history.push(rnorm);
    }
    sol.coefficients = vec![to_vec(&coef)];
    sol.residual_norm = rnorm;
    Ok(sol)
}
