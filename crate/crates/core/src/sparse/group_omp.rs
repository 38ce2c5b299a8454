use super::linalg::{least_squares, residual, select_columns, to_vec};
use super::{argmax, EXACT_FIT, CMatrix, CVector, SparseError, SparseSolution, Stop};

/// Simultaneous OMP over measurements `ys[j] ≈ dicts[j] x_j` whose
/// coefficient vectors share one support. `dicts` holds either one shared
/// dictionary or one per measurement. Columns need not be normalized: atom
/// `n` is scored by `Σ_j |⟨d_jn, r_j⟩|² / ‖d_jn‖²`.
pub fn group_omp(dicts: &[CMatrix], ys: &[CVector], stop: Stop) -> Result<SparseSolution, SparseError> {
    if ys.is_empty() || dicts.is_empty() {
        return Err(SparseError::Empty);
    }
    if dicts.len() != 1 && dicts.len() != ys.len() {
        return Err(SparseError::Shape(format!("{} dictionaries for {} measurements", dicts.len(), ys.len())));
    }
    let dict = |j: usize| if dicts.len() == 1 { &dicts[0] } else { &dicts[j] };
    let atoms = dicts[0].ncols();
    let mut min_rows = usize::MAX;
    for (j, y) in ys.iter().enumerate() {
        let d = dict(j);
        if d.ncols() != atoms || d.nrows() != y.len() {
            return Err(SparseError::Shape(format!(
                "measurement {j}: dictionary {}x{}, measurement {}",
                d.nrows(),
                d.ncols(),
                y.len()
            )));
        }
        min_rows = min_rows.min(d.nrows());
    }
    if stop.max_atoms.is_none() && stop.tolerance.is_none() {
        return Err(SparseError::NoStop);
    }
    if let Some(k) = stop.max_atoms {
        if k > min_rows {
            return Err(SparseError::SparsityTooLarge { k, rows: min_rows });
        }
    }
    let max_atoms = stop.max_atoms.unwrap_or(min_rows).min(min_rows).min(atoms);
    let inv_norm_sq: Vec<Vec<f64>> = dicts
        .iter()
        .map(|d| {
            d.column_iter()
                .map(|c| {
                    let n = c.norm_squared();
                    if n > 0.0 {
                        1.0 / n
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let inv = |j: usize| if dicts.len() == 1 { &inv_norm_sq[0] } else { &inv_norm_sq[j] };

    let mut residuals: Vec<CVector> = ys.to_vec();
    let frob = |rs: &[CVector]| rs.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt();
    let mut rnorm = frob(&residuals);
    let mut sol = SparseSolution::empty(ys.len(), rnorm);
    if rnorm == 0.0 {
        return Ok(sol);
    }
    let tol = stop.tolerance.unwrap_or(0.0).max(EXACT_FIT * rnorm);
    let mut coefs: Vec<CVector> = vec![CVector::zeros(0); ys.len()];
    let mut score = vec![0.0; atoms];
    while sol.support.len() < max_atoms && rnorm > tol {
        score.iter_mut().for_each(|s| *s = 0.0);
        for (j, r) in residuals.iter().enumerate() {
            let corr = dict(j).ad_mul(r);
            for ((s, c), w) in score.iter_mut().zip(corr.iter()).zip(inv(j)) {
                *s += c.norm_sqr() * w;
            }
        }
        for &a in &sol.support {
            score[a] = f64::NEG_INFINITY;
        }
        let Some((atom, _)) = argmax(score.iter().copied()) else { break };
        sol.support.push(atom);
        for (j, y) in ys.iter().enumerate() {
            let sub = select_columns(dict(j), &sol.support);
            let (x, deficient) = least_squares(&sub, y);
            sol.rank_deficient |= deficient;
            residuals[j] = residual(&sub, &x, y);
            coefs[j] = x;
        }
        rnorm = frob(&residuals);
        sol.iterations += 1;
        sol.residual_history.push(rnorm);
    }
    sol.coefficients = coefs.iter().map(to_vec).collect();
    sol.residual_norm = rnorm;
    Ok(sol)
}
