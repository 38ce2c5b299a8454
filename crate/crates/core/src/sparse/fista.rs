use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_unit_columns, CMatrix, CVector, SparseError, SparseSolution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FistaOptions {
    pub max_iterations: usize,
    /// Stop once `|F_k - F_{k-1}| / F_{k-1}` drops below this.
    pub rel_tolerance: f64,
    /// Entries above this fraction of the largest magnitude form the support;
    /// 0 keeps every nonzero entry.
    pub support_fraction: f64,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self { max_iterations: 5000, rel_tolerance: 1e-8, support_fraction: 0.0 }
    }
}

/// Largest eigenvalue of `AᴴA` by power iteration.
pub fn spectral_norm_sq(a: &CMatrix) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    // fixed, non-symmetric start so the iteration is deterministic
    let mut v = CVector::from_fn(n, |j, _| Complex64::new(1.0, 0.1 * j as f64 / n as f64));
    v.unscale_mut(v.norm());
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = a.ad_mul(&(a * &v));
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w.unscale(next);
        let done = (next - lambda).abs() <= 1e-12 * next;
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

fn soft_threshold(x: &mut CVector, t: f64) {
    for v in x.iter_mut() {
        let m = v.norm();
        *v = if m > t { *v * ((m - t) / m) } else { Complex64::new(0.0, 0.0) };
    }
}

fn objective(a: &CMatrix, y: &CVector, x: &CVector, lambda: f64) -> f64 {
    0.5 * (a * x - y).norm_squared() + lambda * x.iter().map(|v| v.norm()).sum::<f64>()
}

/// Minimizes `½‖Ax − y‖² + λ‖x‖₁` over complex `x` with FISTA, step `1/L`,
/// and a momentum restart whenever the objective would increase, which keeps
/// the accepted iterates monotone.
pub fn fista_bpdn(a: &CMatrix, y: &CVector, lambda: f64, opts: FistaOptions) -> Result<SparseSolution, SparseError> {
    if a.nrows() != y.len() {
        return Err(SparseError::Shape(format!("{} rows vs {} measurements", a.nrows(), y.len())));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(SparseError::Lambda(lambda));
    }
    check_unit_columns(a)?;
    let l = spectral_norm_sq(a);
    let n = a.ncols();
    let mut x = CVector::zeros(n);
    let mut f = objective(a, y, &x, lambda);
    let mut sol = SparseSolution::empty(1, y.norm());
    sol.converged = false;
    if l == 0.0 || f == 0.0 {
        sol.converged = true;
        return Ok(finish(sol, a, y, &x, opts));
    }
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..opts.max_iterations {
        sol.iterations += 1;
        let grad = a.ad_mul(&(a * &z - y));
        let mut u = &z - grad.unscale(l);
        soft_threshold(&mut u, lambda / l);
        let fu = objective(a, y, &u, lambda);
        if fu > f {
            // restart from the last accepted point
            t = 1.0;
            z = x.clone();
            sol.residual_history.push((a * &x - y).norm());
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &u + (&u - &x) * Complex64::new((t - 1.0) / t_next, 0.0);
        let change = (f - fu).abs() / f.max(f64::MIN_POSITIVE);
        x = u;
        f = fu;
        t = t_next;
        sol.residual_history.push((a * &x - y).norm());
        if change < opts.rel_tolerance {
            sol.converged = true;
            break;
        }
    }
    Ok(finish(sol, a, y, &x, opts))
}

fn finish(mut sol: SparseSolution, a: &CMatrix, y: &CVector, x: &CVector, opts: FistaOptions) -> SparseSolution {
    let peak = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut support: Vec<usize> = (0..x.len()).filter(|&j| peak > 0.0 && x[j].norm() > opts.support_fraction * peak).collect();
    support.sort_by(|&p, &q| x[q].norm().total_cmp(&x[p].norm()).then(p.cmp(&q)));
    sol.coefficients = vec![support.iter().map(|&j| x[j]).collect()];
    sol.support = support;
    sol.residual_norm = (a * x - y).norm();
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::normalize_columns;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    /// Plain proximal gradient, run to a tight fixed point.
    fn ista(a: &CMatrix, y: &CVector, lambda: f64) -> CVector {
        let l = spectral_norm_sq(a) * 1.0001;
        let mut x = CVector::zeros(a.ncols());
        for _ in 0..200_000 {
            let mut next = &x - a.ad_mul(&(a * &x - y)).unscale(l);
            soft_threshold(&mut next, lambda / l);
            let step = (&next - &x).norm();
            x = next;
            if step < 1e-13 {
                break;
            }
        }
        x
    }

    #[test]
    fn large_lambda_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = CMatrix::from_fn(10, 20, |_, _| cn(&mut rng));
        normalize_columns(&mut a);
        let y = CVector::from_fn(10, |_, _| cn(&mut rng));
        let bound = a.ad_mul(&y).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let s = fista_bpdn(&a, &y, bound, FistaOptions::default()).unwrap();
        assert!(s.support.is_empty());
        assert!(s.converged);
    }

    #[test]
    fn orthonormal_dictionary_is_soft_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = CMatrix::from_fn(16, 16, |_, _| cn(&mut rng));
        let q = g.qr().q();
        let y = CVector::from_fn(16, |_, _| cn(&mut rng));
        let lambda = 0.8;
        let s = fista_bpdn(&q, &y, lambda, FistaOptions::default()).unwrap();
        let mut want = q.ad_mul(&y);
        soft_threshold(&mut want, lambda);
        let got = CVector::from_vec(s.dense(16, 0));
        assert!((got - want).camax() < 1e-6);
    }

    #[test]
    fn agrees_with_ista_and_stays_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let mut a = CMatrix::from_fn(50, 100, |_, _| cn(&mut rng));
            normalize_columns(&mut a);
            let mut x0 = CVector::zeros(100);
            for j in rand::seq::index::sample(&mut rng, 100, 6) {
                x0[j] = cn(&mut rng);
            }
            let y = &a * &x0 + CVector::from_fn(50, |_, _| cn(&mut rng) * 0.01);
            let lambda = 0.05;
            let s = fista_bpdn(&a, &y, lambda, FistaOptions::default()).unwrap();
            assert!(s.converged);
            let fx = objective(&a, &y, &CVector::from_vec(s.dense(100, 0)), lambda);
            let fi = objective(&a, &y, &ista(&a, &y, lambda), lambda);
            assert!((fx - fi).abs() <= 1e-6 * fi.max(1.0), "{fx} vs {fi}");
        }
    }

    #[test]
    fn rejects_bad_lambda() {
        let a = CMatrix::identity(3, 3);
        assert!(fista_bpdn(&a, &CVector::zeros(3), 0.0, FistaOptions::default()).is_err());
    }
}
