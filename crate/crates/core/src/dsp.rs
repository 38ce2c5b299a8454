//! FFT helpers and small numeric utilities shared by the estimators.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Forward DFT, `X[k] = Σ x[n] e^{-j2πkn/N}` (unnormalized).
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Unnormalized inverse DFT, `x[n] = Σ X[k] e^{+j2πkn/N}`.
pub fn idft_unnormalized(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

/// Forward and inverse plans of one length, reusable across calls.
#[derive(Clone)]
pub struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }
}

/// `e^{jφ}` for `φ = 2π·cycles`; reduces `cycles` mod 1 first so large
/// arguments keep full precision.
#[inline]
pub fn cis_cycles(cycles: f64) -> Complex64 {
    let frac = cycles - cycles.round();
    Complex64::from_polar(1.0, std::f64::consts::TAU * frac)
}

/// Wraps a DFT bin index into the signed range `[-N/2, N/2)`.
pub fn signed_bin(bin: usize, len: usize) -> i64 {
    let b = bin as i64;
    let n = len as i64;
    if 2 * b >= n {
        b - n
    } else {
        b
    }
}

/// Wraps a Doppler bin into `(-N/2, N/2]`.
pub fn signed_doppler_bin(bin: usize, len: usize) -> i64 {
    let b = bin as i64;
    let n = len as i64;
    if 2 * b > n {
        b - n
    } else {
        b
    }
}

pub fn frobenius(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    diff / frobenius(b)
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}
