use num_complex::Complex64;
use serde::Serialize;

use super::EstimatorError;
use crate::config::SystemConfig;
use crate::dsp::{cis_cycles, idft_unnormalized, median, signed_bin};
use crate::frame::SymbolFrame;
use crate::radar_sim::RadarCube;

/// Fraction of masked divisions above which a division is reported as
/// ill-conditioned.
const ILL_CONDITIONED_FRACTION: f64 = 0.2;

/// Magnitude of the receive-array DFT of one snapshot, normalized by `N_r`
/// so that an on-grid unit target reads 1.
///
/// Bin `l` holds `|Σ_m d_Rx(m,i,µ) e^{+j2πml/N}| / N_r` and corresponds to
/// `sinθ = l' / (N d_r) · f_c/(f_c+iΔ)` with `l'` the bin wrapped to `[-N/2, N/2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleSpectrum {
    pub magnitudes: Vec<f64>,
    pub subcarrier: usize,
    pub mu: usize,
    rx_spacing_wl: f64,
    freq_ratio: f64,
}

impl AngleSpectrum {
    pub fn fft_size(&self) -> usize {
        self.magnitudes.len()
    }

    /// Sine of the arrival angle at `bin`; `None` when it falls outside
    /// `[-1, 1]` (spatial aliasing).
    pub fn sine(&self, bin: usize) -> Option<f64> {
        let n = self.fft_size() as f64;
        let s = signed_bin(bin, self.fft_size()) as f64 / (n * self.rx_spacing_wl * self.freq_ratio);
        (s.abs() <= 1.0).then_some(s)
    }

    pub fn theta_deg(&self, bin: usize) -> Option<f64> {
        self.sine(bin).map(|s| s.asin().to_degrees())
    }
}

pub fn angle_spectrum(cube: &RadarCube, cfg: &SystemConfig, subcarrier: usize, mu: usize, fft_size: usize) -> AngleSpectrum {
    let nr = cube.num_rx();
    assert!(fft_size >= nr, "FFT size {fft_size} below the {nr} receive elements");
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    buf[..nr].copy_from_slice(cube.snapshot(subcarrier, mu));
    let spec = idft_unnormalized(&buf);
    AngleSpectrum {
        magnitudes: spec.iter().map(|v| v.norm() / nr as f64).collect(),
        subcarrier,
        mu,
        rx_spacing_wl: cfg.rx_spacing_wl,
        freq_ratio: cfg.freq_ratio(subcarrier),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoarsePeak {
    pub bin: usize,
    pub signed_bin: i64,
    pub sine: f64,
    pub theta_deg: f64,
    pub magnitude: f64,
}

/// Cyclic local maxima of a spectrum. Equal neighbours resolve to the lower
/// index. Zero entries never count.
pub(crate) fn local_maxima_1d(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let beats = |a: usize, b: usize| values[a] > values[b] || (values[a] == values[b] && a < b);
    (0..n)
        .filter(|&l| {
            values[l] > 0.0
                && [(l + n - 1) % n, (l + 1) % n]
                    .into_iter()
                    .filter(|&j| j != l)
                    .all(|j| beats(l, j))
        })
        .collect()
}

/// Peaks of the coarse angle spectrum: the `expected` largest local maxima
/// if given, otherwise every local maximum at or above `rel_threshold` times
/// the largest one. The second value lists aliased bins that were dropped.
pub fn coarse_angles(
    spectrum: &AngleSpectrum,
    expected: Option<usize>,
    rel_threshold: f64,
) -> (Vec<CoarsePeak>, Vec<usize>) {
    let mags = &spectrum.magnitudes;
    let mut maxima = local_maxima_1d(mags);
    maxima.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    let top = maxima.first().map_or(0.0, |&l| mags[l]);
    let kept: Vec<usize> = match expected {
        Some(k) => maxima.into_iter().take(k).collect(),
        None => maxima.into_iter().filter(|&l| mags[l] >= rel_threshold * top).collect(),
    };
    let mut peaks = Vec::new();
    let mut aliased = Vec::new();
    for bin in kept {
        match spectrum.sine(bin) {
            Some(sine) => peaks.push(CoarsePeak {
                bin,
                signed_bin: signed_bin(bin, mags.len()),
                sine,
                theta_deg: sine.asin().to_degrees(),
                magnitude: mags[bin],
            }),
            None => aliased.push(bin),
        }
    }
    peaks.sort_by(|a, b| a.sine.total_cmp(&b.sine));
    (peaks, aliased)
}

/// Receive-array DFT bin nearest to spatial frequency `d_r sinθ (f_c+iΔ)/f_c`.
pub fn spatial_bin(cfg: &SystemConfig, sine: f64, subcarrier: usize, fft_size: usize) -> usize {
    let b = (fft_size as f64 * cfg.rx_spacing_wl * sine * cfg.freq_ratio(subcarrier)).round() as i64;
    b.rem_euclid(fft_size as i64) as usize
}

/// `Â(k,i,µ)` for each angle: the receive-array DFT at the bin nearest to
/// the target's spatial frequency on subcarrier `i`, divided by `N_r`.
/// Returns one row of `N_s` values per angle.
pub fn extract_amplitudes(
    cube: &RadarCube,
    cfg: &SystemConfig,
    sines: &[f64],
    mu: usize,
    fft_size: usize,
) -> Vec<Vec<Complex64>> {
    let nr = cube.num_rx();
    let ns = cube.num_subcarriers();
    sines
        .iter()
        .map(|&sine| {
            let mut twiddles = Vec::new();
            let mut current = usize::MAX;
            (0..ns)
                .map(|i| {
                    let b = spatial_bin(cfg, sine, i, fft_size);
                    if b != current {
                        current = b;
                        twiddles = (0..nr).map(|m| cis_cycles((m * b) as f64 / fft_size as f64)).collect();
                    }
                    let s: Complex64 = cube.snapshot(i, mu).iter().zip(&twiddles).map(|(x, w)| x * w).sum();
                    s / nr as f64
                })
                .collect()
        })
        .collect()
}

/// `A'(k,i,µ) = Σ_n d_Tx(n,i,µ) e^{-j2π n d_t sinθ (f_c+iΔ)/c}` over all
/// subcarriers, using the transmitter's own symbols.
pub fn reference_amplitude(frame: &SymbolFrame, cfg: &SystemConfig, sine: f64, mu: usize) -> Vec<Complex64> {
    let pattern = frame.pattern(mu).indices();
    (0..frame.num_subcarriers())
        .map(|i| {
            let ratio = cfg.freq_ratio(i);
            pattern
                .iter()
                .enumerate()
                .map(|(pos, &n)| {
                    frame.active_row(mu, pos)[i] * cis_cycles(-(n as f64) * cfg.tx_spacing_wl * sine * ratio)
                })
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Division {
    pub values: Vec<Complex64>,
    /// Entries whose reference magnitude fell below the threshold; their
    /// value is zero.
    pub masked: Vec<bool>,
    pub masked_count: usize,
    pub ill_conditioned: bool,
}

/// Element-wise `a / a_ref`. References smaller than `1e-6` times their
/// median magnitude are masked to zero instead of amplified.
pub fn divide_out(a: &[Complex64], a_ref: &[Complex64]) -> Result<Division, EstimatorError> {
    if a.len() != a_ref.len() {
        return Err(EstimatorError::Shape(format!("{} amplitudes vs {} references", a.len(), a_ref.len())));
    }
    let mut mags: Vec<f64> = a_ref.iter().map(|v| v.norm()).collect();
    let eps = 1e-6 * median(&mut mags);
    let mut masked = vec![false; a.len()];
    let mut masked_count = 0;
    let values = a
        .iter()
        .zip(a_ref)
        .zip(masked.iter_mut())
        .map(|((x, r), flag)| {
            let m = r.norm();
            if m < eps || m == 0.0 {
                *flag = true;
                masked_count += 1;
                Complex64::new(0.0, 0.0)
            } else {
                x / r
            }
        })
        .collect();
    let ill_conditioned = masked_count as f64 > ILL_CONDITIONED_FRACTION * a.len() as f64;
    Ok(Division { values, masked, masked_count, ill_conditioned })
}
