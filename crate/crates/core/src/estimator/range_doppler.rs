use num_complex::Complex64;
use serde::Serialize;

use super::EstimatorError;
use crate::dsp::{signed_doppler_bin, FftPair};

/// `|Σ_µ e^{-j2πµp/N_p} (1/N_s) Σ_i d(i,µ) e^{+j2πil/N_s}|`, stored with the
/// Doppler index fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeDopplerMap {
    pub num_range: usize,
    pub num_doppler: usize,
    pub magnitudes: Vec<f64>,
}

impl RangeDopplerMap {
    pub fn get(&self, l: usize, p: usize) -> f64 {
        self.magnitudes[l * self.num_doppler + p]
    }
}

/// Range-Doppler magnitude map of data-free symbols `d`, laid out as
/// `d[µ·N_s + i]`.
pub fn range_doppler_map(d: &[Complex64], ns: usize, np: usize) -> Result<RangeDopplerMap, EstimatorError> {
    if d.len() != ns * np {
        return Err(EstimatorError::Shape(format!("{} values for {ns} subcarriers x {np} symbols", d.len())));
    }
    let along_i = FftPair::new(ns);
    let mut rows = d.to_vec();
    for row in rows.chunks_exact_mut(ns) {
        along_i.inverse.process(row);
    }
    let along_mu = FftPair::new(np);
    let mut cols = vec![Complex64::new(0.0, 0.0); ns * np];
    for (mu, row) in rows.chunks_exact(ns).enumerate() {
        for (l, v) in row.iter().enumerate() {
            cols[l * np + mu] = v / ns as f64;
        }
    }
    for col in cols.chunks_exact_mut(np) {
        along_mu.forward.process(col);
    }
    Ok(RangeDopplerMap { num_range: ns, num_doppler: np, magnitudes: cols.iter().map(|v| v.norm()).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub range_bin: usize,
    /// Signed Doppler bin in `(-N_p/2, N_p/2]`.
    pub doppler_bin: i64,
    pub magnitude: f64,
}

/// Cyclic 2-D local maxima of `map` (8-neighbourhood, ties to the lower flat
/// index). Keeps the `expected` strongest if given, otherwise all maxima at or
/// above `rel_threshold` times the strongest. Sorted by decreasing magnitude.
pub fn detect_targets(map: &RangeDopplerMap, expected: Option<usize>, rel_threshold: f64) -> Vec<Detection> {
    let (nl, np) = (map.num_range, map.num_doppler);
    let v = &map.magnitudes;
    let mut maxima = Vec::new();
    for l in 0..nl {
        for p in 0..np {
            let idx = l * np + p;
            let here = v[idx];
            if here <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'scan: for dl in [nl - 1, 0, 1] {
                for dp in [np - 1, 0, 1] {
                    let j = ((l + dl) % nl) * np + (p + dp) % np;
                    if j == idx {
                        continue;
                    }
                    if v[j] > here || (v[j] == here && j < idx) {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                maxima.push(idx);
            }
        }
    }
    maxima.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let top = maxima.first().map_or(0.0, |&i| v[i]);
    let kept: Vec<usize> = match expected {
        Some(k) => maxima.into_iter().take(k).collect(),
        None => maxima.into_iter().filter(|&i| v[i] >= rel_threshold * top).collect(),
    };
    kept.into_iter()
        .map(|idx| Detection {
            range_bin: idx / np,
            doppler_bin: signed_doppler_bin(idx % np, np),
            magnitude: v[idx],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::cis_cycles;

    fn tone(ns: usize, np: usize, targets: &[(f64, f64)]) -> Vec<Complex64> {
        let mut d = vec![Complex64::new(0.0, 0.0); ns * np];
        for &(range_cycles, doppler_cycles) in targets {
            for mu in 0..np {
                for i in 0..ns {
                    d[mu * ns + i] += cis_cycles(-(i as f64) * range_cycles + mu as f64 * doppler_cycles);
                }
            }
        }
        d
    }

    #[test]
    fn table1_bins() {
        // 2RΔ/c and T_p f_d at full scale
        let (ns, np) = (1024, 256);
        let cases = [((50.0, 5.0), (34, 3)), ((45.0, 10.0), (31, 5)), ((80.0, 7.0), (55, 4))];
        for ((r, v), (l, p)) in cases {
            let d = tone(ns, np, &[(1e5 * 2.0 * r / 3e8, 12.5e-6 * 2.0 * v * 24e9 / 3e8)]);
            let map = range_doppler_map(&d, ns, np).unwrap();
            let det = detect_targets(&map, Some(1), 0.5);
            assert_eq!((det[0].range_bin, det[0].doppler_bin), (l, p));
        }
    }

    #[test]
    fn on_grid_tone_is_a_single_impulse() {
        let (ns, np) = (32, 8);
        let d = tone(ns, np, &[(5.0 / 32.0, -2.0 / 8.0)]);
        let map = range_doppler_map(&d, ns, np).unwrap();
        assert!((map.get(5, 6) - np as f64).abs() < 1e-9);
        let det = detect_targets(&map, None, 0.5);
        assert_eq!(det.len(), 1);
        assert_eq!((det[0].range_bin, det[0].doppler_bin), (5, -2));
    }

    #[test]
    fn two_ranges_two_detections() {
        let (ns, np) = (1024, 256);
        let f = |r: f64, v: f64| (1e5 * 2.0 * r / 3e8, 12.5e-6 * 2.0 * v * 24e9 / 3e8);
        let d = tone(ns, np, &[f(50.0, 5.0), f(80.0, 7.0)]);
        let map = range_doppler_map(&d, ns, np).unwrap();
        let mut got: Vec<usize> = detect_targets(&map, None, 0.5).iter().map(|d| d.range_bin).collect();
        got.sort_unstable();
        assert_eq!(got, vec![34, 55]);
    }

    #[test]
    fn empty_map_has_no_detections() {
        let map = range_doppler_map(&vec![Complex64::new(0.0, 0.0); 64], 16, 4).unwrap();
        assert!(detect_targets(&map, None, 0.5).is_empty());
        assert!(detect_targets(&map, Some(3), 0.5).is_empty());
    }

    #[test]
    fn nyquist_doppler_is_positive() {
        let (ns, np) = (8, 8);
        let d = tone(ns, np, &[(0.0, 0.5)]);
        let det = detect_targets(&range_doppler_map(&d, ns, np).unwrap(), Some(1), 0.5);
        assert_eq!(det[0].doppler_bin, 4);
    }
}
