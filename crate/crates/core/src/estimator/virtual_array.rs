use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::angle::local_maxima_1d;
use super::EstimatorError;
use crate::config::SystemConfig;
use crate::dsp::cis_cycles;
use crate::frame::{PrivatePair, SymbolFrame};
use crate::radar_sim::RadarCube;
use crate::sparse::{fista_bpdn, normalize_columns, omp, CMatrix, CVector, FistaOptions, SparseSolution, Stop};

/// Virtual-array measurement from the private subcarriers of one symbol.
/// Entry `pos·N_r + m` is `d_Rx(m, i_n, µ) / d_Tx(n, i_n, µ)` where `n` is the
/// `pos`-th active antenna and `i_n` its private subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualSnapshot {
    pub v: Vec<Complex64>,
    pub mu: usize,
    pub pairs: Vec<PrivatePair>,
    pub num_rx: usize,
}

pub fn build_virtual(cube: &RadarCube, frame: &SymbolFrame, mu: usize) -> Result<VirtualSnapshot, EstimatorError> {
    let pairs = frame.private_map(mu).ok_or(EstimatorError::NoPrivateMap(mu))?.to_vec();
    let nr = cube.num_rx();
    let mut v = Vec::with_capacity(pairs.len() * nr);
    for pair in &pairs {
        let d = frame.d_tx(pair.antenna, pair.subcarrier, mu);
        v.extend(cube.snapshot(pair.subcarrier, mu).iter().map(|x| x / d));
    }
    Ok(VirtualSnapshot { v, mu, pairs, num_rx: nr })
}

/// Candidate arrival angles, uniform over `[-90°, 90°]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub angles_deg: Vec<f64>,
}

impl AngleGrid {
    pub fn uniform(size: usize) -> Self {
        let angles_deg = match size {
            0 => Vec::new(),
            1 => vec![0.0],
            n => (0..n).map(|a| -90.0 + 180.0 * a as f64 / (n - 1) as f64).collect(),
        };
        Self { angles_deg }
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }
}

/// Unit-norm steering dictionary over (angle, range) pairs. Column
/// `a·N_R + j` models a target at `grid[a]`, `ranges[j]`; row `pos·N_r + m`
/// carries `e^{-j2π i_n Δ 2R/c} e^{-j2π (n d_t + m d_r) sinθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub matrix: CMatrix,
    /// Column norms before normalization.
    pub norms: Vec<f64>,
    pub grid: AngleGrid,
    pub ranges: Vec<f64>,
}

impl Dictionary {
    pub fn column_of(&self, angle: usize, range: usize) -> usize {
        angle * self.ranges.len() + range
    }
}

pub fn build_dictionary(
    cfg: &SystemConfig,
    pairs: &[PrivatePair],
    num_rx: usize,
    ranges: &[f64],
    grid: &AngleGrid,
) -> Result<Dictionary, EstimatorError> {
    if ranges.is_empty() {
        return Err(EstimatorError::NoRanges);
    }
    let nk = ranges.len();
    let rows = pairs.len() * num_rx;
    let mut matrix = CMatrix::zeros(rows, grid.len() * nk);
    for (a, theta) in grid.angles_deg.iter().enumerate() {
        let sine = theta.to_radians().sin();
        for (j, range) in ranges.iter().enumerate() {
            let col = a * nk + j;
            for (pos, pair) in pairs.iter().enumerate() {
                let delay = -(pair.subcarrier as f64) * cfg.subcarrier_spacing_hz * 2.0 * range / cfg.speed_of_light;
                let tx = -(pair.antenna as f64) * cfg.tx_spacing_wl * sine;
                for m in 0..num_rx {
                    let rx = -(m as f64) * cfg.rx_spacing_wl * sine;
                    matrix[(pos * num_rx + m, col)] = cis_cycles(delay + tx + rx);
                }
            }
        }
    }
    let norms = normalize_columns(&mut matrix);
    Ok(Dictionary { matrix, norms, grid: grid.clone(), ranges: ranges.to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    #[default]
    Omp,
    Fista,
}

impl std::str::FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "omp" => Ok(Self::Omp),
            "fista" => Ok(Self::Fista),
            other => Err(format!("unknown solver `{other}` (expected omp or fista)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineOptions {
    pub solver: SolverChoice,
    /// Fixed number of OMP atoms; otherwise OMP runs to `residual_rel`.
    pub expected_k: Option<usize>,
    /// OMP stops once `‖r‖ ≤ residual_rel · ‖v‖`.
    pub residual_rel: f64,
    /// FISTA weight as a fraction of `‖Aᴴv‖_∞`.
    pub lambda_rel: f64,
    /// Angles whose coefficient magnitude reaches this fraction of the
    /// largest are reported.
    pub threshold: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { solver: SolverChoice::Omp, expected_k: None, residual_rel: 0.05, lambda_rel: 0.05, threshold: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinedAngle {
    pub grid_index: usize,
    pub theta_deg: f64,
    /// Range of the strongest coefficient at this angle.
    pub range_m: f64,
    /// `|β̃|`, amplitude in the units of the unnormalized steering vector.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub solution: SparseSolution,
    /// Largest `|β̃|` over ranges at each grid angle.
    pub spectrum: Vec<f64>,
    pub angles: Vec<RefinedAngle>,
}

/// Sparse fit of the virtual snapshot over the dictionary. Reported angles
/// are local maxima of the per-angle coefficient magnitude at or above
/// `threshold` times the largest.
pub fn refine_angles(snapshot: &VirtualSnapshot, dict: &Dictionary, opts: &RefineOptions) -> Result<Refinement, EstimatorError> {
    let y = CVector::from_column_slice(&snapshot.v);
    let a = &dict.matrix;
    let solution = match opts.solver {
        SolverChoice::Omp => {
            let limit = a.nrows().min(a.ncols());
            let stop = match opts.expected_k {
                Some(k) => Stop::atoms(k.min(limit)),
                None => Stop { max_atoms: Some(limit), tolerance: Some(opts.residual_rel * y.norm()) },
            };
            omp(a, &y, stop)?
        }
        SolverChoice::Fista => {
            let corr = a.ad_mul(&y).iter().map(|c| c.norm()).fold(0.0, f64::max);
            if corr == 0.0 {
                omp(a, &y, Stop::atoms(0))?
            } else {
                fista_bpdn(a, &y, opts.lambda_rel * corr, FistaOptions::default())?
            }
        }
    };
    let nk = dict.ranges.len();
    let mut spectrum = vec![0.0; dict.grid.len()];
    let mut best_range = vec![0usize; dict.grid.len()];
    for (s, &col) in solution.support.iter().enumerate() {
        let beta = solution.coefficients[0][s].norm() / dict.norms[col];
        let (angle, range) = (col / nk, col % nk);
        if beta > spectrum[angle] {
            spectrum[angle] = beta;
            best_range[angle] = range;
        }
    }
    let top = spectrum.iter().copied().fold(0.0, f64::max);
    let angles = local_maxima_linear(&spectrum)
        .into_iter()
        .filter(|&a| spectrum[a] >= opts.threshold * top)
        .map(|a| RefinedAngle {
            grid_index: a,
            theta_deg: dict.grid.angles_deg[a],
            range_m: dict.ranges[best_range[a]],
            magnitude: spectrum[a],
        })
        .collect();
    Ok(Refinement { solution, spectrum, angles })
}

/// Local maxima without wrap-around (the angle grid ends at ±90°).
fn local_maxima_linear(values: &[f64]) -> Vec<usize> {
    let mut padded = values.to_vec();
    padded.push(0.0);
    local_maxima_1d(&padded).into_iter().filter(|&a| a < values.len()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TargetSpec;
    use crate::frame::{random_frame, PrivatePeriod};
    use crate::radar_sim::simulate_rx;

    fn cfg() -> SystemConfig {
        SystemConfig { num_subcarriers: 64, num_symbols: 2, ..SystemConfig::table1() }
    }

    #[test]
    fn snapshot_layout_and_phase() {
        let cfg = cfg();
        let frame = random_frame(&cfg, PrivatePeriod::EverySymbol, 4).unwrap();
        let t = TargetSpec::new(12.0, 30.0, 4.0);
        let cube = simulate_rx(&frame, &[t], &cfg).unwrap();
        let snap = build_virtual(&cube, &frame, 1).unwrap();
        assert_eq!(snap.v.len(), 250);
        let fd = cfg.doppler_hz(t.velocity_mps);
        for (pos, pair) in snap.pairs.iter().enumerate() {
            let ratio = cfg.freq_ratio(pair.subcarrier);
            for m in 0..50 {
                let spatial = -(pair.antenna as f64 * cfg.tx_spacing_wl + m as f64 * cfg.rx_spacing_wl) * t.sin_theta() * ratio;
                let want = cis_cycles(
                    spatial - pair.subcarrier as f64 * cfg.subcarrier_spacing_hz * 2.0 * t.range_m / cfg.speed_of_light
                        + cfg.symbol_duration_s * fd,
                );
                assert!((snap.v[pos * 50 + m] - want).norm() < 1e-9);
            }
        }
        let plain = random_frame(&cfg, PrivatePeriod::Never, 4).unwrap();
        assert!(matches!(build_virtual(&cube, &plain, 0), Err(EstimatorError::NoPrivateMap(0))));
    }

    #[test]
    fn dictionary_shape_and_norms() {
        let cfg = cfg();
        let frame = random_frame(&cfg, PrivatePeriod::EverySymbol, 5).unwrap();
        let pairs = frame.private_map(0).unwrap();
        let grid = AngleGrid::uniform(181);
        assert_eq!(grid.angles_deg[90], 0.0);
        assert_eq!(grid.angles_deg[97], 7.0);
        let dict = build_dictionary(&cfg, pairs, 50, &[0.0, 45.0], &grid).unwrap();
        assert_eq!(dict.matrix.shape(), (250, 362));
        for col in dict.matrix.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        assert!(dict.norms.iter().all(|n| (n - 250f64.sqrt()).abs() < 1e-9));
        // zero angle and zero range: constant column
        let c = dict.matrix.column(dict.column_of(90, 0));
        assert!(c.iter().all(|v| (v - c[0]).norm() < 1e-12));
        assert!(build_dictionary(&cfg, pairs, 50, &[], &grid).is_err());
    }

    fn resolve(solver: SolverChoice) -> Vec<f64> {
        let cfg = cfg();
        let frame = random_frame(&cfg, PrivatePeriod::EverySymbol, 6).unwrap();
        let targets = [TargetSpec::new(5.0, 50.0, 5.0), TargetSpec::new(7.0, 50.0, 5.0)];
        let cube = simulate_rx(&frame, &targets, &cfg).unwrap();
        let snap = build_virtual(&cube, &frame, 0).unwrap();
        let dict = build_dictionary(&cfg, &snap.pairs, 50, &[49.8], &AngleGrid::uniform(181)).unwrap();
        let opts = RefineOptions { solver, ..RefineOptions::default() };
        let r = refine_angles(&snap, &dict, &opts).unwrap();
        r.angles.iter().map(|a| a.theta_deg).collect()
    }

    #[test]
    fn omp_resolves_close_pair() {
        assert_eq!(resolve(SolverChoice::Omp), vec![5.0, 7.0]);
    }

    #[test]
    fn fista_resolves_close_pair() {
        assert_eq!(resolve(SolverChoice::Fista), vec![5.0, 7.0]);
    }

    #[test]
    fn solver_names_parse() {
        assert_eq!("omp".parse::<SolverChoice>().unwrap(), SolverChoice::Omp);
        assert_eq!("fista".parse::<SolverChoice>().unwrap(), SolverChoice::Fista);
        assert!("lasso".parse::<SolverChoice>().is_err());
    }
}
