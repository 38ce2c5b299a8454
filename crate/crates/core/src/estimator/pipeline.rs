use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::angle::{angle_spectrum, coarse_angles, divide_out, extract_amplitudes, reference_amplitude, spatial_bin};
use super::range_doppler::{detect_targets, range_doppler_map};
use super::virtual_array::{build_dictionary, build_virtual, refine_angles, AngleGrid, RefineOptions, Refinement};
use super::{sort_estimates, AngleSpectrum, EstimatorError, TargetEstimate};
use crate::config::SystemConfig;
use crate::dsp::signed_bin;
use crate::frame::SymbolFrame;
use crate::radar_sim::RadarCube;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    /// Subcarrier and symbol of the coarse angle spectrum.
    pub coarse_subcarrier: usize,
    pub coarse_symbol: usize,
    /// Receive-array FFT length; `N_r` when unset.
    pub fft_size: Option<usize>,
    pub coarse_expected: Option<usize>,
    pub coarse_threshold: f64,
    pub detect_expected: Option<usize>,
    pub detect_threshold: f64,
    /// Symbol whose private subcarriers form the virtual snapshot.
    pub virtual_symbol: usize,
    pub grid_size: usize,
    pub refine: RefineOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            coarse_subcarrier: 0,
            coarse_symbol: 0,
            fft_size: None,
            coarse_expected: None,
            coarse_threshold: 0.4,
            detect_expected: None,
            detect_threshold: 0.5,
            virtual_symbol: 0,
            grid_size: 181,
            refine: RefineOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub coarse_spectrum: AngleSpectrum,
    pub coarse: Vec<TargetEstimate>,
    /// `None` when the frame has no private subcarriers at the virtual
    /// symbol or nothing was detected.
    pub refinement: Option<Refinement>,
    pub grid: AngleGrid,
    pub refined: Vec<TargetEstimate>,
    pub warnings: Vec<String>,
}

struct AngleResult {
    estimates: Vec<TargetEstimate>,
    warning: Option<String>,
}

/// Range and velocity of every target at one arrival angle: extract the
/// amplitudes on all symbols, divide out the transmitted data, and pick the
/// range-Doppler peaks.
fn estimate_at_angle(
    cube: &RadarCube,
    frame: &SymbolFrame,
    cfg: &SystemConfig,
    opts: &PipelineOptions,
    fft_size: usize,
    theta_deg: f64,
    refined: bool,
) -> Result<AngleResult, EstimatorError> {
    let sine = theta_deg.to_radians().sin();
    let (ns, np) = (cube.num_subcarriers(), cube.num_symbols());
    let mut amps = Vec::with_capacity(ns * np);
    let mut refs = Vec::with_capacity(ns * np);
    for mu in 0..np {
        amps.extend(extract_amplitudes(cube, cfg, &[sine], mu, fft_size).remove(0));
        refs.extend(reference_amplitude(frame, cfg, sine, mu));
    }
    let div = divide_out(&amps, &refs)?;
    let warning = div.ill_conditioned.then(|| {
        format!("ill-conditioned division at {theta_deg:.2} deg: {} of {} entries masked", div.masked_count, ns * np)
    });
    let map = range_doppler_map(&div.values, ns, np)?;
    let derived = cfg.derive();
    let angle_bin = signed_bin(spatial_bin(cfg, sine, opts.coarse_subcarrier, fft_size), fft_size);
    let estimates = detect_targets(&map, opts.detect_expected, opts.detect_threshold)
        .into_iter()
        .map(|d| TargetEstimate {
            theta_deg,
            range_m: d.range_bin as f64 * derived.range_bin,
            velocity_mps: d.doppler_bin as f64 * derived.velocity_bin,
            angle_bin,
            range_bin: d.range_bin,
            doppler_bin: d.doppler_bin,
            refined,
        })
        .collect();
    Ok(AngleResult { estimates, warning })
}

#[allow(clippy::too_many_arguments)]
fn estimate_all(
    cube: &RadarCube,
    frame: &SymbolFrame,
    cfg: &SystemConfig,
    opts: &PipelineOptions,
    fft_size: usize,
    angles: &[f64],
    refined: bool,
    warnings: &mut Vec<String>,
) -> Result<Vec<TargetEstimate>, EstimatorError> {
    let results: Vec<AngleResult> = angles
        .par_iter()
        .map(|&theta| estimate_at_angle(cube, frame, cfg, opts, fft_size, theta, refined))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for r in results {
        warnings.extend(r.warning);
        out.extend(r.estimates);
    }
    sort_estimates(&mut out);
    Ok(out)
}

/// Coarse angle spectrum → per-angle range-Doppler detection → virtual-array
/// refinement → detection again at the refined angles.
pub fn run_pipeline(
    cube: &RadarCube,
    frame: &SymbolFrame,
    cfg: &SystemConfig,
    opts: &PipelineOptions,
) -> Result<PipelineReport, EstimatorError> {
    if cube.dims() != (cfg.num_radar_rx, cfg.num_subcarriers, cfg.num_symbols)
        || frame.num_subcarriers() != cfg.num_subcarriers
        || frame.num_symbols() != cfg.num_symbols
    {
        return Err(EstimatorError::Shape("cube, frame and configuration disagree".into()));
    }
    let fft_size = opts.fft_size.unwrap_or(cfg.num_radar_rx);
    let mut warnings = Vec::new();
    let spectrum = angle_spectrum(cube, cfg, opts.coarse_subcarrier, opts.coarse_symbol, fft_size);
    let (peaks, aliased) = coarse_angles(&spectrum, opts.coarse_expected, opts.coarse_threshold);
    for bin in aliased {
        warnings.push(format!("coarse bin {bin} maps outside [-90, 90] deg; dropped"));
    }
    let coarse_thetas: Vec<f64> = peaks.iter().map(|p| p.theta_deg).collect();
    let coarse = estimate_all(cube, frame, cfg, opts, fft_size, &coarse_thetas, false, &mut warnings)?;

    let grid = AngleGrid::uniform(opts.grid_size);
    let mut refinement = None;
    let mut refined = Vec::new();
    if !coarse.is_empty() {
        match build_virtual(cube, frame, opts.virtual_symbol) {
            Ok(snapshot) => {
                let mut range_bins: Vec<usize> = coarse.iter().map(|e| e.range_bin).collect();
                range_bins.sort_unstable();
                range_bins.dedup();
                let ranges: Vec<f64> = range_bins.iter().map(|&l| l as f64 * cfg.derive().range_bin).collect();
                let dict = build_dictionary(cfg, &snapshot.pairs, snapshot.num_rx, &ranges, &grid)?;
                let r = refine_angles(&snapshot, &dict, &opts.refine)?;
                if !r.solution.converged {
                    warnings.push("angle refinement solver hit its iteration limit".into());
                }
                let thetas: Vec<f64> = r.angles.iter().map(|a| a.theta_deg).collect();
                refined = estimate_all(cube, frame, cfg, opts, fft_size, &thetas, true, &mut warnings)?;
                refinement = Some(r);
            }
            Err(EstimatorError::NoPrivateMap(mu)) => {
                warnings.push(format!("no private subcarriers at symbol {mu}; refinement skipped"));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PipelineReport { coarse_spectrum: spectrum, coarse, refinement, grid, refined, warnings })
}
