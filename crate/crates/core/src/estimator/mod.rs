//! Radar processing chain: receive-array angle spectrum, amplitude
//! extraction, removal of the transmitted data, range-Doppler maps, and
//! virtual-array angle refinement.

mod angle;
mod pipeline;
mod range_doppler;
mod virtual_array;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use angle::{
    angle_spectrum, coarse_angles, divide_out, extract_amplitudes, reference_amplitude, spatial_bin, AngleSpectrum,
    CoarsePeak, Division,
};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineReport};
pub use range_doppler::{detect_targets, range_doppler_map, Detection, RangeDopplerMap};
pub use virtual_array::{
    build_dictionary, build_virtual, refine_angles, AngleGrid, Dictionary, RefineOptions, RefinedAngle, Refinement,
    SolverChoice, VirtualSnapshot,
};

use crate::sparse::SparseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no private subcarrier map at symbol {0}")]
    NoPrivateMap(usize),
    #[error("dictionary needs at least one range")]
    NoRanges,
    #[error("sparse solver: {0}")]
    Solver(#[from] SparseError),
}

/// One detected target. Range and velocity sit on the bin grid:
/// `range_m = range_bin · Δ_R` and `velocity_mps = doppler_bin · Δ_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub theta_deg: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
    /// Signed receive-array DFT bin used for amplitude extraction at the
    /// reference subcarrier.
    pub angle_bin: i64,
    pub range_bin: usize,
    /// Signed, in `(-N_p/2, N_p/2]`.
    pub doppler_bin: i64,
    pub refined: bool,
}

/// Orders estimates by angle, then range, then velocity.
pub(crate) fn sort_estimates(list: &mut [TargetEstimate]) {
    list.sort_by(|a, b| {
        a.theta_deg
            .total_cmp(&b.theta_deg)
            .then(a.range_bin.cmp(&b.range_bin))
            .then(a.doppler_bin.cmp(&b.doppler_bin))
    });
}
