//! Scenario files, deterministic experiment runs, and CSV/JSON emission.

mod emit;
mod run;
mod scenario;

use thiserror::Error;

pub use emit::{emit, CSV_FILES};
pub use run::{run_ber_sweep, run_demo_virtual, run_radar, run_rates, BerRow, RateRow, RunReport, SpectrumRow};
pub use scenario::{CommSection, Decoder, Profile, RadarSection, Scenario, SystemOverrides};

/// Failures tagged with the stage that produced them.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("[scenario] {0}")]
    Scenario(String),
    #[error("[config] {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("[frame] {0}")]
    Frame(#[from] crate::frame::FrameError),
    #[error("[radar-sim] {0}")]
    Simulation(#[from] crate::radar_sim::SimError),
    #[error("[radar-estimator] {0}")]
    Estimation(#[from] crate::estimator::EstimatorError),
    #[error("[comm-link] {0}")]
    Comm(#[from] crate::comm::CommError),
    #[error("[emit] {path}: {message}")]
    Io { path: String, message: String },
}
