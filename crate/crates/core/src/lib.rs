//! Joint OFDM-MIMO radar and communication simulator.
//!
//! A transmit array with generalized spatial modulation sends OFDM symbols
//! that serve a communication user and, through their echoes, a radar
//! receiver. Private subcarriers (one active antenna each) give the radar a
//! virtual array and the user an easy view of the active antennas. See the
//! guide in `book/` for a walk-through.

pub mod comm;
pub mod config;
pub mod dsp;
pub mod dump;
pub mod estimator;
pub mod frame;
pub mod gsm;
pub mod harness;
pub mod qam;
pub mod radar_sim;
pub mod seed;
pub mod sparse;
pub mod waveform;

pub use config::{SystemConfig, TargetSpec};
pub use estimator::{run_pipeline, PipelineOptions, TargetEstimate};
pub use frame::{random_frame, PrivatePeriod, SymbolFrame};
pub use radar_sim::{simulate_rx, RadarCube};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system.md")]
    mod system {}
    #[doc = include_str!("../../../book/src/frames.md")]
    mod frames {}
    #[doc = include_str!("../../../book/src/radar.md")]
    mod radar {}
    #[doc = include_str!("../../../book/src/virtual_array.md")]
    mod virtual_array {}
    #[doc = include_str!("../../../book/src/comm.md")]
    mod comm {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
