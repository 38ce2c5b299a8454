//! System parameters and the radar quantities derived from them.
//!
//! Everything downstream reads a [`SystemConfig`] that has passed
//! [`SystemConfig::validate`]. Angles cross the public API in degrees; array
//! spacings are expressed in carrier wavelengths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Propagation speed used throughout. Chosen as exactly 3e8 so that range and
/// velocity bins come out as round multiples (34 x 1.46484 m = 49.80 m).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Relative slack allowed when checking `T_p - T_cp == 1 / delta`.
const DURATION_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("CP/symbol-duration mismatch: T_p - T_cp = {useful_s:e} s but 1/delta = {expected_s:e} s")]
    DurationMismatch { useful_s: f64, expected_s: f64 },
    #[error("N_x exceeds N_t ({num_active} > {num_tx})")]
    ActiveExceedsTx { num_active: usize, num_tx: usize },
    #[error("N_x = {0} is below the minimum active-antenna count")]
    TooFewActive(usize),
    #[error("N_s ({num_subcarriers}) must be at least N_x ({num_active})")]
    TooFewSubcarriers { num_subcarriers: usize, num_active: usize },
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("{0} must be strictly positive and finite")]
    NonPositive(&'static str),
    #[error("QAM order {0} is not a square power of two (4, 16, 64, ...)")]
    QamOrder(usize),
    #[error("target {index}: {reason}")]
    Target { index: usize, reason: String },
}

/// All system parameters. Field names follow the role of each quantity; the
/// conventional symbols are given in the docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Carrier frequency `f_c`, Hz.
    pub carrier_hz: f64,
    /// Subcarrier spacing `Δ`, Hz.
    pub subcarrier_spacing_hz: f64,
    /// Full OFDM symbol duration `T_p` including the cyclic prefix, s.
    pub symbol_duration_s: f64,
    /// Cyclic prefix duration `T_cp`, s.
    pub cyclic_prefix_s: f64,
    /// `N_s`
    pub num_subcarriers: usize,
    /// `N_p`, OFDM symbols per frame.
    pub num_symbols: usize,
    /// `N_t`
    pub num_tx: usize,
    /// `N_x`, active transmit antennas per OFDM symbol.
    pub num_active: usize,
    /// `N_r`
    pub num_radar_rx: usize,
    /// `N_c`
    pub num_comm_rx: usize,
    /// Transmit element spacing `d_t`, in wavelengths.
    pub tx_spacing_wl: f64,
    /// Receive element spacing `d_r`, in wavelengths.
    pub rx_spacing_wl: f64,
    pub speed_of_light: f64,
    pub qam_order: usize,
    /// Pin antennas `0` and `N_t - 1` into every activation pattern.
    pub fixed_endpoints: bool,
}

impl SystemConfig {
    /// The full-scale parameter set: 24 GHz carrier, 1024 subcarriers at
    /// 100 kHz, 256 symbols, 32 transmit antennas of which 5 are active.
    pub fn table1() -> Self {
        Self {
            carrier_hz: 24.0e9,
            subcarrier_spacing_hz: 100.0e3,
            symbol_duration_s: 12.5e-6,
            cyclic_prefix_s: 2.5e-6,
            num_subcarriers: 1024,
            num_symbols: 256,
            num_tx: 32,
            num_active: 5,
            num_radar_rx: 50,
            num_comm_rx: 16,
            tx_spacing_wl: 1.0,
            rx_spacing_wl: 0.5,
            speed_of_light: SPEED_OF_LIGHT,
            qam_order: 16,
            fixed_endpoints: true,
        }
    }

    /// Reduced profile for fast runs; same RF numerology as [`Self::table1`].
    pub fn desk() -> Self {
        Self {
            num_subcarriers: 128,
            num_symbols: 32,
            num_tx: 16,
            num_active: 4,
            num_radar_rx: 16,
            ..Self::table1()
        }
    }

    /// Returns `self` unchanged if every invariant holds, otherwise the first
    /// violated one.
    pub fn validate(self) -> Result<Self, ConfigError> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("subcarrier_spacing_hz", self.subcarrier_spacing_hz),
            ("symbol_duration_s", self.symbol_duration_s),
            ("tx_spacing_wl", self.tx_spacing_wl),
            ("rx_spacing_wl", self.rx_spacing_wl),
            ("speed_of_light", self.speed_of_light),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if !(self.cyclic_prefix_s.is_finite() && self.cyclic_prefix_s >= 0.0) {
            return Err(ConfigError::NonPositive("cyclic_prefix_s"));
        }
        let useful_s = self.symbol_duration_s - self.cyclic_prefix_s;
        let expected_s = 1.0 / self.subcarrier_spacing_hz;
        if ((useful_s - expected_s) / expected_s).abs() > DURATION_RTOL {
            return Err(ConfigError::DurationMismatch { useful_s, expected_s });
        }
        let counts = [
            ("num_subcarriers", self.num_subcarriers),
            ("num_symbols", self.num_symbols),
            ("num_tx", self.num_tx),
            ("num_radar_rx", self.num_radar_rx),
            ("num_comm_rx", self.num_comm_rx),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(ConfigError::ZeroCount(name));
            }
        }
        if self.num_active > self.num_tx {
            return Err(ConfigError::ActiveExceedsTx {
                num_active: self.num_active,
                num_tx: self.num_tx,
            });
        }
        let min_active = if self.fixed_endpoints { 2 } else { 1 };
        if self.num_active < min_active {
            return Err(ConfigError::TooFewActive(self.num_active));
        }
        if self.num_subcarriers < self.num_active {
            return Err(ConfigError::TooFewSubcarriers {
                num_subcarriers: self.num_subcarriers,
                num_active: self.num_active,
            });
        }
        if !is_square_qam(self.qam_order) {
            return Err(ConfigError::QamOrder(self.qam_order));
        }
        Ok(self)
    }

    pub fn derive(&self) -> DerivedParams {
        let c = self.speed_of_light;
        let ns = self.num_subcarriers as f64;
        let np = self.num_symbols as f64;
        DerivedParams {
            lambda0: c / self.carrier_hz,
            range_bin: c / (2.0 * ns * self.subcarrier_spacing_hz),
            velocity_bin: c / (2.0 * self.carrier_hz * np * self.symbol_duration_s),
            max_unambiguous_range: c / (2.0 * self.subcarrier_spacing_hz),
            coarse_sine_bin: 1.0 / (self.num_radar_rx as f64 * self.rx_spacing_wl),
        }
    }

    /// Useful (post-CP) part of the symbol, `1 / Δ`.
    pub fn useful_duration_s(&self) -> f64 {
        self.symbol_duration_s - self.cyclic_prefix_s
    }

    pub fn bits_per_qam_symbol(&self) -> usize {
        self.qam_order.trailing_zeros() as usize
    }

    /// `(f_c + iΔ) / f_c`, the per-subcarrier stretch of every spatial phase.
    pub(crate) fn freq_ratio(&self, subcarrier: usize) -> f64 {
        1.0 + subcarrier as f64 * self.subcarrier_spacing_hz / self.carrier_hz
    }

    /// Doppler shift `2 v f_c / c` of a target moving at `velocity_mps`.
    pub fn doppler_hz(&self, velocity_mps: f64) -> f64 {
        2.0 * velocity_mps * self.carrier_hz / self.speed_of_light
    }
}

fn is_square_qam(order: usize) -> bool {
    order >= 4 && order.is_power_of_two() && order.trailing_zeros().is_multiple_of(2)
}

/// Bin widths and unambiguous limits implied by a [`SystemConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Carrier wavelength `c / f_c`, m.
    pub lambda0: f64,
    /// `c / (2 N_s Δ)`, m.
    pub range_bin: f64,
    /// `c / (2 f_c N_p T_p)`, m/s.
    pub velocity_bin: f64,
    /// `c / (2Δ)`, m.
    pub max_unambiguous_range: f64,
    /// Sine-domain step of the receive-array DFT, `1 / (N_r d_r)`.
    pub coarse_sine_bin: f64,
}

/// A point target: angle in degrees, range in metres, radial velocity in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub theta_deg: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
}

impl TargetSpec {
    pub fn new(theta_deg: f64, range_m: f64, velocity_mps: f64) -> Self {
        Self { theta_deg, range_m, velocity_mps }
    }

    pub fn sin_theta(&self) -> f64 {
        self.theta_deg.to_radians().sin()
    }

    pub fn validate(&self, cfg: &SystemConfig, index: usize) -> Result<(), ConfigError> {
        let fail = |reason: String| Err(ConfigError::Target { index, reason });
        if self.theta_deg.is_nan() || self.theta_deg.abs() >= 90.0 {
            return fail(format!("|theta| = {} must be below 90 degrees", self.theta_deg));
        }
        let max_r = cfg.derive().max_unambiguous_range;
        if !(self.range_m >= 0.0 && self.range_m < max_r) {
            return fail(format!("range {} m outside [0, {max_r})", self.range_m));
        }
        if !self.velocity_mps.is_finite() {
            return fail("velocity is not finite".into());
        }
        Ok(())
    }
}

/// The four targets of the full-scale regression scenario.
pub fn table2_targets() -> Vec<TargetSpec> {
    vec![
        TargetSpec::new(19.0, 50.0, 5.0),
        TargetSpec::new(7.0, 45.0, 10.0),
        TargetSpec::new(19.0, 80.0, 7.0),
        TargetSpec::new(22.0, 50.0, 5.0),
    ]
}
