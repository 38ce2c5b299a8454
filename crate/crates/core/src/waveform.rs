//! Continuous-time baseband waveform of one transmit antenna.
//!
//! Symbol `µ` occupies `[µT_p - T_p/2, µT_p + T_p/2)`: a centred rectangular
//! pulse whose first `T_cp` seconds are the cyclic prefix. Subcarrier phases
//! are referenced to the start of the useful part, so the prefix is an exact
//! cyclic extension and an `N_s`-point DFT over the useful interval returns
//! the transmitted symbols. Only the validation oracles use this path; the
//! estimators work on symbols directly.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::config::SystemConfig;
use crate::frame::SymbolFrame;

/// Start of the useful (post-CP) interval of symbol `mu`.
pub fn useful_start(cfg: &SystemConfig, mu: usize) -> f64 {
    mu as f64 * cfg.symbol_duration_s - 0.5 * cfg.symbol_duration_s + cfg.cyclic_prefix_s
}

/// The `N_s` sampling instants (rate `N_s Δ`) of symbol `mu`'s useful interval.
pub fn useful_sample_times(cfg: &SystemConfig, mu: usize) -> Vec<f64> {
    let t0 = useful_start(cfg, mu);
    let dt = 1.0 / (cfg.num_subcarriers as f64 * cfg.subcarrier_spacing_hz);
    (0..cfg.num_subcarriers).map(|s| t0 + s as f64 * dt).collect()
}

/// Index of the symbol whose pulse covers `t`, if any.
pub fn symbol_at(cfg: &SystemConfig, t: f64) -> Option<usize> {
    let mu = ((t + 0.5 * cfg.symbol_duration_s) / cfg.symbol_duration_s).floor();
    (mu >= 0.0 && (mu as usize) < cfg.num_symbols).then_some(mu as usize)
}

/// Evaluates `x(n, t)` at each instant by direct summation over subcarriers.
pub fn synthesize_waveform(frame: &SymbolFrame, cfg: &SystemConfig, antenna: usize, times: &[f64]) -> Vec<Complex64> {
    let delta = cfg.subcarrier_spacing_hz;
    times
        .iter()
        .map(|&t| {
            let Some(mu) = symbol_at(cfg, t) else {
                return Complex64::new(0.0, 0.0);
            };
            let Some(pos) = frame.pattern(mu).position(antenna) else {
                return Complex64::new(0.0, 0.0);
            };
            let local = t - useful_start(cfg, mu);
            frame
                .active_row(mu, pos)
                .iter()
                .enumerate()
                .map(|(i, &d)| d * Complex64::from_polar(1.0, TAU * i as f64 * delta * local))
                .sum()
        })
        .collect()
}
