//! Transmitted symbol tensor `d_Tx(n, i, µ)`.
//!
//! Each OFDM symbol carries `B` index bits in its activation pattern and QAM
//! payload on every (active antenna, subcarrier) slot. On symbols with a
//! private map, subcarrier `j < N_x` belongs exclusively to the `j`-th
//! smallest active antenna; the other `N_x - 1` antennas stay silent there.
//!
//! Payload is laid out antenna-major within each OFDM symbol: for each
//! active antenna (ascending index), subcarriers ascending, skipping blocked
//! private slots.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SystemConfig;
use crate::gsm::{self, AntennaPattern, GsmError};
use crate::qam::{Constellation, QamError};

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("bit underrun: need {needed} {stream} bits, got {available}")]
    Underrun { stream: &'static str, needed: usize, available: usize },
    #[error("private period must be at least 1")]
    ZeroPeriod,
    #[error("frame shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Gsm(#[from] GsmError),
    #[error(transparent)]
    Qam(#[from] QamError),
}

/// Subcarrier reserved for a single antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivatePair {
    pub subcarrier: usize,
    pub antenna: usize,
}

/// Subcarrier `j` goes to the `j`-th smallest active antenna.
pub fn assign_private(pattern: &AntennaPattern) -> Vec<PrivatePair> {
    pattern
        .indices()
        .iter()
        .enumerate()
        .map(|(j, &antenna)| PrivatePair { subcarrier: j, antenna })
        .collect()
}

/// How often private subcarriers appear: on symbols with `µ mod M == 0`, or
/// never.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PrivatePeriod {
    #[default]
    EverySymbol,
    Every(usize),
    Never,
}

impl PrivatePeriod {
    pub fn from_option(m: Option<usize>) -> Result<Self, FrameError> {
        match m {
            None => Ok(Self::Never),
            Some(0) => Err(FrameError::ZeroPeriod),
            Some(1) => Ok(Self::EverySymbol),
            Some(m) => Ok(Self::Every(m)),
        }
    }

    pub fn is_private(self, mu: usize) -> bool {
        match self {
            Self::EverySymbol => true,
            Self::Every(m) => mu.is_multiple_of(m),
            Self::Never => false,
        }
    }
}

/// Payload slots in one OFDM symbol.
pub fn data_slots_per_symbol(num_active: usize, num_subcarriers: usize, private: bool) -> usize {
    let lost = if private { num_active * (num_active - 1) } else { 0 };
    num_active * num_subcarriers - lost
}

#[derive(Debug, Clone)]
pub struct SymbolFrame {
    num_tx: usize,
    num_subcarriers: usize,
    num_symbols: usize,
    num_active: usize,
    patterns: Vec<AntennaPattern>,
    private: Vec<Option<Vec<PrivatePair>>>,
    /// `[(µ * N_x + pos) * N_s + i]`, `pos` = rank of the antenna in the pattern.
    symbols: Vec<Complex64>,
    payload_bits: Vec<u8>,
    index_bits: Vec<u8>,
    /// First payload bit of each OFDM symbol, plus a final end marker.
    payload_offsets: Vec<usize>,
}

impl SymbolFrame {
    /// Assembles a frame from explicit per-symbol symbols, bypassing QAM
    /// mapping. `symbols` uses the `(µ, pos, i)` layout. Used for synthetic
    /// probes such as unit-symbol frames.
    pub fn from_parts(
        num_tx: usize,
        num_subcarriers: usize,
        patterns: Vec<AntennaPattern>,
        private: Vec<Option<Vec<PrivatePair>>>,
        symbols: Vec<Complex64>,
    ) -> Result<Self, FrameError> {
        let num_symbols = patterns.len();
        let num_active = patterns.first().map_or(0, AntennaPattern::len);
        if patterns.iter().any(|p| p.len() != num_active) {
            return Err(FrameError::Shape("patterns differ in size".into()));
        }
        if private.len() != num_symbols {
            return Err(FrameError::Shape("private map count differs from symbol count".into()));
        }
        if symbols.len() != num_symbols * num_active * num_subcarriers {
            return Err(FrameError::Shape(format!(
                "{} symbols for {num_symbols} x {num_active} x {num_subcarriers}",
                symbols.len()
            )));
        }
        if patterns.iter().flat_map(|p| p.indices()).any(|&n| n >= num_tx) {
            return Err(FrameError::Shape("antenna index beyond N_t".into()));
        }
        Ok(Self {
            num_tx,
            num_subcarriers,
            num_symbols,
            num_active,
            patterns,
            private,
            symbols,
            payload_bits: Vec::new(),
            index_bits: Vec::new(),
            payload_offsets: vec![0; num_symbols + 1],
        })
    }

    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    pub fn num_active(&self) -> usize {
        self.num_active
    }

    pub fn pattern(&self, mu: usize) -> &AntennaPattern {
        &self.patterns[mu]
    }

    pub fn private_map(&self, mu: usize) -> Option<&[PrivatePair]> {
        self.private[mu].as_deref()
    }

    pub fn payload_bits(&self) -> &[u8] {
        &self.payload_bits
    }

    pub fn index_bits(&self) -> &[u8] {
        &self.index_bits
    }

    /// Payload bits carried by OFDM symbol `mu`.
    pub fn payload_bits_of(&self, mu: usize) -> &[u8] {
        &self.payload_bits[self.payload_offsets[mu]..self.payload_offsets[mu + 1]]
    }

    /// Index bits carried by OFDM symbol `mu`.
    pub fn index_bits_of(&self, mu: usize) -> &[u8] {
        let width = self.index_bits.len() / self.num_symbols.max(1);
        &self.index_bits[mu * width..(mu + 1) * width]
    }

    /// Symbols of the `pos`-th active antenna over all subcarriers.
    pub fn active_row(&self, mu: usize, pos: usize) -> &[Complex64] {
        let start = (mu * self.num_active + pos) * self.num_subcarriers;
        &self.symbols[start..start + self.num_subcarriers]
    }

    /// `d_Tx(n, i, µ)`; zero for inactive antennas.
    pub fn d_tx(&self, antenna: usize, subcarrier: usize, mu: usize) -> Complex64 {
        match self.patterns[mu].position(antenna) {
            Some(pos) => self.active_row(mu, pos)[subcarrier],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Transmit vector `A_i` (length `N_t`) on subcarrier `i` of symbol `µ`.
    pub fn column(&self, subcarrier: usize, mu: usize) -> Vec<Complex64> {
        let mut a = vec![Complex64::new(0.0, 0.0); self.num_tx];
        for (pos, &n) in self.patterns[mu].indices().iter().enumerate() {
            a[n] = self.active_row(mu, pos)[subcarrier];
        }
        a
    }

    /// Whether slot (`pos`, `i`) is silenced by another antenna's private
    /// subcarrier.
    pub fn is_blocked(&self, mu: usize, pos: usize, subcarrier: usize) -> bool {
        is_blocked(self.private[mu].is_some(), self.num_active, pos, subcarrier)
    }

    /// Payload slots of symbol `µ`, in payload order.
    pub fn data_slots(&self, mu: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        data_slot_order(self.private[mu].is_some(), self.num_active, self.num_subcarriers)
    }

    /// Checks the structural invariants: silent private slots and patterns of
    /// the right size.
    pub fn check_invariants(&self) -> Result<(), String> {
        for mu in 0..self.num_symbols {
            if self.patterns[mu].len() != self.num_active {
                return Err(format!("symbol {mu}: pattern size"));
            }
            if let Some(pairs) = self.private_map(mu) {
                for pair in pairs {
                    for (pos, &n) in self.patterns[mu].indices().iter().enumerate() {
                        let v = self.active_row(mu, pos)[pair.subcarrier];
                        if n != pair.antenna && v.norm_sqr() != 0.0 {
                            return Err(format!(
                                "symbol {mu}: antenna {n} transmits on private subcarrier {}",
                                pair.subcarrier
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Nonzero symbols of OFDM symbol `µ`.
    pub fn nonzero_count(&self, mu: usize) -> usize {
        (0..self.num_active)
            .map(|pos| self.active_row(mu, pos).iter().filter(|s| s.norm_sqr() > 0.0).count())
            .sum()
    }
}

pub(crate) fn is_blocked(private: bool, num_active: usize, pos: usize, subcarrier: usize) -> bool {
    private && subcarrier < num_active && subcarrier != pos
}

pub(crate) fn data_slot_order(
    private: bool,
    num_active: usize,
    num_subcarriers: usize,
) -> impl Iterator<Item = (usize, usize)> {
    (0..num_active).flat_map(move |pos| {
        (0..num_subcarriers)
            .filter(move |&i| !is_blocked(private, num_active, pos, i))
            .map(move |i| (pos, i))
    })
}

/// Payload bits a frame of `cfg` consumes.
pub fn payload_bits_required(cfg: &SystemConfig, period: PrivatePeriod) -> usize {
    (0..cfg.num_symbols)
        .map(|mu| data_slots_per_symbol(cfg.num_active, cfg.num_subcarriers, period.is_private(mu)))
        .sum::<usize>()
        * cfg.bits_per_qam_symbol()
}

/// Index bits a frame of `cfg` consumes.
pub fn index_bits_required(cfg: &SystemConfig) -> Result<usize, FrameError> {
    let width = gsm::bits_per_pattern(cfg.num_tx, cfg.num_active, cfg.fixed_endpoints)?;
    Ok(width as usize * cfg.num_symbols)
}

/// Builds the frame from explicit bit streams. Extra bits beyond what the
/// frame needs are left unconsumed.
pub fn build_frame(
    payload_bits: &[u8],
    index_bits: &[u8],
    cfg: &SystemConfig,
    period: PrivatePeriod,
) -> Result<SymbolFrame, FrameError> {
    let constellation = Constellation::new(cfg.qam_order)?;
    let bps = constellation.bits_per_symbol();
    let width = gsm::bits_per_pattern(cfg.num_tx, cfg.num_active, cfg.fixed_endpoints)? as usize;
    let need_payload = payload_bits_required(cfg, period);
    let need_index = width * cfg.num_symbols;
    if payload_bits.len() < need_payload {
        return Err(FrameError::Underrun {
            stream: "payload",
            needed: need_payload,
            available: payload_bits.len(),
        });
    }
    if index_bits.len() < need_index {
        return Err(FrameError::Underrun { stream: "index", needed: need_index, available: index_bits.len() });
    }

    let (ns, nx) = (cfg.num_subcarriers, cfg.num_active);
    let mut symbols = vec![Complex64::new(0.0, 0.0); cfg.num_symbols * nx * ns];
    let mut patterns = Vec::with_capacity(cfg.num_symbols);
    let mut private = Vec::with_capacity(cfg.num_symbols);
    let mut payload_offsets = Vec::with_capacity(cfg.num_symbols + 1);
    let mut cursor = 0;
    for mu in 0..cfg.num_symbols {
        let value = gsm::bits_to_u64(&index_bits[mu * width..(mu + 1) * width]);
        let pattern = gsm::encode_pattern(value, cfg.num_tx, nx, cfg.fixed_endpoints)?;
        let is_private = period.is_private(mu);
        payload_offsets.push(cursor);
        for (pos, i) in data_slot_order(is_private, nx, ns) {
            let label = gsm::bits_to_u64(&payload_bits[cursor..cursor + bps]) as usize;
            symbols[(mu * nx + pos) * ns + i] = constellation.point(label);
            cursor += bps;
        }
        private.push(is_private.then(|| assign_private(&pattern)));
        patterns.push(pattern);
    }
    payload_offsets.push(cursor);
    debug_assert_eq!(cursor, need_payload);

    Ok(SymbolFrame {
        num_tx: cfg.num_tx,
        num_subcarriers: ns,
        num_symbols: cfg.num_symbols,
        num_active: nx,
        patterns,
        private,
        symbols,
        payload_bits: payload_bits[..need_payload].to_vec(),
        index_bits: index_bits[..need_index].to_vec(),
        payload_offsets,
    })
}

pub fn random_bits(len: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

/// Frame with uniformly random payload and index bits drawn from `seed`.
pub fn random_frame(cfg: &SystemConfig, period: PrivatePeriod, seed: u64) -> Result<SymbolFrame, FrameError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let index = random_bits(index_bits_required(cfg)?, &mut rng);
    let payload = random_bits(payload_bits_required(cfg, period), &mut rng);
    build_frame(&payload, &index, cfg, period)
}

/// Peak bit rate in bits/s: QAM payload on every active slot plus the GSM
/// index bits, less the slots given up to private subcarriers when
/// `with_private` is set. Index bits are counted without fixed endpoints.
pub fn bit_rate(cfg: &SystemConfig, with_private: bool) -> Result<f64, FrameError> {
    let bps = cfg.bits_per_qam_symbol() as f64;
    let index = gsm::bits_per_pattern(cfg.num_tx, cfg.num_active, false)? as f64;
    let slots = data_slots_per_symbol(cfg.num_active, cfg.num_subcarriers, with_private) as f64;
    Ok((slots * bps + index) / cfg.symbol_duration_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qam::Constellation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn private_pairing() {
        let p = AntennaPattern::new(vec![0, 3, 7, 12, 31], 32, true).unwrap();
        let pairs: Vec<_> = assign_private(&p).iter().map(|q| (q.subcarrier, q.antenna)).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 3), (2, 7), (3, 12), (4, 31)]);
        let p = AntennaPattern::new(vec![0, 31], 32, true).unwrap();
        let pairs: Vec<_> = assign_private(&p).iter().map(|q| (q.subcarrier, q.antenna)).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 31)]);
    }

    #[test]
    fn table1_symbol_counts() {
        let cfg = SystemConfig { num_symbols: 2, ..SystemConfig::table1() };
        let f = random_frame(&cfg, PrivatePeriod::EverySymbol, 1).unwrap();
        for mu in 0..2 {
            assert_eq!(f.private_map(mu).unwrap().len(), 5);
            assert_eq!(f.nonzero_count(mu), 5100);
        }
        let f = random_frame(&cfg, PrivatePeriod::Never, 1).unwrap();
        assert_eq!(f.nonzero_count(0), 5120);
        assert!(f.private_map(0).is_none());
    }

    #[test]
    fn single_active_loses_nothing() {
        assert_eq!(data_slots_per_symbol(1, 64, true), data_slots_per_symbol(1, 64, false));
    }

    #[test]
    fn private_every_m() {
        let cfg = SystemConfig { num_symbols: 7, ..SystemConfig::desk() };
        let f = random_frame(&cfg, PrivatePeriod::Every(3), 5).unwrap();
        let flags: Vec<bool> = (0..7).map(|mu| f.private_map(mu).is_some()).collect();
        assert_eq!(flags, vec![true, false, false, true, false, false, true]);
        f.check_invariants().unwrap();
    }

    #[test]
    fn frame_invariants_and_bit_recovery() {
        let cfg = SystemConfig::desk();
        let f = random_frame(&cfg, PrivatePeriod::Every(2), 9).unwrap();
        f.check_invariants().unwrap();
        let c = Constellation::new(cfg.qam_order).unwrap();
        let mut recovered = Vec::new();
        for mu in 0..cfg.num_symbols {
            for n in 0..cfg.num_tx {
                if !f.pattern(mu).contains(n) {
                    assert!((0..cfg.num_subcarriers).all(|i| f.d_tx(n, i, mu).norm() == 0.0));
                }
            }
            let slots: Vec<_> = f.data_slots(mu).map(|(pos, i)| f.active_row(mu, pos)[i]).collect();
            assert!(slots.iter().all(|s| c.points().contains(s)));
            recovered.extend(c.demap(&slots));
            let idx = gsm::decode_pattern(f.pattern(mu), cfg.num_tx).unwrap();
            assert_eq!(gsm::u64_to_bits(idx, f.index_bits_of(mu).len() as u32), f.index_bits_of(mu));
        }
        assert_eq!(recovered, f.payload_bits());
    }

    #[test]
    fn underrun() {
        let cfg = SystemConfig::desk();
        let err = build_frame(&[0; 10], &[0; 1000], &cfg, PrivatePeriod::Never).unwrap_err();
        assert!(matches!(err, FrameError::Underrun { stream: "payload", .. }));
        let need = payload_bits_required(&cfg, PrivatePeriod::Never);
        let err = build_frame(&vec![0; need], &[], &cfg, PrivatePeriod::Never).unwrap_err();
        assert!(matches!(err, FrameError::Underrun { stream: "index", .. }));
    }

    #[test]
    fn rates_table1() {
        let cfg = SystemConfig::table1();
        // (5 * 1024 * 4 + 17) / 12.5 us
        assert_abs_diff_eq!(bit_rate(&cfg, false).unwrap(), 1.63976e9, epsilon = 1.0);
        // (5 * 1024 * 4 + 17 - 20 * 4) / 12.5 us
        assert_abs_diff_eq!(bit_rate(&cfg, true).unwrap(), 1.63336e9, epsilon = 1.0);
    }

    #[test]
    fn rate_scales_with_active_count() {
        let base = SystemConfig { fixed_endpoints: false, ..SystemConfig::table1() };
        let payload_only = |nx: usize| {
            let cfg = SystemConfig { num_active: nx, ..base.clone() };
            let b = gsm::bits_per_pattern(cfg.num_tx, nx, false).unwrap() as f64;
            bit_rate(&cfg, false).unwrap() - b / cfg.symbol_duration_s
        };
        let one = payload_only(1);
        for nx in 2..6 {
            assert_abs_diff_eq!(payload_only(nx), nx as f64 * one, epsilon = 1e-3);
        }
        let cfg1 = SystemConfig { num_active: 1, ..base };
        assert_eq!(bit_rate(&cfg1, true).unwrap(), bit_rate(&cfg1, false).unwrap());
    }
}
