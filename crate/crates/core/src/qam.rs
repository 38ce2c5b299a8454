//! Square Gray-labelled QAM with unit average energy.
//!
//! A label of `2q` bits is split in half: the leading `q` bits pick the
//! in-phase level and the trailing `q` bits the quadrature level, each through
//! a binary-reflected Gray code over the levels `-(L-1), ..., L-1` (ascending).
//! For 16-QAM, `0000` is the corner `(-3 - 3j) / sqrt(10)`.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QamError {
    #[error("QAM order {0} is not a square power of two")]
    Order(usize),
    #[error("{len} bits is not a multiple of {per_symbol} bits per symbol")]
    BitCount { len: usize, per_symbol: usize },
}

#[derive(Debug, Clone)]
pub struct Constellation {
    bits_per_symbol: usize,
    /// Indexed by label.
    points: Vec<Complex64>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self, QamError> {
        if order < 4 || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) {
            return Err(QamError::Order(order));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let half = bits_per_symbol / 2;
        let side = 1usize << half;
        let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
        let level = |g: usize| (2.0 * gray_decode(g) as f64 - (side as f64 - 1.0)) * scale;
        let points = (0..order)
            .map(|label| Complex64::new(level(label >> half), level(label & (side - 1))))
            .collect();
        Ok(Self { bits_per_symbol, points })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Minimum distance between any two constellation points.
    pub fn min_distance(&self) -> f64 {
        2.0 * (2.0 * (self.order() as f64 - 1.0) / 3.0).sqrt().recip()
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>, QamError> {
        let per = self.bits_per_symbol;
        if !bits.len().is_multiple_of(per) {
            return Err(QamError::BitCount { len: bits.len(), per_symbol: per });
        }
        Ok(bits
            .chunks_exact(per)
            .map(|chunk| self.points[crate::gsm::bits_to_u64(chunk) as usize])
            .collect())
    }

    /// Nearest-point label. Ties go to the smallest label.
    pub fn decide(&self, s: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (s - p).norm_sqr();
            if d < best_d {
                best = label;
                best_d = d;
            }
        }
        best
    }

    pub fn demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &s in symbols {
            bits.extend(crate::gsm::u64_to_bits(self.decide(s) as u64, self.bits_per_symbol as u32));
        }
        bits
    }
}

pub fn map_qam(bits: &[u8], order: usize) -> Result<Vec<Complex64>, QamError> {
    Constellation::new(order)?.map(bits)
}

pub fn demap_qam(symbols: &[Complex64], order: usize) -> Result<Vec<u8>, QamError> {
    Ok(Constellation::new(order)?.demap(symbols))
}
