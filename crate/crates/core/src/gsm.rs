//! Generalized spatial modulation: information bits choose which `N_x` of the
//! `N_t` transmit antennas are active in an OFDM symbol.
//!
//! The bit/pattern dictionary is the lexicographic (combinadic) rank of the
//! freely chosen indices. With fixed endpoints, antennas `0` and `N_t - 1`
//! are always active and only the `N_x - 2` interior antennas carry bits.
//! Patterns whose rank is `>= 2^B` are never emitted and fail to decode.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GsmError {
    #[error("invalid antenna counts: N_t = {num_tx}, N_x = {num_active}, fixed endpoints = {fixed_endpoints}")]
    Counts { num_tx: usize, num_active: usize, fixed_endpoints: bool },
    #[error("pattern count overflows 128 bits")]
    Overflow,
    #[error("index value {bits} does not fit in {width} bits")]
    BitsOutOfRange { bits: u64, width: u32 },
    #[error("invalid antenna pattern: {0}")]
    Pattern(String),
    #[error("unencodable pattern: rank {rank} >= 2^{width}")]
    Unencodable { rank: u128, width: u32 },
}

/// Sorted set of active antenna indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AntennaPattern {
    indices: Vec<usize>,
    fixed_endpoints: bool,
}

impl AntennaPattern {
    /// Checks that `indices` is strictly increasing, within `[0, num_tx)`,
    /// and contains both endpoints when `fixed_endpoints` is set.
    pub fn new(indices: Vec<usize>, num_tx: usize, fixed_endpoints: bool) -> Result<Self, GsmError> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GsmError::Pattern(format!("{indices:?} is not strictly increasing")));
        }
        if indices.last().is_some_and(|&n| n >= num_tx) {
            return Err(GsmError::Pattern(format!("{indices:?} exceeds N_t = {num_tx}")));
        }
        if fixed_endpoints && (indices.first() != Some(&0) || indices.last() != Some(&(num_tx - 1))) {
            return Err(GsmError::Pattern(format!(
                "{indices:?} is missing a fixed endpoint (0 or {})",
                num_tx - 1
            )));
        }
        Ok(Self { indices, fixed_endpoints })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn fixed_endpoints(&self) -> bool {
        self.fixed_endpoints
    }

    pub fn contains(&self, antenna: usize) -> bool {
        self.indices.binary_search(&antenna).is_ok()
    }

    /// Position of `antenna` within the sorted pattern.
    pub fn position(&self, antenna: usize) -> Option<usize> {
        self.indices.binary_search(&antenna).ok()
    }
}

/// `C(n, k)` with overflow detection.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        // acc * (n - j) / (j + 1) stays integral at every step
        acc = acc.checked_mul((n - j) as u128)? / (j as u128 + 1);
    }
    Some(acc)
}

fn check_counts(num_tx: usize, num_active: usize, fixed_endpoints: bool) -> Result<(), GsmError> {
    let min_active = if fixed_endpoints { 2 } else { 1 };
    if num_active < min_active || num_active > num_tx {
        return Err(GsmError::Counts { num_tx, num_active, fixed_endpoints });
    }
    Ok(())
}

/// Pool of freely selectable antennas and how many of them get picked.
fn free_choice(num_tx: usize, num_active: usize, fixed_endpoints: bool) -> (usize, usize, usize) {
    if fixed_endpoints {
        // choose num_active - 2 out of 1..=num_tx-2
        (1, num_tx - 2, num_active - 2)
    } else {
        (0, num_tx, num_active)
    }
}

/// Number of distinct activation patterns.
pub fn pattern_count(num_tx: usize, num_active: usize, fixed_endpoints: bool) -> Result<u128, GsmError> {
    check_counts(num_tx, num_active, fixed_endpoints)?;
    let (_, pool, pick) = free_choice(num_tx, num_active, fixed_endpoints);
    binomial(pool, pick).ok_or(GsmError::Overflow)
}

/// `B = floor(log2(pattern_count))`.
pub fn bits_per_pattern(num_tx: usize, num_active: usize, fixed_endpoints: bool) -> Result<u32, GsmError> {
    let count = pattern_count(num_tx, num_active, fixed_endpoints)?;
    Ok(127 - count.leading_zeros())
}

/// Maps `bits` (an integer below `2^B`) to the pattern of that rank.
pub fn encode_pattern(
    bits: u64,
    num_tx: usize,
    num_active: usize,
    fixed_endpoints: bool,
) -> Result<AntennaPattern, GsmError> {
    let width = bits_per_pattern(num_tx, num_active, fixed_endpoints)?;
    if width < 64 && bits >> width != 0 {
        return Err(GsmError::BitsOutOfRange { bits, width });
    }
    let (offset, pool, pick) = free_choice(num_tx, num_active, fixed_endpoints);
    let mut rank = bits as u128;
    let mut indices = Vec::with_capacity(num_active);
    if fixed_endpoints {
        indices.push(0);
    }
    let mut next = 0;
    for slot in 0..pick {
        let remaining = pick - slot - 1;
        let mut c = next;
        loop {
            // combinations that start with c at this slot
            let block = binomial(pool - c - 1, remaining).ok_or(GsmError::Overflow)?;
            if rank < block {
                break;
            }
            rank -= block;
            c += 1;
        }
        indices.push(c + offset);
        next = c + 1;
    }
    if fixed_endpoints {
        indices.push(num_tx - 1);
    }
    AntennaPattern::new(indices, num_tx, fixed_endpoints)
}

/// Lexicographic rank of the free indices of `pattern`.
pub fn pattern_rank(pattern: &AntennaPattern, num_tx: usize) -> Result<u128, GsmError> {
    let num_active = pattern.len();
    let fixed = pattern.fixed_endpoints();
    check_counts(num_tx, num_active, fixed)?;
    let (offset, pool, pick) = free_choice(num_tx, num_active, fixed);
    let free = if fixed {
        &pattern.indices()[1..num_active - 1]
    } else {
        pattern.indices()
    };
    let mut rank: u128 = 0;
    let mut next = 0;
    for (slot, &idx) in free.iter().enumerate() {
        let c = idx - offset;
        let remaining = pick - slot - 1;
        for skipped in next..c {
            rank += binomial(pool - skipped - 1, remaining).ok_or(GsmError::Overflow)?;
        }
        next = c + 1;
    }
    Ok(rank)
}

/// Inverse of [`encode_pattern`].
pub fn decode_pattern(pattern: &AntennaPattern, num_tx: usize) -> Result<u64, GsmError> {
    let width = bits_per_pattern(num_tx, pattern.len(), pattern.fixed_endpoints())?;
    let rank = pattern_rank(pattern, num_tx)?;
    if rank >> width != 0 {
        return Err(GsmError::Unencodable { rank, width });
    }
    Ok(rank as u64)
}

/// Packs the first `width` bits of `bits` (MSB first) into an integer.
pub(crate) fn bits_to_u64(bits: &[u8]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1))
}

pub(crate) fn u64_to_bits(value: u64, width: u32) -> Vec<u8> {
    (0..width).rev().map(|k| ((value >> k) & 1) as u8).collect()
}
