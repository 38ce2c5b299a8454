//! Communication link: frequency-selective MIMO channel, per-subcarrier
//! observation `Y_i = H_i A_i + N`, and the two receivers. One recovers the
//! active-antenna set jointly across subcarriers; the other finds it from the
//! private subcarriers, where a single antenna transmits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SystemConfig;
use crate::dsp::cis_cycles;
use crate::frame::{data_slot_order, SymbolFrame};
use crate::gsm::{self, AntennaPattern};
use crate::qam::Constellation;
use crate::sparse::{group_omp, least_squares, normalize_columns, omp, CMatrix, CVector, SparseError, Stop};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommError {
    #[error("channel taps must be in 1..={max}, got {taps}")]
    Taps { taps: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("bit streams differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("symbol {0} carries no private subcarriers")]
    NoPrivateMap(usize),
    #[error("sparse solver: {0}")]
    Solver(#[from] SparseError),
    #[error("QAM: {0}")]
    Qam(#[from] crate::qam::QamError),
}

/// Per-subcarrier channel matrices `H_i` (`N_c × N_t`), each the length-`N_s`
/// DFT of an `L`-tap impulse response per antenna pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CommChannel {
    pub h: Vec<CMatrix>,
    pub taps: usize,
}

impl CommChannel {
    pub fn num_subcarriers(&self) -> usize {
        self.h.len()
    }

    /// Same matrix on every subcarrier.
    pub fn flat(h: CMatrix, num_subcarriers: usize) -> Self {
        Self { h: vec![h; num_subcarriers], taps: 1 }
    }
}

/// Taps are i.i.d. `CN(0, 1/L)`, so every entry of `H_i` has unit power.
pub fn gen_channel(cfg: &SystemConfig, taps: usize, seed: u64) -> Result<CommChannel, CommError> {
    let (ns, nc, nt) = (cfg.num_subcarriers, cfg.num_comm_rx, cfg.num_tx);
    if taps == 0 || taps > ns {
        return Err(CommError::Taps { taps, max: ns });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = (0.5 / taps as f64).sqrt();
    let impulse: Vec<Vec<Complex64>> = (0..nc * nt)
        .map(|_| {
            (0..taps)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * std, im * std)
                })
                .collect()
        })
        .collect();
    let h = (0..ns)
        .map(|i| {
            let w: Vec<Complex64> = (0..taps).map(|l| cis_cycles(-((i * l) as f64) / ns as f64)).collect();
            DMatrix::from_fn(nc, nt, |r, t| impulse[r * nt + t].iter().zip(&w).map(|(g, w)| g * w).sum())
        })
        .collect();
    Ok(CommChannel { h, taps })
}

/// Received vectors `Y_i`, one per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct CommObservation {
    pub y: Vec<CVector>,
    pub mu: usize,
    pub noise_var: f64,
    pub snr_db: f64,
}

fn check_dims(frame: &SymbolFrame, channel: &CommChannel, mu: usize) -> Result<(), CommError> {
    if channel.num_subcarriers() != frame.num_subcarriers() {
        return Err(CommError::Dimension(format!(
            "channel has {} subcarriers, frame {}",
            channel.num_subcarriers(),
            frame.num_subcarriers()
        )));
    }
    if channel.h[0].ncols() != frame.num_tx() {
        return Err(CommError::Dimension(format!(
            "channel has {} transmit antennas, frame {}",
            channel.h[0].ncols(),
            frame.num_tx()
        )));
    }
    if mu >= frame.num_symbols() {
        return Err(CommError::Dimension(format!("symbol {mu} of {}", frame.num_symbols())));
    }
    Ok(())
}

fn noiseless(frame: &SymbolFrame, channel: &CommChannel, mu: usize) -> Vec<CVector> {
    (0..frame.num_subcarriers())
        .map(|i| &channel.h[i] * CVector::from_vec(frame.column(i, mu)))
        .collect()
}

fn add_awgn(y: &mut [CVector], noise_var: f64, seed: u64) {
    if noise_var <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, (noise_var / 2.0).sqrt()).expect("finite variance");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in y.iter_mut().flat_map(|c| c.iter_mut()) {
        *v += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
}

/// `Y_i = H_i A_i + N_i`. The noise variance is the mean received power per
/// receive antenna over subcarriers that carry any symbol, divided by
/// `10^(snr_db/10)`; `+∞` gives a noiseless observation.
pub fn transmit(
    frame: &SymbolFrame,
    channel: &CommChannel,
    mu: usize,
    snr_db: f64,
    seed: u64,
) -> Result<CommObservation, CommError> {
    check_dims(frame, channel, mu)?;
    let mut y = noiseless(frame, channel, mu);
    let nc = channel.h[0].nrows() as f64;
    let (mut power, mut active) = (0.0, 0usize);
    for (i, yi) in y.iter().enumerate() {
        if frame.column(i, mu).iter().any(|s| s.norm_sqr() > 0.0) {
            power += yi.norm_squared() / nc;
            active += 1;
        }
    }
    let signal = if active > 0 { power / active as f64 } else { 0.0 };
    let noise_var = if snr_db == f64::INFINITY { 0.0 } else { signal / 10f64.powf(snr_db / 10.0) };
    add_awgn(&mut y, noise_var, seed);
    Ok(CommObservation { y, mu, noise_var, snr_db })
}

/// As [`transmit`] with an explicit noise variance.
pub fn transmit_with_noise_var(
    frame: &SymbolFrame,
    channel: &CommChannel,
    mu: usize,
    noise_var: f64,
    seed: u64,
) -> Result<CommObservation, CommError> {
    check_dims(frame, channel, mu)?;
    let mut y = noiseless(frame, channel, mu);
    add_awgn(&mut y, noise_var, seed);
    Ok(CommObservation { y, mu, noise_var, snr_db: f64::NAN })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    /// Detected active antennas, ascending.
    pub support: Vec<usize>,
    /// `None` when the support is not a valid pattern of the configuration.
    pub pattern_hat: Option<AntennaPattern>,
    pub private_set_hat: Vec<usize>,
    /// `[pos · N_s + i]`, `pos` indexing `support`.
    pub symbols_hat: Vec<Complex64>,
    pub payload_bits_hat: Vec<u8>,
    pub index_bits_hat: Vec<u8>,
    /// The support could not be mapped back to index bits; they are zero.
    pub index_error: bool,
    /// The private-subcarrier receiver found too few singletons and used the
    /// joint receiver instead.
    pub fell_back: bool,
}

/// Demaps recovered symbols in payload order and recovers the index bits.
fn finish_decode(
    cfg: &SystemConfig,
    support: Vec<usize>,
    symbols_hat: Vec<Complex64>,
    private: bool,
    private_set_hat: Vec<usize>,
) -> Result<DecodedFrame, CommError> {
    let ns = cfg.num_subcarriers;
    let constellation = Constellation::new(cfg.qam_order)?;
    let payload: Vec<Complex64> = data_slot_order(private, cfg.num_active, ns)
        .map(|(pos, i)| symbols_hat[pos * ns + i])
        .collect();
    let payload_bits_hat = constellation.demap(&payload);
    let width = gsm::bits_per_pattern(cfg.num_tx, cfg.num_active, cfg.fixed_endpoints)
        .map_err(|e| CommError::Dimension(e.to_string()))?;
    let pattern_hat = AntennaPattern::new(support.clone(), cfg.num_tx, cfg.fixed_endpoints).ok();
    let value = pattern_hat.as_ref().and_then(|p| gsm::decode_pattern(p, cfg.num_tx).ok());
    let index_bits_hat = gsm::u64_to_bits(value.unwrap_or(0), width);
    Ok(DecodedFrame {
        support,
        pattern_hat,
        private_set_hat,
        symbols_hat,
        payload_bits_hat,
        index_bits_hat,
        index_error: value.is_none(),
        fell_back: false,
    })
}

/// Joint-support receiver: group OMP with `K = N_x` over all subcarriers,
/// per-subcarrier least squares on the common support.
pub fn decode_ssr(obs: &CommObservation, channel: &CommChannel, cfg: &SystemConfig, private: bool) -> Result<DecodedFrame, CommError> {
    let ns = cfg.num_subcarriers;
    if obs.y.len() != ns || channel.num_subcarriers() != ns {
        return Err(CommError::Dimension("observation, channel and configuration disagree".into()));
    }
    let sol = group_omp(&channel.h, &obs.y, Stop::atoms(cfg.num_active))?;
    let mut order: Vec<usize> = (0..sol.support.len()).collect();
    order.sort_by_key(|&s| sol.support[s]);
    let support: Vec<usize> = order.iter().map(|&s| sol.support[s]).collect();
    let mut symbols_hat = vec![Complex64::new(0.0, 0.0); cfg.num_active * ns];
    for (pos, &s) in order.iter().enumerate() {
        for i in 0..ns {
            symbols_hat[pos * ns + i] = sol.coefficients[i][s];
        }
    }
    finish_decode(cfg, support, symbols_hat, private, Vec::new())
}

/// Private-subcarrier receiver options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivateOptions {
    /// A subcarrier is a singleton when one atom brings the residual below
    /// `gamma · ‖Y_i‖`.
    pub gamma: f64,
}

impl Default for PrivateOptions {
    fn default() -> Self {
        Self { gamma: 0.1 }
    }
}

/// Private-subcarrier receiver. Per-subcarrier OMP with residual stopping
/// marks singleton subcarriers; their atoms vote for active antennas and the
/// `N_x` most-voted form the pattern. Shared subcarriers are then solved by
/// least squares on that pattern, private slots by single-column least
/// squares. Falls back to [`decode_ssr`] when fewer than `N_x` distinct
/// antennas are voted for.
pub fn decode_private(
    obs: &CommObservation,
    channel: &CommChannel,
    cfg: &SystemConfig,
    opts: PrivateOptions,
) -> Result<DecodedFrame, CommError> {
    let (ns, nx, nt) = (cfg.num_subcarriers, cfg.num_active, cfg.num_tx);
    if obs.y.len() != ns || channel.num_subcarriers() != ns {
        return Err(CommError::Dimension("observation, channel and configuration disagree".into()));
    }
    let mut votes = vec![0usize; nt];
    let mut strength = vec![0.0f64; nt];
    let mut private_set_hat = Vec::new();
    for i in 0..ns {
        let mut h = channel.h[i].clone();
        let norms = normalize_columns(&mut h);
        if norms.contains(&0.0) {
            continue;
        }
        let y = &obs.y[i];
        let stop = Stop { max_atoms: Some(nx.min(h.nrows())), tolerance: Some(opts.gamma * y.norm()) };
        let sol = omp(&h, y, stop)?;
        if sol.support.len() == 1 {
            let n = sol.support[0];
            private_set_hat.push(i);
            votes[n] += 1;
            strength[n] += sol.coefficients[0][0].norm() / norms[n];
        }
    }
    let mut ranked: Vec<usize> = (0..nt).filter(|&n| votes[n] > 0).collect();
    if ranked.len() < nx {
        let mut d = decode_ssr(obs, channel, cfg, true)?;
        d.private_set_hat = private_set_hat;
        d.fell_back = true;
        return Ok(d);
    }
    ranked.sort_by(|&a, &b| votes[b].cmp(&votes[a]).then(strength[b].total_cmp(&strength[a])).then(a.cmp(&b)));
    let mut support: Vec<usize> = ranked[..nx].to_vec();
    support.sort_unstable();

    let mut symbols_hat = vec![Complex64::new(0.0, 0.0); nx * ns];
    for i in 0..ns {
        let h = &channel.h[i];
        if i < nx {
            // private to the i-th active antenna
            let col = CMatrix::from_columns(&[h.column(support[i])]);
            let (x, _) = least_squares(&col, &obs.y[i]);
            symbols_hat[i * ns + i] = x[0];
        } else {
            let cols: Vec<_> = support.iter().map(|&n| h.column(n)).collect();
            let (x, _) = least_squares(&CMatrix::from_columns(&cols), &obs.y[i]);
            for pos in 0..nx {
                symbols_hat[pos * ns + i] = x[pos];
            }
        }
    }
    finish_decode(cfg, support, symbols_hat, true, private_set_hat)
}

/// Fraction of differing bits.
pub fn ber(bits_true: &[u8], bits_hat: &[u8]) -> Result<f64, CommError> {
    Ok(bit_errors(bits_true, bits_hat)? as f64 / bits_true.len().max(1) as f64)
}

pub fn bit_errors(bits_true: &[u8], bits_hat: &[u8]) -> Result<usize, CommError> {
    if bits_true.len() != bits_hat.len() {
        return Err(CommError::LengthMismatch(bits_true.len(), bits_hat.len()));
    }
    Ok(bits_true.iter().zip(bits_hat).filter(|(a, b)| a != b).count())
}
