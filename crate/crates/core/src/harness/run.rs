use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::scenario::{Decoder, Scenario};
use super::HarnessError;
use crate::comm::{bit_errors, decode_private, decode_ssr, gen_channel, transmit, PrivateOptions};
use crate::config::SystemConfig;
use crate::estimator::{run_pipeline, TargetEstimate};
use crate::frame::{bit_rate, random_frame, PrivatePeriod};
use crate::radar_sim::{add_noise, simulate_rx};
use crate::seed::{derive, stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub bin: usize,
    /// Empty for bins outside the visible region.
    pub theta_deg: Option<f64>,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRow {
    pub method: String,
    pub num_active: usize,
    pub snr_db: f64,
    pub payload_ber: f64,
    pub index_ber: f64,
    pub trials: usize,
    /// Trials where the private receiver handed over to the shared one.
    pub fallbacks: usize,
    /// Trials whose detected support was not a valid pattern.
    pub index_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub private_subcarriers: bool,
    pub bit_rate_bps: f64,
}

/// Everything one CLI invocation produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub scenario: Scenario,
    pub config_hash: String,
    pub system: SystemConfig,
    pub estimates: Vec<TargetEstimate>,
    pub spectrum_coarse: Vec<SpectrumRow>,
    pub spectrum_refined: Vec<SpectrumRow>,
    pub ber: Vec<BerRow>,
    pub rates: Vec<RateRow>,
    pub summary: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

impl RunReport {
    fn new(command: &str, scenario: &Scenario, system: SystemConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: scenario.clone(),
            config_hash: config_hash(scenario),
            system,
            estimates: Vec::new(),
            spectrum_coarse: Vec::new(),
            spectrum_refined: Vec::new(),
            ber: Vec::new(),
            rates: Vec::new(),
            summary: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn coarse(&self) -> impl Iterator<Item = &TargetEstimate> {
        self.estimates.iter().filter(|e| !e.refined)
    }

    pub fn refined(&self) -> impl Iterator<Item = &TargetEstimate> {
        self.estimates.iter().filter(|e| e.refined)
    }
}

/// SHA-256 of the scenario as resolved JSON, hex encoded.
pub fn config_hash(scenario: &Scenario) -> String {
    let json = serde_json::to_string(scenario).expect("scenario serializes");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn local_peaks_at_or_above(values: &[f64], rel: f64, cyclic: bool) -> usize {
    let n = values.len();
    let max = values.iter().cloned().fold(0.0, f64::max);
    if n == 0 || max == 0.0 {
        return 0;
    }
    (0..n)
        .filter(|&k| {
            let left = if k > 0 { Some(values[k - 1]) } else if cyclic { Some(values[n - 1]) } else { None };
            let right = if k + 1 < n { Some(values[k + 1]) } else if cyclic { Some(values[0]) } else { None };
            values[k] >= rel * max && left.is_none_or(|l| values[k] > l) && right.is_none_or(|r| values[k] >= r)
        })
        .count()
}

/// Simulates the scenario's targets and runs the full estimation pipeline.
pub fn run_radar(scenario: &Scenario) -> Result<RunReport, HarnessError> {
    run_radar_as("radar", scenario)
}

/// As [`run_radar`], with peak counts of the coarse and virtual-array
/// spectra added to the summary.
pub fn run_demo_virtual(scenario: &Scenario) -> Result<RunReport, HarnessError> {
    let mut report = run_radar_as("demo-virtual", scenario)?;
    let coarse: Vec<f64> = report.spectrum_coarse.iter().map(|r| r.magnitude).collect();
    let refined: Vec<f64> = report.spectrum_refined.iter().map(|r| r.magnitude).collect();
    report.summary.insert("coarse_peaks_half_max".into(), local_peaks_at_or_above(&coarse, 0.5, true).into());
    report.summary.insert("refined_peaks_half_max".into(), local_peaks_at_or_above(&refined, 0.5, false).into());
    Ok(report)
}

fn run_radar_as(command: &str, scenario: &Scenario) -> Result<RunReport, HarnessError> {
    let cfg = scenario.system_config()?;
    scenario.validate_targets(&cfg)?;
    if scenario.targets.is_empty() {
        return Err(HarnessError::Scenario("radar run needs at least one [[targets]] entry".into()));
    }
    let frame = random_frame(&cfg, scenario.radar.period(), derive(scenario.seed, &[stream::RADAR_FRAME]))?;
    let mut cube = simulate_rx(&frame, &scenario.targets, &cfg)?;
    if let Some(snr) = scenario.radar.snr_db {
        cube = add_noise(&cube, snr, derive(scenario.seed, &[stream::RADAR_NOISE]));
    }
    let out = run_pipeline(&cube, &frame, &cfg, &scenario.radar.pipeline)?;

    let mut report = RunReport::new(command, scenario, cfg);
    report.spectrum_coarse = (0..out.coarse_spectrum.fft_size())
        .map(|bin| SpectrumRow {
            bin,
            theta_deg: out.coarse_spectrum.theta_deg(bin),
            magnitude: out.coarse_spectrum.magnitudes[bin],
        })
        .collect();
    if let Some(r) = &out.refinement {
        report.spectrum_refined = r
            .spectrum
            .iter()
            .zip(&out.grid.angles_deg)
            .enumerate()
            .map(|(bin, (&magnitude, &theta))| SpectrumRow { bin, theta_deg: Some(theta), magnitude })
            .collect();
        report.summary.insert("refined_angles_deg".into(), r.angles.iter().map(|a| a.theta_deg).collect::<Vec<_>>().into());
        report.summary.insert("solver_iterations".into(), r.solution.iterations.into());
    }
    report.summary.insert("coarse_targets".into(), out.coarse.len().into());
    report.summary.insert("refined_targets".into(), out.refined.len().into());
    report.estimates = out.coarse.into_iter().chain(out.refined).collect();
    report.warnings = out.warnings;
    Ok(report)
}

#[derive(Default, Clone, Copy)]
struct Counts {
    payload_errors: usize,
    payload_bits: usize,
    index_errors: usize,
    index_bits: usize,
    fallbacks: usize,
    index_failures: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            payload_errors: self.payload_errors + o.payload_errors,
            payload_bits: self.payload_bits + o.payload_bits,
            index_errors: self.index_errors + o.index_errors,
            index_bits: self.index_bits + o.index_bits,
            fallbacks: self.fallbacks + o.fallbacks,
            index_failures: self.index_failures + o.index_failures,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Monte-Carlo bit error rates over the scenario's `N_x` and SNR lists.
/// Every decoder sees the same frames, channels and noise in a given trial,
/// and each trial draws from its own seed stream, so the result does not
/// depend on the thread count.
pub fn run_ber_sweep(scenario: &Scenario) -> Result<RunReport, HarnessError> {
    let comm = &scenario.comm;
    let system = scenario.system_config()?;
    let nx_list = if comm.num_active.is_empty() { vec![system.num_active] } else { comm.num_active.clone() };
    if comm.trials == 0 || comm.snr_db.is_empty() || comm.decoders.is_empty() {
        return Err(HarnessError::Scenario("[comm] needs trials > 0, snr_db and decoders".into()));
    }
    if comm.snr_db.iter().any(|s| s.is_nan()) {
        return Err(HarnessError::Scenario("[comm] snr_db contains NaN".into()));
    }
    let opts = PrivateOptions { gamma: comm.gamma };
    let decoders = &comm.decoders;
    let mut table: Vec<Vec<Vec<Counts>>> = Vec::new(); // [nx][snr][decoder]
    for &nx in &nx_list {
        let cfg = scenario.comm_config(nx)?;
        let mut per_snr = Vec::new();
        for (si, &snr) in comm.snr_db.iter().enumerate() {
            let trials: Vec<Vec<Counts>> = (0..comm.trials)
                .into_par_iter()
                .map(|t| -> Result<Vec<Counts>, HarnessError> {
                    let s = derive(scenario.seed, &[stream::BER_TRIAL, nx as u64, si as u64, t as u64]);
                    let frame = random_frame(&cfg, PrivatePeriod::EverySymbol, derive(s, &[stream::FRAME]))?;
                    let channel = gen_channel(&cfg, comm.taps, derive(s, &[stream::CHANNEL]))?;
                    let obs = transmit(&frame, &channel, 0, snr, derive(s, &[stream::NOISE]))?;
                    let (payload, index) = (frame.payload_bits_of(0), frame.index_bits_of(0));
                    decoders
                        .iter()
                        .map(|d| {
                            let hat = match d {
                                Decoder::Ssr => decode_ssr(&obs, &channel, &cfg, true)?,
                                Decoder::Private => decode_private(&obs, &channel, &cfg, opts)?,
                            };
                            Ok(Counts {
                                payload_errors: bit_errors(payload, &hat.payload_bits_hat)?,
                                payload_bits: payload.len(),
                                index_errors: bit_errors(index, &hat.index_bits_hat)?,
                                index_bits: index.len(),
                                fallbacks: hat.fell_back as usize,
                                index_failures: hat.index_error as usize,
                            })
                        })
                        .collect()
                })
                .collect::<Result<_, _>>()?;
            let mut sums = vec![Counts::default(); decoders.len()];
            for t in trials {
                for (acc, c) in sums.iter_mut().zip(t) {
                    *acc = *acc + c;
                }
            }
            per_snr.push(sums);
        }
        table.push(per_snr);
    }

    let mut report = RunReport::new("ber", scenario, system);
    for (di, d) in decoders.iter().enumerate() {
        for (ni, &nx) in nx_list.iter().enumerate() {
            for (si, &snr) in comm.snr_db.iter().enumerate() {
                let c = table[ni][si][di];
                report.ber.push(BerRow {
                    method: d.name().into(),
                    num_active: nx,
                    snr_db: snr,
                    payload_ber: ratio(c.payload_errors, c.payload_bits),
                    index_ber: ratio(c.index_errors, c.index_bits),
                    trials: comm.trials,
                    fallbacks: c.fallbacks,
                    index_failures: c.index_failures,
                });
            }
        }
    }
    let fallbacks: usize = report.ber.iter().map(|r| r.fallbacks).sum();
    report.summary.insert("private_fallbacks".into(), fallbacks.into());
    Ok(report)
}

/// Peak bit rates of the scenario's configuration with and without private
/// subcarriers.
pub fn run_rates(scenario: &Scenario) -> Result<RunReport, HarnessError> {
    let cfg = scenario.system_config()?;
    let mut report = RunReport::new("rates", scenario, cfg.clone());
    for private in [false, true] {
        report.rates.push(RateRow { private_subcarriers: private, bit_rate_bps: bit_rate(&cfg, private)? });
    }
    Ok(report)
}
