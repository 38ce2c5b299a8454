use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::config::{SystemConfig, TargetSpec};
use crate::estimator::PipelineOptions;
use crate::frame::PrivatePeriod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Desk,
    Table1,
}

/// Field-by-field replacements applied on top of the base profile.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemOverrides {
    pub carrier_hz: Option<f64>,
    pub subcarrier_spacing_hz: Option<f64>,
    pub symbol_duration_s: Option<f64>,
    pub cyclic_prefix_s: Option<f64>,
    pub num_subcarriers: Option<usize>,
    pub num_symbols: Option<usize>,
    pub num_tx: Option<usize>,
    pub num_active: Option<usize>,
    pub num_radar_rx: Option<usize>,
    pub num_comm_rx: Option<usize>,
    pub tx_spacing_wl: Option<f64>,
    pub rx_spacing_wl: Option<f64>,
    pub speed_of_light: Option<f64>,
    pub qam_order: Option<usize>,
    pub fixed_endpoints: Option<bool>,
}

impl SystemOverrides {
    fn apply(&self, mut c: SystemConfig) -> SystemConfig {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            carrier_hz,
            subcarrier_spacing_hz,
            symbol_duration_s,
            cyclic_prefix_s,
            num_subcarriers,
            num_symbols,
            num_tx,
            num_active,
            num_radar_rx,
            num_comm_rx,
            tx_spacing_wl,
            rx_spacing_wl,
            speed_of_light,
            qam_order,
            fixed_endpoints
        );
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSection {
    /// Receive SNR in dB; noiseless when absent.
    pub snr_db: Option<f64>,
    /// Private subcarriers on every `M`-th symbol; 0 disables them.
    pub private_period: usize,
    pub pipeline: PipelineOptions,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self { snr_db: None, private_period: 1, pipeline: PipelineOptions::default() }
    }
}

impl RadarSection {
    pub fn period(&self) -> PrivatePeriod {
        match self.private_period {
            0 => PrivatePeriod::Never,
            1 => PrivatePeriod::EverySymbol,
            m => PrivatePeriod::Every(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Ssr,
    Private,
}

impl Decoder {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ssr => "ssr",
            Self::Private => "private",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommSection {
    pub snr_db: Vec<f64>,
    pub trials: usize,
    /// `N_x` values to sweep; the system value when empty.
    pub num_active: Vec<usize>,
    pub taps: usize,
    pub decoders: Vec<Decoder>,
    /// Singleton threshold of the private-subcarrier receiver.
    pub gamma: f64,
    pub fixed_endpoints: bool,
    pub num_subcarriers: Option<usize>,
    pub num_tx: Option<usize>,
    pub num_comm_rx: Option<usize>,
}

impl Default for CommSection {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 200,
            num_active: Vec::new(),
            taps: 8,
            decoders: vec![Decoder::Ssr, Decoder::Private],
            gamma: 0.1,
            fixed_endpoints: false,
            num_subcarriers: None,
            num_tx: None,
            num_comm_rx: None,
        }
    }
}

/// One experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub profile: Profile,
    /// Forces the full-scale profile and ignores dimension overrides.
    pub full_scale: bool,
    pub seed: u64,
    pub system: SystemOverrides,
    pub targets: Vec<TargetSpec>,
    pub radar: RadarSection,
    pub comm: CommSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "unnamed".into(),
            profile: Profile::Desk,
            full_scale: false,
            seed: 0,
            system: SystemOverrides::default(),
            targets: Vec::new(),
            radar: RadarSection::default(),
            comm: CommSection::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Scenario(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Scenario(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Scenario(m) => HarnessError::Scenario(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The validated system configuration of the radar run.
    pub fn system_config(&self) -> Result<SystemConfig, HarnessError> {
        let cfg = if self.full_scale {
            SystemConfig::table1()
        } else {
            let base = match self.profile {
                Profile::Desk => SystemConfig::desk(),
                Profile::Table1 => SystemConfig::table1(),
            };
            self.system.apply(base)
        };
        Ok(cfg.validate()?)
    }

    /// Single-symbol configuration of one BER cell.
    pub fn comm_config(&self, num_active: usize) -> Result<SystemConfig, HarnessError> {
        let mut cfg = if self.full_scale {
            SystemConfig::table1()
        } else {
            let base = match self.profile {
                Profile::Desk => SystemConfig::desk(),
                Profile::Table1 => SystemConfig::table1(),
            };
            let mut c = self.system.apply(base);
            let comm = &self.comm;
            if let Some(v) = comm.num_subcarriers {
                c.num_subcarriers = v;
            }
            if let Some(v) = comm.num_tx {
                c.num_tx = v;
            }
            if let Some(v) = comm.num_comm_rx {
                c.num_comm_rx = v;
            }
            c
        };
        cfg.num_symbols = 1;
        cfg.num_active = num_active;
        cfg.fixed_endpoints = self.comm.fixed_endpoints;
        Ok(cfg.validate()?)
    }

    pub fn validate_targets(&self, cfg: &SystemConfig) -> Result<(), HarnessError> {
        for (index, t) in self.targets.iter().enumerate() {
            t.validate(cfg, index)?;
        }
        Ok(())
    }
}
