use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel population families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    Rayleigh,
    Rician,
    Nakagami,
    LargeScale,
    WinnerIndoor,
    WinnerOutdoor,
    V2iUrban,
    V2iFreeway,
}

impl ModelId {
    pub const ALL: [ModelId; 8] = [
        ModelId::Rayleigh,
        ModelId::Rician,
        ModelId::Nakagami,
        ModelId::LargeScale,
        ModelId::WinnerIndoor,
        ModelId::WinnerOutdoor,
        ModelId::V2iUrban,
        ModelId::V2iFreeway,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Rayleigh => "rayleigh",
            ModelId::Rician => "rician",
            ModelId::Nakagami => "nakagami",
            ModelId::LargeScale => "large-scale",
            ModelId::WinnerIndoor => "winner-indoor",
            ModelId::WinnerOutdoor => "winner-outdoor",
            ModelId::V2iUrban => "v2i-urban",
            ModelId::V2iFreeway => "v2i-freeway",
        }
    }

    /// Small-scale-only families carry no pathloss.
    pub fn is_small_scale(self) -> bool {
        matches!(self, ModelId::Rayleigh | ModelId::Rician | ModelId::Nakagami)
    }

    pub fn is_vehicular(self) -> bool {
        matches!(self, ModelId::V2iUrban | ModelId::V2iFreeway)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// WINNER II B1 LOS pathloss constants:
/// `PL = slope·log10(d) + intercept + freq_coeff·log10(f_c / 5 GHz)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinnerB1Constants {
    pub slope_db: f64,
    pub intercept_db: f64,
    pub freq_coeff_db: f64,
    pub shadowing_std_db: f64,
}

impl Default for WinnerB1Constants {
    fn default() -> Self {
        Self { slope_db: 22.7, intercept_db: 41.0, freq_coeff_db: 20.0, shadowing_std_db: 3.0 }
    }
}

/// Everything needed to regenerate a channel population.
///
/// The JSON field names are a stable interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub model: ModelId,
    /// BS antennas.
    pub m: usize,
    /// Users.
    pub k: usize,
    #[serde(default = "defaults::carrier")]
    pub carrier_frequency_hz: f64,
    #[serde(default = "defaults::bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "defaults::noise_psd")]
    pub noise_psd_dbm_hz: f64,
    pub p_dbm: f64,
    #[serde(default = "defaults::rician_factor")]
    pub rician_factor: f64,
    #[serde(default = "defaults::nakagami_m")]
    pub nakagami_m: f64,
    #[serde(default = "defaults::nakagami_omega")]
    pub nakagami_omega: f64,
    #[serde(default = "defaults::n_walls")]
    pub n_walls: u32,
    #[serde(default)]
    pub cell_radius_m: f64,
    #[serde(default)]
    pub min_distance_m: f64,
    #[serde(default)]
    pub velocity_mps: f64,
    #[serde(default)]
    pub bs_antenna_gain_dbi: f64,
    #[serde(default)]
    pub ue_antenna_gain_dbi: f64,
    #[serde(default)]
    pub shadowing_std_db: f64,
    #[serde(default)]
    pub decorrelation_distance_m: f64,
    #[serde(default = "defaults::turn_probability")]
    pub turn_probability: f64,
    #[serde(default = "defaults::lanes")]
    pub lanes_per_direction: u32,
    #[serde(default = "defaults::bs_offset")]
    pub bs_offset_m: f64,
    #[serde(default = "defaults::slot_duration")]
    pub slot_duration_s: f64,
    #[serde(default)]
    pub winner_b1: WinnerB1Constants,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn carrier() -> f64 {
        2.9e9
    }
    pub fn bandwidth() -> f64 {
        20e6
    }
    pub fn noise_psd() -> f64 {
        -174.0
    }
    pub fn rician_factor() -> f64 {
        3.0
    }
    pub fn nakagami_m() -> f64 {
        5.0
    }
    pub fn nakagami_omega() -> f64 {
        2.0
    }
    pub fn n_walls() -> u32 {
        2
    }
    pub fn turn_probability() -> f64 {
        0.4
    }
    pub fn lanes() -> u32 {
        2
    }
    pub fn bs_offset() -> f64 {
        35.0
    }
    pub fn slot_duration() -> f64 {
        1e-3
    }
}

pub const KMH: f64 = 1000.0 / 3600.0;

impl ScenarioConfig {
    /// Default parameterization of each scenario family.
    pub fn preset(model: ModelId, m: usize, k: usize, p_dbm: f64) -> Self {
        let mut cfg = Self {
            model,
            m,
            k,
            carrier_frequency_hz: defaults::carrier(),
            bandwidth_hz: defaults::bandwidth(),
            noise_psd_dbm_hz: defaults::noise_psd(),
            p_dbm,
            rician_factor: defaults::rician_factor(),
            nakagami_m: defaults::nakagami_m(),
            nakagami_omega: defaults::nakagami_omega(),
            n_walls: defaults::n_walls(),
            cell_radius_m: 0.0,
            min_distance_m: 0.0,
            velocity_mps: 0.0,
            bs_antenna_gain_dbi: 0.0,
            ue_antenna_gain_dbi: 0.0,
            shadowing_std_db: 0.0,
            decorrelation_distance_m: 0.0,
            turn_probability: defaults::turn_probability(),
            lanes_per_direction: defaults::lanes(),
            bs_offset_m: defaults::bs_offset(),
            slot_duration_s: defaults::slot_duration(),
            winner_b1: WinnerB1Constants::default(),
            seed: 0,
        };
        match model {
            ModelId::Rayleigh | ModelId::Rician | ModelId::Nakagami => {}
            ModelId::LargeScale => {
                cfg.cell_radius_m = 500.0;
                cfg.min_distance_m = 35.0;
                cfg.shadowing_std_db = 8.0;
            }
            ModelId::WinnerIndoor => {
                cfg.cell_radius_m = 100.0;
                cfg.min_distance_m = 10.0;
                cfg.shadowing_std_db = 4.0;
            }
            ModelId::WinnerOutdoor => {
                cfg.cell_radius_m = 1000.0;
                cfg.min_distance_m = 100.0;
                cfg.shadowing_std_db = cfg.winner_b1.shadowing_std_db;
            }
            ModelId::V2iUrban => {
                cfg.velocity_mps = 60.0 * KMH;
                cfg.bs_antenna_gain_dbi = 8.0;
                cfg.ue_antenna_gain_dbi = 3.0;
                cfg.shadowing_std_db = 8.0;
                cfg.decorrelation_distance_m = 50.0;
                cfg.lanes_per_direction = 2;
            }
            ModelId::V2iFreeway => {
                cfg.cell_radius_m = 1000.0;
                cfg.velocity_mps = 120.0 * KMH;
                cfg.bs_antenna_gain_dbi = 8.0;
                cfg.ue_antenna_gain_dbi = 3.0;
                cfg.shadowing_std_db = 8.0;
                cfg.decorrelation_distance_m = 50.0;
                cfg.lanes_per_direction = 3;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.m == 0 || self.k == 0 {
            return bad("m and k must be at least 1");
        }
        if !(self.carrier_frequency_hz > 0.0) {
            return bad("carrier frequency must be positive");
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive");
        }
        if !(0.0..=1.0).contains(&self.turn_probability) {
            return bad("turn probability must lie in [0, 1]");
        }
        if !self.p_dbm.is_finite() || !self.noise_psd_dbm_hz.is_finite() {
            return bad("power and noise levels must be finite");
        }
        if self.shadowing_std_db < 0.0 || self.decorrelation_distance_m < 0.0 || self.velocity_mps < 0.0 {
            return bad("shadowing std, decorrelation distance and velocity must be non-negative");
        }
        match self.model {
            ModelId::Rician if !(self.rician_factor >= 0.0) => return bad("rician factor must be non-negative"),
            ModelId::Nakagami if !(self.nakagami_m >= 0.5 && self.nakagami_omega > 0.0) => {
                return bad("nakagami needs m >= 0.5 and omega > 0")
            }
            ModelId::LargeScale | ModelId::WinnerIndoor | ModelId::WinnerOutdoor
                if !(self.min_distance_m > 0.0 && self.cell_radius_m > self.min_distance_m) =>
            {
                return bad("placement needs 0 < min distance < cell radius")
            }
            ModelId::V2iFreeway if !(self.cell_radius_m > 0.0) || self.lanes_per_direction == 0 => {
                return bad("freeway needs a positive half-length and at least one lane")
            }
            ModelId::V2iUrban if self.lanes_per_direction == 0 => return bad("urban grid needs at least one lane"),
            _ => {}
        }
        if self.n_walls == 0 && self.model == ModelId::WinnerIndoor {
            return bad("indoor scenario needs at least one wall");
        }
        Ok(())
    }

    /// Per-user noise power in dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        Ok(cfg)
    }
}
