//! Empirical macro-cell path loss: Okumura-Hata, COST-231 Hata and the
//! Stanford University Interim (SUI) model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationModel {
    OkumuraHata,
    Cost231,
    Sui,
}

impl PropagationModel {
    pub fn name(self) -> &'static str {
        match self {
            PropagationModel::OkumuraHata => "okumura_hata",
            PropagationModel::Cost231 => "cost231",
            PropagationModel::Sui => "sui",
        }
    }

    /// Valid carrier range in MHz.
    pub fn frequency_range(self) -> (f64, f64) {
        match self {
            PropagationModel::OkumuraHata => (150.0, 1500.0),
            PropagationModel::Cost231 => (1500.0, 2000.0),
            PropagationModel::Sui => (1900.0, 11000.0),
        }
    }
}

/// Area type. For SUI it selects the terrain category: urban is A (hilly,
/// dense foliage), suburban is B, open is C (flat, light foliage).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaType {
    Urban,
    Suburban,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    pub model: PropagationModel,
    pub frequency_mhz: f64,
    pub area_type: AreaType,
    pub receiver_height_m: f64,
    pub noise_floor_dbm: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            model: PropagationModel::OkumuraHata,
            frequency_mhz: 900.0,
            area_type: AreaType::Urban,
            receiver_height_m: 1.5,
            noise_floor_dbm: -104.0,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        let (min_mhz, max_mhz) = self.model.frequency_range();
        if !(self.frequency_mhz >= min_mhz && self.frequency_mhz <= max_mhz) {
            return Err(Error::FrequencyOutOfRange {
                model: self.model.name(),
                frequency_mhz: self.frequency_mhz,
                min_mhz,
                max_mhz,
            });
        }
        if !(self.receiver_height_m > 0.0 && self.receiver_height_m.is_finite()) {
            return Err(Error::invalid("receiver_height_m", "must be positive"));
        }
        if !self.noise_floor_dbm.is_finite() {
            return Err(Error::invalid("noise_floor_dbm", "must be finite"));
        }
        Ok(())
    }
}

/// Shortest distance the models are evaluated at.
pub const MIN_DISTANCE_KM: f64 = 0.001;

const SUI_REFERENCE_KM: f64 = 0.1;
const SPEED_OF_LIGHT_M_PER_US: f64 = 299.792_458;

/// Path loss in dB at `distance_km` from a transmitter at `tx_height_m`.
pub fn path_loss(cfg: &PropagationConfig, tx_height_m: f64, distance_km: f64) -> Result<f64> {
    cfg.validate()?;
    if !(tx_height_m > cfg.receiver_height_m) {
        return Err(Error::invalid(
            "tx_height_m",
            format!(
                "{tx_height_m} m must exceed the receiver height {} m",
                cfg.receiver_height_m
            ),
        ));
    }
    let d = distance_km.max(MIN_DISTANCE_KM);
    Ok(LossLaw::new(cfg, tx_height_m).at_log10_km(d.log10()))
}

/// Path loss as an affine function of `log10(d_km)` for one transmitter
/// height; SUI switches to free-space growth below its 100 m reference.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LossLaw {
    intercept: f64,
    slope: f64,
    near: Option<NearField>,
}

#[derive(Debug, Clone, Copy)]
struct NearField {
    log10_d0_km: f64,
    intercept: f64,
}

impl LossLaw {
    /// Assumes `cfg` has been validated.
    pub(crate) fn new(cfg: &PropagationConfig, tx_height_m: f64) -> Self {
        let f = cfg.frequency_mhz;
        let log_f = f.log10();
        let log_hb = tx_height_m.log10();
        let hm = cfg.receiver_height_m;
        // mobile antenna correction, small/medium city form
        let a_hm = (1.1 * log_f - 0.7) * hm - (1.56 * log_f - 0.8);
        let hata_slope = 44.9 - 6.55 * log_hb;
        let open_correction = -4.78 * log_f * log_f + 18.33 * log_f - 40.94;
        match cfg.model {
            PropagationModel::OkumuraHata => {
                let urban = 69.55 + 26.16 * log_f - 13.82 * log_hb - a_hm;
                let correction = match cfg.area_type {
                    AreaType::Urban => 0.0,
                    AreaType::Suburban => -2.0 * (f / 28.0).log10().powi(2) - 5.4,
                    AreaType::Open => open_correction,
                };
                Self {
                    intercept: urban + correction,
                    slope: hata_slope,
                    near: None,
                }
            }
            PropagationModel::Cost231 => {
                let base = 46.3 + 33.9 * log_f - 13.82 * log_hb - a_hm;
                let correction = match cfg.area_type {
                    AreaType::Urban => 3.0,
                    AreaType::Suburban => 0.0,
                    AreaType::Open => open_correction,
                };
                Self {
                    intercept: base + correction,
                    slope: hata_slope,
                    near: None,
                }
            }
            PropagationModel::Sui => {
                let (a, b, c) = match cfg.area_type {
                    AreaType::Urban => (4.6, 0.0075, 12.6),
                    AreaType::Suburban => (4.0, 0.0065, 17.1),
                    AreaType::Open => (3.6, 0.005, 20.0),
                };
                let gamma = a - b * tx_height_m + c / tx_height_m;
                let wavelength_m = SPEED_OF_LIGHT_M_PER_US / f;
                let x_f = 6.0 * (f / 2000.0).log10();
                let x_h = match cfg.area_type {
                    AreaType::Urban | AreaType::Suburban => -10.8 * (hm / 2.0).log10(),
                    AreaType::Open => -20.0 * (hm / 2.0).log10(),
                };
                // free space in dB with d in km: 20·log10(4π·1000/λ) + 20·log10(d_km)
                let fs_intercept = 20.0 * (4.0 * std::f64::consts::PI * 1000.0 / wavelength_m).log10();
                let log_d0 = SUI_REFERENCE_KM.log10();
                let a_ref = fs_intercept + 20.0 * log_d0;
                Self {
                    intercept: a_ref - 10.0 * gamma * log_d0 + x_f + x_h,
                    slope: 10.0 * gamma,
                    near: Some(NearField {
                        log10_d0_km: log_d0,
                        intercept: fs_intercept + x_f + x_h,
                    }),
                }
            }
        }
    }

    #[inline]
    pub(crate) fn at_log10_km(&self, log_d: f64) -> f64 {
        match self.near {
            Some(near) if log_d < near.log10_d0_km => near.intercept + 20.0 * log_d,
            _ => self.intercept + self.slope * log_d,
        }
    }
}
