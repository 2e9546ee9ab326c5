//! Cellular network benchmark: sector antennas with four regulated
//! parameters (power, height, tilt, azimuth), empirical path loss, a
//! parabolic antenna pattern and the average SINR over a raster as the
//! quality to maximize.

mod field;
mod pattern;
mod propagation;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Element, Network, ParameterSpec};

pub use field::{
    average_sinr, received_power, sinr_at, Grid, SinrField, WirelessLocal, WirelessObjective,
};
pub use pattern::{pattern_gain, wrap_degrees};
pub use propagation::{path_loss, AreaType, PropagationConfig, PropagationModel, MIN_DISTANCE_KM};

pub const POWER: usize = 0;
pub const HEIGHT: usize = 1;
pub const TILT: usize = 2;
pub const AZIMUTH: usize = 3;

/// Read-only view of an antenna element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antenna {
    pub id: usize,
    /// Site position in meters.
    pub site: (f64, f64),
    pub power_dbm: f64,
    pub height_m: f64,
    pub tilt_deg: f64,
    pub azimuth_deg: f64,
}

impl Antenna {
    pub fn from_element(e: &Element) -> Self {
        Self::from_params(e.id, e.position, &e.params)
    }

    pub fn from_params(id: usize, site: (f64, f64), params: &[f64]) -> Self {
        Self {
            id,
            site,
            power_dbm: params[POWER],
            height_m: params[HEIGHT],
            tilt_deg: params[TILT],
            azimuth_deg: params[AZIMUTH].rem_euclid(360.0),
        }
    }
}

/// Bounds of the four regulated antenna parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaBounds {
    pub power_dbm: (f64, f64),
    pub height_m: (f64, f64),
    pub tilt_deg: (f64, f64),
}

impl Default for AntennaBounds {
    fn default() -> Self {
        Self {
            power_dbm: (30.0, 46.0),
            height_m: (20.0, 50.0),
            tilt_deg: (0.0, 15.0),
        }
    }
}

impl AntennaBounds {
    pub fn specs(&self) -> Vec<ParameterSpec> {
        vec![
            ParameterSpec::new("power_dbm", self.power_dbm.0, self.power_dbm.1),
            ParameterSpec::new("height_m", self.height_m.0, self.height_m.1),
            ParameterSpec::new("tilt_deg", self.tilt_deg.0, self.tilt_deg.1),
            ParameterSpec::new("azimuth_deg", 0.0, 360.0),
        ]
    }
}

/// Inverse site distance in km⁻¹; co-sited antennas count as 1 m apart.
pub fn correlation_wireless(a: &Element, b: &Element) -> f64 {
    let d_km = a.distance_m(b).max(1.0) / 1000.0;
    1.0 / d_km
}

/// Synthetic network of `sites` sites on a jittered hexagonal lattice over an
/// `area_km` square, each carrying `sectors_per_site` antennas whose
/// azimuths are evenly spaced from a random per-site offset. Power, height
/// and tilt start uniformly within `bounds`.
pub fn generate_network(
    sites: usize,
    sectors_per_site: usize,
    area_km: f64,
    seed: u64,
    bounds: &AntennaBounds,
) -> Result<Network> {
    if sites == 0 {
        return Err(Error::invalid("sites", "must be at least 1"));
    }
    if sectors_per_site == 0 {
        return Err(Error::invalid("sectors", "must be at least 1"));
    }
    if !(area_km > 0.0 && area_km.is_finite()) {
        return Err(Error::invalid("area_km", "must be positive"));
    }
    let specs = bounds.specs();
    let area_m = area_km * 1000.0;
    let rows = ((sites as f64 * 3f64.sqrt() / 2.0).sqrt().round() as usize).max(1);
    let cols = sites.div_ceil(rows);
    let (dx, dy) = (area_m / cols as f64, area_m / rows as f64);
    let jitter = 0.15 * dx.min(dy);
    let spacing = 360.0 / sectors_per_site as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elements = Vec::with_capacity(sites * sectors_per_site);
    for site in 0..sites {
        let (row, col) = (site / cols, site % cols);
        let shift = if row % 2 == 0 { 0.25 } else { 0.75 };
        let x = ((col as f64 + shift) * dx + rng.random_range(-jitter..=jitter)).clamp(0.0, area_m);
        let y = ((row as f64 + 0.5) * dy + rng.random_range(-jitter..=jitter)).clamp(0.0, area_m);
        let offset = rng.random_range(0.0..spacing);
        for sector in 0..sectors_per_site {
            let mut params = vec![0.0; 4];
            params[POWER] = uniform(&mut rng, &specs[POWER]);
            params[HEIGHT] = uniform(&mut rng, &specs[HEIGHT]);
            params[TILT] = uniform(&mut rng, &specs[TILT]);
            params[AZIMUTH] = (offset + sector as f64 * spacing).rem_euclid(360.0);
            elements.push(Element {
                id: elements.len(),
                position: (x, y),
                params,
            });
        }
    }
    Network::new(specs, elements)
}

fn uniform(rng: &mut ChaCha8Rng, spec: &ParameterSpec) -> f64 {
    rng.random_range(spec.min..=spec.max)
}

/// Bearing from `from` to `to`, degrees clockwise from north (+y).
#[inline]
pub fn bearing_deg(from: (f64, f64), to: (f64, f64)) -> f64 {
    let deg = (to.0 - from.0).atan2(to.1 - from.1) * 180.0 / PI;
    deg.rem_euclid(360.0)
}
