//! Raster SINR evaluation, globally and per subnet.

use std::io::Write;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pattern::pattern_gain;
use super::propagation::{LossLaw, PropagationConfig, MIN_DISTANCE_KM};
use super::{bearing_deg, Antenna, AZIMUTH, HEIGHT, POWER, TILT};
use crate::anneal::SubnetState;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::objective::{LocalObjective, Objective};

/// Rectangular raster of sample points at cell centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub resolution_m: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(x0: f64, y0: f64, resolution_m: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(resolution_m > 0.0 && resolution_m.is_finite()) {
            return Err(Error::invalid("resolution_m", "must be positive"));
        }
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("grid", "must contain at least one point"));
        }
        Ok(Self {
            x0,
            y0,
            resolution_m,
            nx,
            ny,
        })
    }

    /// Grid over the bounding box of all element positions, widened by
    /// `margin_m` on every side.
    pub fn covering(net: &Network, resolution_m: f64, margin_m: f64) -> Result<Self> {
        let (mut x_min, mut y_min) = (f64::INFINITY, f64::INFINITY);
        let (mut x_max, mut y_max) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for e in net.elements() {
            x_min = x_min.min(e.position.0);
            x_max = x_max.max(e.position.0);
            y_min = y_min.min(e.position.1);
            y_max = y_max.max(e.position.1);
        }
        let margin = margin_m.max(0.0);
        let (x0, y0) = (x_min - margin, y_min - margin);
        let width = x_max + margin - x0;
        let height = y_max + margin - y0;
        let nx = ((width / resolution_m).ceil() as usize).max(1);
        let ny = ((height / resolution_m).ceil() as usize).max(1);
        Self::new(x0, y0, resolution_m, nx, ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major cell centers.
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.ny)
            .flat_map(|j| {
                (0..self.nx).map(move |i| {
                    (
                        self.x0 + (i as f64 + 0.5) * self.resolution_m,
                        self.y0 + (j as f64 + 0.5) * self.resolution_m,
                    )
                })
            })
            .collect()
    }
}

#[inline]
fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Horizontal geometry between a site and a point.
#[derive(Debug, Clone, Copy)]
struct Sight {
    log10_km: f64,
    horizontal_m: f64,
    bearing_deg: f64,
}

impl Sight {
    #[inline]
    fn new(site: (f64, f64), point: (f64, f64)) -> Self {
        let dx = point.0 - site.0;
        let dy = point.1 - site.1;
        let horizontal_m = dx.hypot(dy).max(MIN_DISTANCE_KM * 1000.0);
        Self {
            log10_km: (horizontal_m / 1000.0).log10(),
            horizontal_m,
            bearing_deg: bearing_deg(site, point),
        }
    }
}

#[inline]
fn rx_dbm(
    power_dbm: f64,
    height_m: f64,
    tilt_deg: f64,
    azimuth_deg: f64,
    law: &LossLaw,
    sight: &Sight,
    receiver_height_m: f64,
) -> f64 {
    let depression = ((height_m - receiver_height_m) / sight.horizontal_m)
        .atan()
        .to_degrees();
    power_dbm - law.at_log10_km(sight.log10_km)
        + pattern_gain(tilt_deg, azimuth_deg, sight.bearing_deg, depression)
}

/// Received power in dBm at `point` from antenna `a`.
pub fn received_power(a: &Antenna, point: (f64, f64), cfg: &PropagationConfig) -> Result<f64> {
    // validates frequency and heights
    super::path_loss(cfg, a.height_m, 1.0)?;
    let law = LossLaw::new(cfg, a.height_m);
    Ok(rx_dbm(
        a.power_dbm,
        a.height_m,
        a.tilt_deg,
        a.azimuth_deg,
        &law,
        &Sight::new(a.site, point),
        cfg.receiver_height_m,
    ))
}

/// Server (strongest antenna, ties to the lowest id) and SINR in dB from
/// linear received powers indexed by antenna.
fn serve(rx_mw: &[f64], noise_mw: f64) -> (usize, f64) {
    let mut server = 0;
    for (i, &p) in rx_mw.iter().enumerate() {
        if p > rx_mw[server] {
            server = i;
        }
    }
    let interference: f64 = rx_mw
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != server)
        .map(|(_, &p)| p)
        .sum();
    let sinr = 10.0 * (rx_mw[server] / (interference + noise_mw)).log10();
    (server, sinr)
}

/// SINR in dB at `point`: strongest antenna against the sum of all others
/// plus noise, in the linear domain.
pub fn sinr_at(point: (f64, f64), antennas: &[Antenna], cfg: &PropagationConfig) -> Result<f64> {
    if antennas.is_empty() {
        return Err(Error::invalid("antennas", "need at least one antenna"));
    }
    let rx = antennas
        .iter()
        .map(|a| received_power(a, point, cfg).map(dbm_to_mw))
        .collect::<Result<Vec<f64>>>()?;
    Ok(serve(&rx, dbm_to_mw(cfg.noise_floor_dbm)).1)
}

/// SINR and serving antenna for every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrField {
    pub grid: Grid,
    pub sinr_db: Vec<f64>,
    pub server: Vec<usize>,
}

impl SinrField {
    pub fn compute(net: &Network, grid: &Grid, cfg: &PropagationConfig) -> Result<Self> {
        cfg.validate()?;
        let points = grid.points();
        let (sinr_db, server) = evaluate_points(net, &points, cfg);
        Ok(Self {
            grid: grid.clone(),
            sinr_db,
            server,
        })
    }

    pub fn mean(&self) -> f64 {
        self.sinr_db.iter().sum::<f64>() / self.sinr_db.len() as f64
    }

    /// CSV raster with columns `x,y,sinr_db,server_id`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "sinr_db", "server_id"])?;
        for ((p, s), id) in self.grid.points().iter().zip(&self.sinr_db).zip(&self.server) {
            w.write_record(&[
                p.0.to_string(),
                p.1.to_string(),
                s.to_string(),
                id.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn evaluate_points(
    net: &Network,
    points: &[(f64, f64)],
    cfg: &PropagationConfig,
) -> (Vec<f64>, Vec<usize>) {
    let antennas: Vec<Antenna> = net.elements().iter().map(Antenna::from_element).collect();
    let laws: Vec<LossLaw> = antennas
        .iter()
        .map(|a| LossLaw::new(cfg, a.height_m))
        .collect();
    let noise = dbm_to_mw(cfg.noise_floor_dbm);
    let per_point: Vec<(f64, usize)> = points
        .par_iter()
        .map_init(
            || vec![0.0; antennas.len()],
            |rx, &point| {
                for ((slot, a), law) in rx.iter_mut().zip(&antennas).zip(&laws) {
                    let sight = Sight::new(a.site, point);
                    *slot = dbm_to_mw(rx_dbm(
                        a.power_dbm,
                        a.height_m,
                        a.tilt_deg,
                        a.azimuth_deg,
                        law,
                        &sight,
                        cfg.receiver_height_m,
                    ));
                }
                let (server, sinr) = serve(rx, noise);
                (sinr, server)
            },
        )
        .collect();
    per_point.into_iter().unzip()
}

/// Mean SINR in dB over the grid.
pub fn average_sinr(net: &Network, grid: &Grid, cfg: &PropagationConfig) -> Result<f64> {
    Ok(SinrField::compute(net, grid, cfg)?.mean())
}

/// Average SINR as an optimization objective.
///
/// A subnet is scored over the points its members serve in the snapshot it
/// was built from; every other antenna keeps contributing interference at
/// its frozen settings.
///
/// Recently evaluated network states are cached with the linear received
/// power of every antenna at every point, so a state that differs from a
/// cached one in a few antennas only recomputes those antennas.
pub struct WirelessObjective {
    cfg: PropagationConfig,
    grid: Grid,
    points: Vec<(f64, f64)>,
    cache: Mutex<Vec<Arc<Snapshot>>>,
    matrix_limit: usize,
}

/// One evaluated network state.
struct Snapshot {
    key: Vec<f64>,
    antennas: usize,
    /// Point-major `rx[p * antennas + a]` in mW; empty above `MATRIX_LIMIT`.
    rx: Vec<f64>,
    server: Vec<usize>,
    sinr_db: Vec<f64>,
}

const SNAPSHOT_CACHE: usize = 4;
/// Largest point × antenna matrix kept per snapshot.
const MATRIX_LIMIT: usize = 1 << 24;

impl WirelessObjective {
    pub fn new(cfg: PropagationConfig, grid: Grid) -> Result<Self> {
        cfg.validate()?;
        let points = grid.points();
        Ok(Self {
            cfg,
            grid,
            points,
            cache: Mutex::new(Vec::new()),
            matrix_limit: MATRIX_LIMIT,
        })
    }

    pub fn config(&self) -> &PropagationConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn field(&self, net: &Network) -> Result<SinrField> {
        let snap = self.snapshot(net);
        Ok(SinrField {
            grid: self.grid.clone(),
            sinr_db: snap.sinr_db.clone(),
            server: snap.server.clone(),
        })
    }

    /// `(mean SINR, served point count)` of every part that serves at least
    /// one point. Every serving antenna must belong to some part.
    pub fn partition_qualities(&self, net: &Network, parts: &[Vec<usize>]) -> Result<Vec<(f64, f64)>> {
        let snap = self.snapshot(net);
        let mut part_of = vec![usize::MAX; net.len()];
        for (p, members) in parts.iter().enumerate() {
            for &m in members {
                part_of[m] = p;
            }
        }
        let mut sums = vec![0.0; parts.len()];
        let mut counts = vec![0usize; parts.len()];
        for (&sinr, &server) in snap.sinr_db.iter().zip(&snap.server) {
            let p = part_of[server];
            if p == usize::MAX {
                return Err(Error::invalid(
                    "parts",
                    format!("serving antenna {server} belongs to no part"),
                ));
            }
            sums[p] += sinr;
            counts[p] += 1;
        }
        Ok(sums
            .into_iter()
            .zip(counts)
            .filter(|&(_, c)| c > 0)
            .map(|(s, c)| (s / c as f64, c as f64))
            .collect())
    }

    fn key(net: &Network) -> Vec<f64> {
        net.elements()
            .iter()
            .flat_map(|e| [e.position.0, e.position.1].into_iter().chain(e.params.iter().copied()))
            .collect()
    }

    fn snapshot(&self, net: &Network) -> Arc<Snapshot> {
        let key = Self::key(net);
        let n = net.len();
        let base = {
            let mut cache = self.cache.lock().expect("cache lock");
            if let Some(i) = cache.iter().position(|s| s.key == key) {
                let hit = cache.remove(i);
                cache.push(Arc::clone(&hit));
                return hit;
            }
            cache
                .iter()
                .rev()
                .find(|s| !s.rx.is_empty() && same_sites(&s.key, &key, n))
                .cloned()
        };
        let snap = Arc::new(self.evaluate(net, key, base.as_deref()));
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= SNAPSHOT_CACHE {
            cache.remove(0);
        }
        cache.push(Arc::clone(&snap));
        snap
    }

    fn evaluate(&self, net: &Network, key: Vec<f64>, base: Option<&Snapshot>) -> Snapshot {
        let n = net.len();
        if self.points.len().saturating_mul(n) > self.matrix_limit {
            let (sinr_db, server) = evaluate_points(net, &self.points, &self.cfg);
            return Snapshot {
                key,
                antennas: n,
                rx: Vec::new(),
                server,
                sinr_db,
            };
        }
        let antennas: Vec<Antenna> = net.elements().iter().map(Antenna::from_element).collect();
        let stride = 2 + net.params_per_element();
        let dirty: Vec<usize> = match base {
            Some(b) => (0..n)
                .filter(|&a| b.key[a * stride..(a + 1) * stride] != key[a * stride..(a + 1) * stride])
                .collect(),
            None => (0..n).collect(),
        };
        let laws: Vec<LossLaw> = dirty
            .iter()
            .map(|&a| LossLaw::new(&self.cfg, antennas[a].height_m))
            .collect();
        let mut rx = match base {
            Some(b) => b.rx.clone(),
            None => vec![0.0; self.points.len() * n],
        };
        let noise = dbm_to_mw(self.cfg.noise_floor_dbm);
        let hr = self.cfg.receiver_height_m;
        let per_point: Vec<(f64, usize)> = rx
            .par_chunks_mut(n)
            .zip(self.points.par_iter())
            .map(|(row, &point)| {
                for (&a, law) in dirty.iter().zip(&laws) {
                    let ant = &antennas[a];
                    row[a] = dbm_to_mw(rx_dbm(
                        ant.power_dbm,
                        ant.height_m,
                        ant.tilt_deg,
                        ant.azimuth_deg,
                        law,
                        &Sight::new(ant.site, point),
                        hr,
                    ));
                }
                let (server, sinr) = serve(row, noise);
                (sinr, server)
            })
            .collect();
        let (sinr_db, server) = per_point.into_iter().unzip();
        Snapshot {
            key,
            antennas: n,
            rx,
            server,
            sinr_db,
        }
    }

    /// Subnet evaluator with its region fixed from the snapshot.
    pub fn subnet_evaluator(&self, state: &SubnetState) -> WirelessLocal {
        let net = &*state.frozen_env;
        let snap = self.snapshot(net);
        let n = net.len();
        let mut is_member = vec![false; n];
        for &m in &state.members {
            is_member[m] = true;
        }
        let region: Vec<usize> = (0..self.points.len())
            .filter(|&p| is_member[snap.server[p]])
            .collect();

        let frozen_ids: Vec<usize> = (0..n).filter(|&a| !is_member[a]).collect();
        let frozen: Vec<(Antenna, LossLaw)> = if snap.rx.is_empty() {
            frozen_ids
                .iter()
                .map(|&a| {
                    let ant = Antenna::from_element(net.element(a));
                    let law = LossLaw::new(&self.cfg, ant.height_m);
                    (ant, law)
                })
                .collect()
        } else {
            Vec::new()
        };
        let sites: Vec<(f64, f64)> = state
            .members
            .iter()
            .map(|&m| net.element(m).position)
            .collect();

        let mut sights = Vec::with_capacity(region.len() * sites.len());
        let mut frozen_max = Vec::with_capacity(region.len());
        let mut frozen_rest = Vec::with_capacity(region.len());
        let mut frozen_sum = Vec::with_capacity(region.len());
        let mut rx = vec![0.0; frozen_ids.len()];
        for &p in &region {
            let point = self.points[p];
            sights.extend(sites.iter().map(|&s| Sight::new(s, point)));
            if snap.rx.is_empty() {
                for (slot, (a, law)) in rx.iter_mut().zip(&frozen) {
                    *slot = dbm_to_mw(rx_dbm(
                        a.power_dbm,
                        a.height_m,
                        a.tilt_deg,
                        a.azimuth_deg,
                        law,
                        &Sight::new(a.site, point),
                        self.cfg.receiver_height_m,
                    ));
                }
            } else {
                let row = &snap.rx[p * snap.antennas..(p + 1) * snap.antennas];
                for (slot, &a) in rx.iter_mut().zip(&frozen_ids) {
                    *slot = row[a];
                }
            }
            if rx.is_empty() {
                frozen_max.push(0.0);
                frozen_rest.push(0.0);
                frozen_sum.push(0.0);
            } else {
                let (top, _) = rx
                    .iter()
                    .enumerate()
                    .fold((0, rx[0]), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
                frozen_max.push(rx[top]);
                frozen_rest.push(
                    rx.iter()
                        .enumerate()
                        .filter(|&(i, _)| i != top)
                        .map(|(_, &v)| v)
                        .sum(),
                );
                frozen_sum.push(rx.iter().sum());
            }
        }
        WirelessLocal {
            receiver_height_m: self.cfg.receiver_height_m,
            cfg: self.cfg.clone(),
            k: net.params_per_element(),
            members: state.members.len(),
            region,
            sights,
            frozen_max,
            frozen_rest,
            frozen_sum,
            noise_mw: dbm_to_mw(self.cfg.noise_floor_dbm),
            laws: Vec::with_capacity(state.members.len()),
            member_rx: vec![0.0; state.members.len()],
        }
    }
}

/// Whether two snapshot keys describe the same antenna positions.
fn same_sites(a: &[f64], b: &[f64], n: usize) -> bool {
    if a.len() != b.len() || n == 0 {
        return false;
    }
    let stride = a.len() / n;
    (0..n).all(|i| a[i * stride] == b[i * stride] && a[i * stride + 1] == b[i * stride + 1])
}

impl Objective for WirelessObjective {
    fn quality(&self, net: &Network) -> Result<f64> {
        let snap = self.snapshot(net);
        Ok(snap.sinr_db.iter().sum::<f64>() / snap.sinr_db.len() as f64)
    }

    fn local<'a>(&'a self, state: &SubnetState) -> Result<Box<dyn LocalObjective + 'a>> {
        Ok(Box::new(self.subnet_evaluator(state)))
    }
}

/// Mean SINR over a subnet's region as a function of its members'
/// parameters.
pub struct WirelessLocal {
    cfg: PropagationConfig,
    receiver_height_m: f64,
    k: usize,
    members: usize,
    region: Vec<usize>,
    /// Region-major: `sights[r * members + m]`.
    sights: Vec<Sight>,
    frozen_max: Vec<f64>,
    /// Sum of frozen powers except the strongest.
    frozen_rest: Vec<f64>,
    frozen_sum: Vec<f64>,
    noise_mw: f64,
    laws: Vec<LossLaw>,
    member_rx: Vec<f64>,
}

impl WirelessLocal {
    /// Grid point indices the subnet is scored over.
    pub fn region(&self) -> &[usize] {
        &self.region
    }

    pub fn region_len(&self) -> usize {
        self.region.len()
    }

    /// Mean SINR over the region; 0 for an empty region.
    pub fn mean_sinr(&mut self, free_params: &[f64]) -> f64 {
        if self.region.is_empty() {
            return 0.0;
        }
        let k = self.k;
        self.laws.clear();
        for m in 0..self.members {
            self.laws
                .push(LossLaw::new(&self.cfg, free_params[m * k + HEIGHT]));
        }
        let mut total = 0.0;
        for r in 0..self.region.len() {
            let sights = &self.sights[r * self.members..(r + 1) * self.members];
            let mut top = 0;
            for m in 0..self.members {
                let p = &free_params[m * k..(m + 1) * k];
                let v = dbm_to_mw(rx_dbm(
                    p[POWER],
                    p[HEIGHT],
                    p[TILT],
                    p[AZIMUTH].rem_euclid(360.0),
                    &self.laws[m],
                    &sights[m],
                    self.receiver_height_m,
                ));
                self.member_rx[m] = v;
                if v > self.member_rx[top] {
                    top = m;
                }
            }
            let (signal, interference) = if self.frozen_max[r] >= self.member_rx[top] {
                let members: f64 = self.member_rx.iter().sum();
                (self.frozen_max[r], self.frozen_rest[r] + members)
            } else {
                let others: f64 = self
                    .member_rx
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != top)
                    .map(|(_, &v)| v)
                    .sum();
                (self.member_rx[top], self.frozen_sum[r] + others)
            };
            total += 10.0 * (signal / (interference + self.noise_mw)).log10();
        }
        total / self.region.len() as f64
    }
}

impl LocalObjective for WirelessLocal {
    fn quality(&mut self, free_params: &[f64]) -> Result<f64> {
        Ok(self.mean_sinr(free_params))
    }
}
