//! Precision-restricted simulated annealing over the free parameters of one
//! subnet.
//!
//! The precision `p ∈ [0, 1]` drives both the neighborhood radius
//! (`max_step · (1 − p)`, as a fraction of each parameter's range) and the
//! temperature (`temperature(1 − p)`), so raising `p` turns a rough global
//! search into a fine local one.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;

/// Parameters of one subnet under optimization, with every other element
/// frozen in a shared snapshot.
#[derive(Debug, Clone)]
pub struct SubnetState {
    /// Element ids owning the free parameters, ascending.
    pub members: Vec<usize>,
    /// Concatenated parameters of `members`, element-major.
    pub free_params: Vec<f64>,
    /// `(min, max)` aligned with `free_params`.
    pub bounds: Vec<(f64, f64)>,
    pub frozen_env: Arc<Network>,
}

impl SubnetState {
    pub fn from_network(net: Arc<Network>, members: &[usize]) -> Self {
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        let specs = net.specs();
        let mut free_params = Vec::with_capacity(members.len() * specs.len());
        let mut bounds = Vec::with_capacity(free_params.capacity());
        for &id in &members {
            free_params.extend_from_slice(&net.element(id).params);
            bounds.extend(specs.iter().map(|s| (s.min, s.max)));
        }
        Self {
            members,
            free_params,
            bounds,
            frozen_env: net,
        }
    }

    pub fn params_of(&self, index: usize) -> &[f64] {
        let k = self.frozen_env.params_per_element();
        &self.free_params[index * k..(index + 1) * k]
    }

    pub fn in_bounds(&self) -> bool {
        self.free_params
            .iter()
            .zip(&self.bounds)
            .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }
}

/// Shape of the temperature as a function of `x = 1 − p`. Both laws are
/// increasing, vanish at `x = 0` and equal `t0` at `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemperatureLaw {
    #[default]
    Linear,
    /// `t0 · (e^{s·x} − 1) / (e^s − 1)`; colder than linear for `s > 0`.
    Exponential { sharpness: f64 },
}

impl TemperatureLaw {
    pub fn temperature(&self, x: f64, t0: f64) -> f64 {
        match *self {
            TemperatureLaw::Linear => temperature(x, t0),
            TemperatureLaw::Exponential { sharpness } if sharpness.abs() > 1e-12 => {
                t0 * (sharpness * x).exp_m1() / sharpness.exp_m1()
            }
            TemperatureLaw::Exponential { .. } => temperature(x, t0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    /// Largest perturbation as a fraction of each parameter's range, in (0, 1].
    pub max_step: f64,
    /// Temperature scale, in energy units.
    pub t0: f64,
    /// Proposals per subnet visit.
    pub iterations: u32,
    pub seed: u64,
    #[serde(default)]
    pub law: TemperatureLaw,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            max_step: 0.5,
            t0: 0.5,
            iterations: 60,
            seed: 0,
            law: TemperatureLaw::Linear,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_step > 0.0 && self.max_step <= 1.0) {
            return Err(Error::invalid("max_step", "must be within (0, 1]"));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::invalid("t0", "must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations", "must be at least 1"));
        }
        if let TemperatureLaw::Exponential { sharpness } = self.law {
            if !sharpness.is_finite() {
                return Err(Error::invalid("law.sharpness", "must be finite"));
            }
        }
        Ok(())
    }
}

#[inline]
pub fn step_size(max_step: f64, p: f64) -> f64 {
    max_step * (1.0 - p)
}

#[inline]
pub fn temperature(x: f64, t0: f64) -> f64 {
    t0 * x
}

/// Metropolis acceptance probability.
#[inline]
pub fn acceptance(e_old: f64, e_new: f64, t: f64) -> f64 {
    if e_new <= e_old {
        1.0
    } else if t > 0.0 {
        ((e_old - e_new) / t).exp()
    } else {
        0.0
    }
}

/// Perturbs every free parameter uniformly within `±step · range` and clamps
/// the result to its bounds. The frozen environment is shared, not copied.
pub fn random_neighbor<R: Rng + ?Sized>(s: &SubnetState, step: f64, rng: &mut R) -> SubnetState {
    let mut next = s.clone();
    perturb(&mut next.free_params, &s.free_params, &s.bounds, step, rng);
    next
}

fn perturb<R: Rng + ?Sized>(
    out: &mut [f64],
    from: &[f64],
    bounds: &[(f64, f64)],
    step: f64,
    rng: &mut R,
) {
    if step <= 0.0 {
        out.copy_from_slice(from);
        return;
    }
    for ((slot, &value), &(lo, hi)) in out.iter_mut().zip(from).zip(bounds) {
        let radius = step * (hi - lo);
        let delta = rng.random_range(-radius..=radius);
        *slot = (value + delta).clamp(lo, hi);
    }
}

/// Outcome of one annealing pass.
#[derive(Debug, Clone)]
pub struct AnnealOutcome {
    pub state: SubnetState,
    pub energy: f64,
    pub initial_energy: f64,
    pub accepted: u32,
}

/// Runs `cfg.iterations` precision-restricted proposals from `s0` and returns
/// the best state visited. Never returns a state worse than `s0`.
pub fn optimize_subnet<F, E>(
    s0: &SubnetState,
    p: f64,
    cfg: &AnnealConfig,
    energy: F,
) -> std::result::Result<(SubnetState, f64), E>
where
    F: FnMut(&[f64]) -> std::result::Result<f64, E>,
{
    let step = step_size(cfg.max_step, p);
    let t = cfg.law.temperature(1.0 - p, cfg.t0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let out = anneal(s0, step, t, cfg.iterations, &mut rng, energy)?;
    Ok((out.state, out.energy))
}

/// The annealing loop with an explicit step and temperature. Used directly by
/// schedules that do not derive both from a single precision value.
pub fn anneal<F, E, R>(
    s0: &SubnetState,
    step: f64,
    t: f64,
    iterations: u32,
    rng: &mut R,
    mut energy: F,
) -> std::result::Result<AnnealOutcome, E>
where
    F: FnMut(&[f64]) -> std::result::Result<f64, E>,
    R: Rng + ?Sized,
{
    let initial_energy = energy(&s0.free_params)?;
    if step <= 0.0 {
        return Ok(AnnealOutcome {
            state: s0.clone(),
            energy: initial_energy,
            initial_energy,
            accepted: 0,
        });
    }
    let mut current = s0.free_params.clone();
    let mut current_e = initial_energy;
    let mut best = current.clone();
    let mut best_e = current_e;
    let mut candidate = current.clone();
    let mut accepted = 0;
    for _ in 0..iterations {
        perturb(&mut candidate, &current, &s0.bounds, step, rng);
        let e = energy(&candidate)?;
        // u in (0, 1]: a zero acceptance probability never passes
        let u = 1.0 - rng.random::<f64>();
        if acceptance(current_e, e, t) >= u {
            std::mem::swap(&mut current, &mut candidate);
            current_e = e;
            accepted += 1;
            if current_e < best_e {
                best_e = current_e;
                best.copy_from_slice(&current);
            }
        }
    }
    let mut state = s0.clone();
    state.free_params = best;
    Ok(AnnealOutcome {
        state,
        energy: best_e,
        initial_energy,
        accepted,
    })
}

/// Mixes a master seed with a path of indices into an independent stream
/// seed (SplitMix64 finalizer per component).
pub fn stream_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix(master ^ 0x5851_f42d_4c95_7f2d);
    for &part in path {
        h = splitmix(h ^ splitmix(part.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use std::convert::Infallible;

    use super::*;
    use crate::network::{Element, ParameterSpec};

    fn state(values: &[f64], min: f64, max: f64) -> SubnetState {
        let specs = vec![ParameterSpec::new("x", min, max)];
        let elements = values
            .iter()
            .enumerate()
            .map(|(id, &v)| Element {
                id,
                position: (id as f64, 0.0),
                params: vec![v],
            })
            .collect();
        let net = Arc::new(Network::new(specs, elements).unwrap());
        let ids: Vec<usize> = (0..values.len()).collect();
        SubnetState::from_network(net, &ids)
    }

    #[test]
    fn step_size_examples() {
        assert_eq!(step_size(0.5, 0.0), 0.5);
        assert_eq!(step_size(0.5, 1.0), 0.0);
        assert!((step_size(0.4, 0.25) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn temperature_examples() {
        assert_eq!(temperature(1.0, 2.0), 2.0);
        assert_eq!(temperature(0.0, 2.0), 0.0);
        assert_eq!(temperature(0.5, 2.0), 1.0);
    }

    #[test]
    fn exponential_law_hits_endpoints() {
        let law = TemperatureLaw::Exponential { sharpness: 3.0 };
        assert_eq!(law.temperature(0.0, 2.0), 0.0);
        assert!((law.temperature(1.0, 2.0) - 2.0).abs() < 1e-12);
        assert!(law.temperature(0.5, 2.0) < 1.0);
    }

    #[test]
    fn acceptance_examples() {
        assert_eq!(acceptance(3.0, 1.0, 0.7), 1.0);
        assert_eq!(acceptance(3.0, 1.0, 0.0), 1.0);
        assert!((acceptance(0.0, 1.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((acceptance(0.0, 1.0, 1.0) - 0.3679).abs() < 1e-4);
        assert_eq!(acceptance(0.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn zero_step_neighbor_is_identical() {
        let s = state(&[0.2, 0.9], 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = random_neighbor(&s, 0.0, &mut rng);
        assert_eq!(n.free_params, s.free_params);
    }

    #[test]
    fn full_step_neighbor_stays_in_bounds_and_reaches_far() {
        let s = state(&[0.0], 0.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut max_seen: f64 = 0.0;
        for _ in 0..2000 {
            let n = random_neighbor(&s, 1.0, &mut rng);
            assert!(n.in_bounds());
            max_seen = max_seen.max(n.free_params[0]);
        }
        assert!(max_seen > 0.99);
    }

    #[test]
    fn neighbor_is_deterministic_per_seed() {
        let s = state(&[0.3, 0.4, 0.5], 0.0, 1.0);
        let a = random_neighbor(&s, 0.1, &mut ChaCha8Rng::seed_from_u64(7));
        let b = random_neighbor(&s, 0.1, &mut ChaCha8Rng::seed_from_u64(7));
        let bits = |s: &SubnetState| s.free_params.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert!(Arc::ptr_eq(&a.frozen_env, &s.frozen_env));
    }

    #[test]
    fn quadratic_improves_at_half_precision() {
        let s0 = state(&[0.9, 0.1], 0.0, 1.0);
        let energy = |x: &[f64]| -> Result<f64, Infallible> {
            Ok(x.iter().map(|v| (v - 0.4).powi(2)).sum())
        };
        let e0 = energy(&s0.free_params).unwrap();
        let cfg = AnnealConfig {
            max_step: 0.5,
            t0: 0.1,
            iterations: 300,
            seed: 3,
            ..AnnealConfig::default()
        };
        let (_, e) = optimize_subnet(&s0, 0.5, &cfg, energy).unwrap();
        assert!(e < e0);
    }

    #[test]
    fn full_precision_freezes_the_state() {
        let s0 = state(&[0.9], 0.0, 1.0);
        let cfg = AnnealConfig::default();
        let (s, e) =
            optimize_subnet(&s0, 1.0, &cfg, |x| Ok::<_, Infallible>((x[0] - 0.1).powi(2))).unwrap();
        assert_eq!(s.free_params, s0.free_params);
        assert!((e - 0.64).abs() < 1e-12);
    }

    #[test]
    fn energy_errors_propagate() {
        let s0 = state(&[0.5], 0.0, 1.0);
        let out = optimize_subnet(&s0, 0.0, &AnnealConfig::default(), |_| Err::<f64, _>("boom"));
        assert_eq!(out.unwrap_err(), "boom");
    }

    #[test]
    fn config_validation() {
        assert!(AnnealConfig::default().validate().is_ok());
        for bad in [
            AnnealConfig { max_step: 0.0, ..AnnealConfig::default() },
            AnnealConfig { max_step: 1.5, ..AnnealConfig::default() },
            AnnealConfig { t0: 0.0, ..AnnealConfig::default() },
            AnnealConfig { iterations: 0, ..AnnealConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn stream_seeds_differ_by_path() {
        let a = stream_seed(1, &[0, 0, 1]);
        let b = stream_seed(1, &[0, 1, 0]);
        let c = stream_seed(2, &[0, 0, 1]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, stream_seed(1, &[0, 0, 1]));
    }
}
