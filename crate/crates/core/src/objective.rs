//! The objective contract the orchestrator optimizes against.
//!
//! Quality is maximized. A subnet is scored by a [`LocalObjective`] built
//! from a snapshot: only the subnet's members vary, everything else stays
//! frozen, which is what lets disjoint subnets be optimized independently.

use crate::anneal::SubnetState;
use crate::error::Result;
use crate::network::Network;

pub trait Objective: Send + Sync {
    /// Global quality of a complete parameter assignment.
    fn quality(&self, net: &Network) -> Result<f64>;

    /// Quality of the subnet `state.members` as a function of its free
    /// parameters, with all other elements frozen at `state.frozen_env`.
    fn local<'a>(&'a self, state: &SubnetState) -> Result<Box<dyn LocalObjective + 'a>>;
}

pub trait LocalObjective {
    fn quality(&mut self, free_params: &[f64]) -> Result<f64>;
}

/// Sum of independent per-element quadratics: every element wants each
/// parameter at its own target. Quality is the negated mean squared
/// normalized distance to the targets, so subnet scores recombine exactly.
#[derive(Debug, Clone)]
pub struct SeparableQuadratic {
    /// `targets[id]` is the optimum of element `id`, one value per parameter.
    pub targets: Vec<Vec<f64>>,
    ranges: Vec<f64>,
}

impl SeparableQuadratic {
    pub fn new(net: &Network, targets: Vec<Vec<f64>>) -> Self {
        let ranges = net.specs().iter().map(|s| s.range()).collect();
        Self { targets, ranges }
    }

    fn element_cost(&self, id: usize, params: &[f64]) -> f64 {
        params
            .iter()
            .zip(&self.targets[id])
            .zip(&self.ranges)
            .map(|((v, t), r)| ((v - t) / r).powi(2))
            .sum()
    }
}

impl Objective for SeparableQuadratic {
    fn quality(&self, net: &Network) -> Result<f64> {
        let total: f64 = net
            .elements()
            .iter()
            .map(|e| self.element_cost(e.id, &e.params))
            .sum();
        Ok(-total / net.len() as f64)
    }

    fn local<'a>(&'a self, state: &SubnetState) -> Result<Box<dyn LocalObjective + 'a>> {
        Ok(Box::new(SeparableLocal {
            objective: self,
            members: state.members.clone(),
            k: state.frozen_env.params_per_element(),
        }))
    }
}

struct SeparableLocal<'a> {
    objective: &'a SeparableQuadratic,
    members: Vec<usize>,
    k: usize,
}

impl LocalObjective for SeparableLocal<'_> {
    fn quality(&mut self, free_params: &[f64]) -> Result<f64> {
        let total: f64 = self
            .members
            .iter()
            .enumerate()
            .map(|(i, &id)| {
                self.objective
                    .element_cost(id, &free_params[i * self.k..(i + 1) * self.k])
            })
            .sum();
        Ok(-total / self.members.len() as f64)
    }
}
