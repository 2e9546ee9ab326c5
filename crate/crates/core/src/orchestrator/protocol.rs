//! Coordinator/worker contract: how a split's subnets are spread over the
//! worker lanes, and how the returned parameters are folded back into the
//! network.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::Split;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::objective::Objective;

/// One unit of work: subnet `subnet` of the split (by position), run on
/// `worker` as replica number `replica` of that subnet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub subnet: usize,
    pub worker: usize,
    pub replica: usize,
}

/// Spreads a split over `worker_count` lanes. Each subnet is assigned once;
/// while there are fewer assignments than lanes, uniformly chosen subnets
/// are duplicated. Assignments are dealt round-robin so lane loads differ by
/// at most one.
pub fn dispatch<R: Rng + ?Sized>(
    split: &Split,
    worker_count: usize,
    rng: &mut R,
) -> Vec<Assignment> {
    let n = split.len();
    if n == 0 || worker_count == 0 {
        return Vec::new();
    }
    let mut replicas = vec![0usize; n];
    let mut order: Vec<usize> = (0..n).collect();
    while order.len() < worker_count {
        order.push(rng.random_range(0..n));
    }
    order
        .into_iter()
        .enumerate()
        .map(|(slot, subnet)| {
            let replica = replicas[subnet];
            replicas[subnet] += 1;
            Assignment {
                subnet,
                worker: slot % worker_count,
                replica,
            }
        })
        .collect()
}

/// What a worker sends back for one assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubnetResult {
    pub subnet_id: usize,
    pub replica: usize,
    /// Element ids whose parameters `params` holds, ascending.
    pub members: Vec<usize>,
    pub params: Vec<f64>,
    pub energy: f64,
    /// Energy of the subnet before optimization.
    pub initial_energy: f64,
}

impl SubnetResult {
    pub fn changed(&self) -> bool {
        self.energy < self.initial_energy
    }
}

/// Picks the lowest-energy replica of every subnet (ties: lowest replica id)
/// and checks that distinct subnets do not share elements. The result is
/// ordered by subnet id and independent of the input order.
pub fn select_best(results: &[SubnetResult]) -> Result<Vec<&SubnetResult>> {
    let mut best: BTreeMap<usize, &SubnetResult> = BTreeMap::new();
    for r in results {
        best.entry(r.subnet_id)
            .and_modify(|cur| {
                let better = r
                    .energy
                    .total_cmp(&cur.energy)
                    .then(r.replica.cmp(&cur.replica))
                    .is_lt();
                if better {
                    *cur = r;
                }
            })
            .or_insert(r);
    }
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for r in results {
        for &m in &r.members {
            if let Some(&other) = owner.get(&m) {
                if other != r.subnet_id {
                    return Err(Error::OverlappingSubnets {
                        a: other.min(r.subnet_id),
                        b: other.max(r.subnet_id),
                    });
                }
            }
            owner.insert(m, r.subnet_id);
        }
    }
    Ok(best.into_values().collect())
}

#[derive(Debug, Clone)]
pub struct Merged {
    pub network: Network,
    pub quality: f64,
    /// Strictly better than the pre-merge network.
    pub improved: bool,
    /// Subnet ids whose parameters were written.
    pub written: Vec<usize>,
}

/// Writes the best replica of every improved subnet into a copy of `net`
/// and scores it. `current_quality` is the quality of `net` itself.
pub fn merge(
    net: &Network,
    current_quality: f64,
    results: &[SubnetResult],
    objective: &dyn Objective,
) -> Result<Merged> {
    let best = select_best(results)?;
    let changed: Vec<&SubnetResult> = best.into_iter().filter(|r| r.changed()).collect();
    if changed.is_empty() {
        return Ok(Merged {
            network: net.clone(),
            quality: current_quality,
            improved: false,
            written: Vec::new(),
        });
    }
    let k = net.params_per_element();
    let mut network = net.clone();
    for r in &changed {
        for (i, &id) in r.members.iter().enumerate() {
            network.set_params(id, &r.params[i * k..(i + 1) * k]);
        }
    }
    let quality = objective.quality(&network)?;
    Ok(Merged {
        network,
        quality,
        improved: quality > current_quality,
        written: changed.iter().map(|r| r.subnet_id).collect(),
    })
}
