//! Turning a correlation graph into work: weak edges are filtered out,
//! strongly tied elements are grouped into optimized units, every unit is
//! widened into a subnet with its connected context, and the subnets are
//! packed into alternative splits of non-overlapping subnets.
//!
//! [`sector_partition`] is the single-partition baseline that the
//! alternative decomposition is compared against.

mod sector;
mod splits;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::CorrelationGraph;

pub use sector::{crossing_weight, sector_partition};
pub use splits::{enumerate_splits, Split, SplitMode, DEFAULT_EXACT_CAP};

/// Elements optimized together. Members are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptimizedUnit {
    members: Vec<usize>,
}

impl OptimizedUnit {
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::invalid("members", "a unit needs at least one element"));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

/// A unit together with every element that shares a surviving edge with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subnet {
    /// Position in the candidate list the subnet was built in. Used as the
    /// seed id for splits, tie-breaks and RNG streams.
    pub id: usize,
    pub unit: OptimizedUnit,
    pub context: Vec<usize>,
    /// `unit ∪ context`, sorted.
    pub all: Vec<usize>,
}

impl Subnet {
    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }

    pub fn overlaps(&self, other: &Subnet) -> bool {
        sorted_intersect(&self.all, &other.all)
    }
}

pub(crate) fn sorted_intersect(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Drops every edge lighter than `th`; edges with weight exactly `th` survive.
pub fn filter_edges(g: &CorrelationGraph, th: f64) -> CorrelationGraph {
    debug_assert!(th >= 0.0, "threshold must be non-negative");
    let mut out = g.clone();
    for w in out.weights_mut() {
        if !(*w >= th) {
            *w = 0.0;
        }
    }
    out
}

/// Greedy heaviest-edge agglomeration into units of at most `unit_size`
/// elements. Units are returned ordered by their smallest member.
pub fn group_units(g: &CorrelationGraph, unit_size: usize) -> Result<Vec<OptimizedUnit>> {
    if unit_size == 0 {
        return Err(Error::invalid("unit_size", "must be at least 1"));
    }
    let n = g.len();
    if n == 0 {
        return Err(Error::invalid("graph", "must have at least one element"));
    }
    let mut edges: Vec<(usize, usize, f64)> = g.edges().collect();
    // heaviest first, ties by lowest endpoint ids
    edges.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));

    let mut uf = UnionFind::new(n);
    // Unit sizes only grow, so an edge that cannot be merged now can never
    // be merged later; one pass over the sorted edges is the full greedy.
    for (a, b, _) in edges {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra != rb && uf.size[ra] + uf.size[rb] <= unit_size {
            uf.union(ra, rb);
        }
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        let root = uf.find(v);
        groups[root].push(v);
    }
    let mut units: Vec<OptimizedUnit> = groups
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|members| OptimizedUnit { members })
        .collect();
    units.sort_by_key(|u| u.members[0]);
    Ok(units)
}

/// One subnet per unit; the context is every non-member with a positive
/// filtered edge to some member.
pub fn build_subnets(g_filtered: &CorrelationGraph, units: &[OptimizedUnit]) -> Vec<Subnet> {
    let n = g_filtered.len();
    units
        .iter()
        .enumerate()
        .map(|(id, unit)| {
            let mut in_context = vec![false; n];
            for &m in unit.members() {
                for (nb, _) in g_filtered.neighbors(m) {
                    in_context[nb] = true;
                }
            }
            for &m in unit.members() {
                in_context[m] = false;
            }
            let context: Vec<usize> = (0..n).filter(|&v| in_context[v]).collect();
            let mut all = context.clone();
            all.extend_from_slice(unit.members());
            all.sort_unstable();
            Subnet {
                id,
                unit: unit.clone(),
                context,
                all,
            }
        })
        .collect()
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (keep, drop) = if a < b { (a, b) } else { (b, a) };
        self.parent[drop] = keep;
        self.size[keep] += self.size[drop];
    }
}
