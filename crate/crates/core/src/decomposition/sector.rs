//! Balanced min-crossing-weight partitioning used by the sector planning
//! baseline: greedy graph growing followed by Kernighan-Lin style refinement.

use super::OptimizedUnit;
use crate::error::{Error, Result};
use crate::network::CorrelationGraph;

/// Total weight of edges whose endpoints lie in different parts.
pub fn crossing_weight(g: &CorrelationGraph, parts: &[OptimizedUnit]) -> f64 {
    let mut part_of = vec![usize::MAX; g.len()];
    for (p, unit) in parts.iter().enumerate() {
        for &m in unit.members() {
            part_of[m] = p;
        }
    }
    g.edges()
        .filter(|&(a, b, _)| part_of[a] != part_of[b])
        .map(|(_, _, w)| w)
        .sum()
}

/// Splits the graph into `k` parts minimizing crossing weight.
///
/// Part sizes stay within `⌈n/k⌉·(1 ± balance_tol)`, widened where needed so
/// that the exact balanced sizes `⌊n/k⌋`/`⌈n/k⌉` are always admissible.
/// Parts are returned ordered by their smallest member.
pub fn sector_partition(
    g: &CorrelationGraph,
    k: usize,
    balance_tol: f64,
) -> Result<Vec<OptimizedUnit>> {
    let n = g.len();
    if k == 0 || k > n {
        return Err(Error::invalid(
            "k",
            format!("must be within 1..={n}, got {k}"),
        ));
    }
    if !(balance_tol.is_finite() && balance_tol >= 0.0) {
        return Err(Error::invalid("balance_tol", "must be a non-negative number"));
    }
    let ceil = n.div_ceil(k);
    let floor = n / k;
    let lo = (((ceil as f64) * (1.0 - balance_tol)).floor() as usize)
        .min(floor)
        .max(1);
    let hi = (((ceil as f64) * (1.0 + balance_tol)).ceil() as usize).max(ceil);

    let mut state = PartitionState::grow(g, k);
    state.refine(g, lo, hi);
    Ok(state.into_units(k))
}

struct PartitionState {
    part_of: Vec<usize>,
    sizes: Vec<usize>,
    /// `conn[v * k + p]`: total weight between `v` and the members of part `p`.
    conn: Vec<f64>,
    k: usize,
}

impl PartitionState {
    /// Grows parts one after another. Each part is seeded by the unassigned
    /// vertex least connected to what is already assigned and absorbs the
    /// most strongly connected unassigned vertex until it reaches its size.
    fn grow(g: &CorrelationGraph, k: usize) -> Self {
        let n = g.len();
        let (base, rem) = (n / k, n % k);
        let mut part_of = vec![usize::MAX; n];
        let mut to_assigned = vec![0.0f64; n];
        let mut sizes = vec![0; k];
        for p in 0..k {
            let target = base + usize::from(p < rem);
            let mut to_part = vec![0.0f64; n];
            let seed = (0..n)
                .filter(|&v| part_of[v] == usize::MAX)
                .min_by(|&a, &b| to_assigned[a].total_cmp(&to_assigned[b]).then(a.cmp(&b)))
                .expect("enough unassigned vertices remain");
            let mut next = Some(seed);
            while let Some(v) = next {
                part_of[v] = p;
                sizes[p] += 1;
                for (u, w) in g.neighbors(v) {
                    to_part[u] += w;
                    to_assigned[u] += w;
                }
                if sizes[p] == target {
                    break;
                }
                next = (0..n)
                    .filter(|&u| part_of[u] == usize::MAX)
                    .max_by(|&a, &b| to_part[a].total_cmp(&to_part[b]).then(b.cmp(&a)));
            }
        }
        let mut conn = vec![0.0; n * k];
        for (a, b, w) in g.edges() {
            conn[a * k + part_of[b]] += w;
            conn[b * k + part_of[a]] += w;
        }
        Self {
            part_of,
            sizes,
            conn,
            k,
        }
    }

    /// Applies the best single move or pairwise swap until none lowers the
    /// crossing weight. Every applied step strictly decreases it.
    fn refine(&mut self, g: &CorrelationGraph, lo: usize, hi: usize) {
        let n = g.len();
        let k = self.k;
        if k == 1 {
            return;
        }
        loop {
            let mut best: Option<(f64, Step)> = None;
            let mut consider = |gain: f64, step: Step| {
                let eps = 1e-12 * (1.0 + gain.abs());
                if gain > eps && best.as_ref().is_none_or(|(g0, _)| gain > *g0) {
                    best = Some((gain, step));
                }
            };
            for v in 0..n {
                let own = self.part_of[v];
                if self.sizes[own] <= lo {
                    continue;
                }
                for q in 0..k {
                    if q != own && self.sizes[q] < hi {
                        let gain = self.conn[v * k + q] - self.conn[v * k + own];
                        consider(gain, Step::Move { v, to: q });
                    }
                }
            }
            for u in 0..n {
                let pu = self.part_of[u];
                for v in (u + 1)..n {
                    let pv = self.part_of[v];
                    if pu == pv {
                        continue;
                    }
                    let gain = (self.conn[u * k + pv] - self.conn[u * k + pu])
                        + (self.conn[v * k + pu] - self.conn[v * k + pv])
                        - 2.0 * g.weight(u, v);
                    consider(gain, Step::Swap { u, v });
                }
            }
            match best {
                Some((_, Step::Move { v, to })) => self.relocate(g, v, to),
                Some((_, Step::Swap { u, v })) => {
                    let (pu, pv) = (self.part_of[u], self.part_of[v]);
                    self.relocate(g, u, pv);
                    self.relocate(g, v, pu);
                }
                None => break,
            }
        }
    }

    fn relocate(&mut self, g: &CorrelationGraph, v: usize, to: usize) {
        let from = self.part_of[v];
        let k = self.k;
        for (u, w) in g.neighbors(v) {
            self.conn[u * k + from] -= w;
            self.conn[u * k + to] += w;
        }
        self.part_of[v] = to;
        self.sizes[from] -= 1;
        self.sizes[to] += 1;
    }

    fn into_units(self, k: usize) -> Vec<OptimizedUnit> {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (v, &p) in self.part_of.iter().enumerate() {
            groups[p].push(v);
        }
        let mut units: Vec<OptimizedUnit> = groups
            .into_iter()
            .map(|members| OptimizedUnit::new(members).expect("parts are never emptied"))
            .collect();
        units.sort_by_key(|u| u.members()[0]);
        units
    }
}

enum Step {
    Move { v: usize, to: usize },
    Swap { u: usize, v: usize },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> CorrelationGraph {
        let mut edges = Vec::new();
        for base in [0, 3] {
            for a in base..base + 3 {
                for b in (a + 1)..base + 3 {
                    edges.push((a, b, 1.0));
                }
            }
        }
        edges.push((2, 3, 0.1));
        CorrelationGraph::from_edges(6, &edges).unwrap()
    }

    /// Minimum crossing weight over all 2-partitions with part sizes 3/3.
    fn brute_force_bisection(g: &CorrelationGraph) -> f64 {
        let n = g.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n / 2 {
                continue;
            }
            let cut: f64 = g
                .edges()
                .filter(|&(a, b, _)| ((mask >> a) & 1) != ((mask >> b) & 1))
                .map(|(_, _, w)| w)
                .sum();
            best = best.min(cut);
        }
        best
    }

    #[test]
    fn single_part() {
        let g = two_cliques();
        let parts = sector_partition(&g, 1, 0.1).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].len(), 6);
        assert_eq!(crossing_weight(&g, &parts), 0.0);
    }

    #[test]
    fn two_cliques_recover_min_cut() {
        let g = two_cliques();
        let parts = sector_partition(&g, 2, 0.0).unwrap();
        assert_eq!(parts[0].members(), &[0, 1, 2]);
        assert_eq!(parts[1].members(), &[3, 4, 5]);
        let cut = crossing_weight(&g, &parts);
        assert!((cut - 0.1).abs() < 1e-12);
        assert!((cut - brute_force_bisection(&g)).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let g = two_cliques();
        let parts = sector_partition(&g, 6, 0.2).unwrap();
        assert_eq!(parts.len(), 6);
        assert!(parts.iter().all(|p| p.len() == 1));
    }

    #[test]
    fn invalid_k_is_rejected() {
        let g = two_cliques();
        assert!(sector_partition(&g, 0, 0.1).is_err());
        assert!(sector_partition(&g, 7, 0.1).is_err());
    }

    #[test]
    fn refinement_repairs_a_poor_growth() {
        // Vertex ids interleave the two clusters, so growth by id order alone
        // would cut badly; refinement has to fix it.
        let cluster_a = [0, 2, 4, 6];
        let cluster_b = [1, 3, 5, 7];
        let mut edges = Vec::new();
        for cluster in [cluster_a, cluster_b] {
            for (i, &a) in cluster.iter().enumerate() {
                for &b in &cluster[i + 1..] {
                    edges.push((a, b, 1.0));
                }
            }
        }
        edges.push((0, 1, 0.05));
        edges.push((6, 7, 0.05));
        let g = CorrelationGraph::from_edges(8, &edges).unwrap();
        let parts = sector_partition(&g, 2, 0.0).unwrap();
        assert!((crossing_weight(&g, &parts) - brute_force_bisection(&g)).abs() < 1e-12);
    }
}
