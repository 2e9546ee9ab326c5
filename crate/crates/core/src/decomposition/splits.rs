use serde::Serialize;

use super::Subnet;
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Maximum vertex coverage among conflict-free sets containing the seed.
    /// Exponential; refused above `cap` subnets.
    Exact { cap: usize },
    /// Adds subnets largest first, preferring subnets no earlier split used
    /// among equal sizes, then lower ids. Maximal, not necessarily optimal.
    Greedy,
}

impl SplitMode {
    pub fn exact() -> Self {
        SplitMode::Exact {
            cap: DEFAULT_EXACT_CAP,
        }
    }
}

/// A maximal set of pairwise non-overlapping subnets, sorted by subnet id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub subnets: Vec<Subnet>,
}

impl Split {
    /// Number of elements covered (subnets are disjoint, so this is a sum).
    pub fn coverage(&self) -> usize {
        self.subnets.iter().map(Subnet::len).sum()
    }

    pub fn subnet_ids(&self) -> Vec<usize> {
        self.subnets.iter().map(|s| s.id).collect()
    }

    pub fn len(&self) -> usize {
        self.subnets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subnets.is_empty()
    }
}

/// Packs candidate subnets into alternative splits.
///
/// Each new split is seeded by the lowest-id subnet not yet used by any
/// earlier split and grown into a maximal non-overlapping set; every subnet
/// it includes is marked used. Every candidate therefore ends up in at least
/// one split.
pub fn enumerate_splits(subnets: &[Subnet], mode: SplitMode) -> Result<Vec<Split>> {
    if subnets.is_empty() {
        return Err(Error::NoSubnets);
    }
    if let SplitMode::Exact { cap } = mode {
        if subnets.len() > cap {
            return Err(Error::TooManySubnets {
                count: subnets.len(),
                cap,
            });
        }
    }
    let conflicts = ConflictMatrix::new(subnets);
    let sizes: Vec<usize> = subnets.iter().map(Subnet::len).collect();

    let mut tapped = vec![false; subnets.len()];
    let mut splits = Vec::new();
    for seed in 0..subnets.len() {
        if tapped[seed] {
            continue;
        }
        let mut chosen = match mode {
            SplitMode::Greedy => {
                let mut order: Vec<usize> = (0..subnets.len()).collect();
                order.sort_by(|&a, &b| {
                    sizes[b]
                        .cmp(&sizes[a])
                        .then(tapped[a].cmp(&tapped[b]))
                        .then(a.cmp(&b))
                });
                grow_greedy(seed, &order, &conflicts)
            }
            SplitMode::Exact { .. } => grow_exact(seed, &sizes, &conflicts),
        };
        chosen.sort_unstable();
        for &s in &chosen {
            tapped[s] = true;
        }
        splits.push(Split {
            subnets: chosen.iter().map(|&s| subnets[s].clone()).collect(),
        });
    }
    Ok(splits)
}

fn grow_greedy(seed: usize, order: &[usize], conflicts: &ConflictMatrix) -> Vec<usize> {
    let mut chosen = vec![seed];
    for &c in order {
        if c != seed && chosen.iter().all(|&s| !conflicts.get(s, c)) {
            chosen.push(c);
        }
    }
    chosen
}

fn grow_exact(seed: usize, sizes: &[usize], conflicts: &ConflictMatrix) -> Vec<usize> {
    let candidates: Vec<usize> = (0..sizes.len())
        .filter(|&c| c != seed && !conflicts.get(seed, c))
        .collect();
    let mut search = ExactSearch {
        sizes,
        conflicts,
        candidates: &candidates,
        current: Vec::new(),
        best: Vec::new(),
        best_cover: 0,
    };
    let remaining: usize = candidates.iter().map(|&c| sizes[c]).sum();
    search.run(0, 0, remaining);
    let mut chosen = vec![seed];
    chosen.extend(search.best);
    chosen
}

/// Include-first depth-first branch and bound. Candidates are visited in id
/// order and only strict improvements replace the incumbent, so among equal
/// coverages the set preferring lower ids wins.
struct ExactSearch<'a> {
    sizes: &'a [usize],
    conflicts: &'a ConflictMatrix,
    candidates: &'a [usize],
    current: Vec<usize>,
    best: Vec<usize>,
    best_cover: usize,
}

impl ExactSearch<'_> {
    fn run(&mut self, index: usize, cover: usize, remaining: usize) {
        if cover > self.best_cover {
            self.best_cover = cover;
            self.best = self.current.clone();
        }
        if index == self.candidates.len() || cover + remaining <= self.best_cover {
            return;
        }
        let c = self.candidates[index];
        let size = self.sizes[c];
        if self.current.iter().all(|&s| !self.conflicts.get(s, c)) {
            self.current.push(c);
            self.run(index + 1, cover + size, remaining - size);
            self.current.pop();
        }
        self.run(index + 1, cover, remaining - size);
    }
}

struct ConflictMatrix {
    m: usize,
    bits: Vec<bool>,
}

impl ConflictMatrix {
    fn new(subnets: &[Subnet]) -> Self {
        let m = subnets.len();
        let max_id = subnets
            .iter()
            .flat_map(|s| s.all.iter().copied())
            .max()
            .unwrap_or(0);
        let mut holders: Vec<Vec<usize>> = vec![Vec::new(); max_id + 1];
        for (i, s) in subnets.iter().enumerate() {
            for &e in &s.all {
                holders[e].push(i);
            }
        }
        let mut bits = vec![false; m * m];
        for list in &holders {
            for &a in list {
                for &b in list {
                    if a != b {
                        bits[a * m + b] = true;
                    }
                }
            }
        }
        Self { m, bits }
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.m + b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{build_subnets, group_units};
    use crate::network::CorrelationGraph;

    fn path_subnets(n: usize) -> Vec<Subnet> {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let g = CorrelationGraph::from_edges(n, &edges).unwrap();
        let units = group_units(&g, 1).unwrap();
        build_subnets(&g, &units)
    }

    /// Maximum coverage over all conflict-free combinations containing `seed`.
    fn brute_force_cover(subnets: &[Subnet], seed: usize) -> usize {
        let m = subnets.len();
        let mut best = 0;
        for mask in 0u32..(1 << m) {
            if mask & (1 << seed) == 0 {
                continue;
            }
            let picked: Vec<&Subnet> = (0..m)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| &subnets[i])
                .collect();
            let ok = picked
                .iter()
                .enumerate()
                .all(|(i, a)| picked[i + 1..].iter().all(|b| !a.overlaps(b)));
            if ok {
                best = best.max(picked.iter().map(|s| s.len()).sum());
            }
        }
        best
    }

    #[test]
    fn single_subnet_gives_single_split() {
        let subnets = path_subnets(2)[..1].to_vec();
        for mode in [SplitMode::Greedy, SplitMode::exact()] {
            let splits = enumerate_splits(&subnets, mode).unwrap();
            assert_eq!(splits.len(), 1);
            assert_eq!(splits[0].subnet_ids(), vec![0]);
        }
    }

    #[test]
    fn disjoint_subnets_share_one_split() {
        let g = CorrelationGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let units = group_units(&g, 2).unwrap();
        let subnets = build_subnets(&g, &units);
        assert_eq!(subnets.len(), 2);
        for mode in [SplitMode::Greedy, SplitMode::exact()] {
            let splits = enumerate_splits(&subnets, mode).unwrap();
            assert_eq!(splits.len(), 1);
            assert_eq!(splits[0].subnet_ids(), vec![0, 1]);
        }
    }

    #[test]
    fn path_of_six_greedy_matches_exact_and_oracle() {
        let subnets = path_subnets(6);
        assert_eq!(subnets[0].all, vec![0, 1]);
        assert_eq!(subnets[3].all, vec![2, 3, 4]);
        assert_eq!(subnets[5].all, vec![4, 5]);
        let exact = enumerate_splits(&subnets, SplitMode::exact()).unwrap();
        let greedy = enumerate_splits(&subnets, SplitMode::Greedy).unwrap();
        assert_eq!(exact.len(), greedy.len());
        for (e, g) in exact.iter().zip(&greedy) {
            let seed = e.subnets[0].id;
            assert_eq!(seed, g.subnets[0].id);
            let oracle = brute_force_cover(&subnets, seed);
            assert_eq!(e.coverage(), oracle);
            assert_eq!(g.coverage(), oracle);
        }
        // seeds 0, 1, 2 each open a split; 3, 4, 5 get tapped along the way
        assert_eq!(greedy.len(), 3);
        assert_eq!(greedy[0].subnet_ids(), vec![0, 3]);
        assert_eq!(greedy[1].subnet_ids(), vec![1, 4]);
        assert_eq!(greedy[2].subnet_ids(), vec![2, 5]);
    }

    #[test]
    fn greedy_prefers_untapped_subnets() {
        // two triangles; every subnet of a triangle spans the whole triangle
        let mut edges = Vec::new();
        for base in [0, 3] {
            edges.extend([(base, base + 1, 1.0), (base, base + 2, 1.0), (base + 1, base + 2, 1.0)]);
        }
        let g = CorrelationGraph::from_edges(6, &edges).unwrap();
        let subnets = build_subnets(&g, &group_units(&g, 1).unwrap());
        let splits = enumerate_splits(&subnets, SplitMode::Greedy).unwrap();
        let ids: Vec<Vec<usize>> = splits.iter().map(Split::subnet_ids).collect();
        assert_eq!(ids, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);
    }

    #[test]
    fn exact_mode_refuses_large_inputs() {
        let subnets = path_subnets(8);
        let err = enumerate_splits(&subnets, SplitMode::Exact { cap: 5 });
        assert!(matches!(err, Err(Error::TooManySubnets { count: 8, cap: 5 })));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            enumerate_splits(&[], SplitMode::Greedy),
            Err(Error::NoSubnets)
        ));
    }
}
