use std::sync::Arc;

use altdecomp_core::anneal::{acceptance, optimize_subnet, step_size, temperature, AnnealConfig, SubnetState};
use altdecomp_core::decomposition::{
    build_subnets, enumerate_splits, filter_edges, group_units, SplitMode,
};
use altdecomp_core::network::{build_correlation_graph, CorrelationGraph, Element, Network, ParameterSpec};
use altdecomp_core::objective::{Objective, SeparableQuadratic};
use altdecomp_core::orchestrator::{
    merge, run_alternative, select_best, AlternativeSettings, Execution, Schedule,
    SplitModeSetting, SubnetResult,
};
use altdecomp_core::wireless::{
    correlation_wireless, generate_network, received_power, sinr_at, Antenna, AntennaBounds,
    Grid, PropagationConfig, SinrField, WirelessObjective, POWER,
};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = CorrelationGraph> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop::option::weighted(0.4, 0.05f64..1.0), n * (n - 1) / 2).prop_map(
            move |cells| {
                let mut edges = Vec::new();
                let mut it = cells.into_iter();
                for a in 0..n {
                    for b in a + 1..n {
                        if let Some(w) = it.next().unwrap() {
                            edges.push((a, b, w));
                        }
                    }
                }
                CorrelationGraph::from_edges(n, &edges).unwrap()
            },
        )
    })
}

fn positions(max_n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..5000.0f64, 0.0..5000.0f64), 2..=max_n)
}

fn plain_network(pos: &[(f64, f64)]) -> Network {
    let elements = pos
        .iter()
        .enumerate()
        .map(|(id, &position)| Element {
            id,
            position,
            params: vec![0.5],
        })
        .collect();
    Network::new(vec![ParameterSpec::new("x", 0.0, 1.0)], elements).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correlation_graph_is_well_formed(pos in positions(20)) {
        let g = build_correlation_graph(&plain_network(&pos), correlation_wireless).unwrap();
        prop_assert!(g.is_well_formed());
        for a in 0..g.len() {
            prop_assert_eq!(g.weight(a, a), 0.0);
            for b in 0..g.len() {
                prop_assert_eq!(g.weight(a, b), g.weight(b, a));
                prop_assert!(g.weight(a, b) >= 0.0);
            }
        }
    }

    #[test]
    fn filtering_is_idempotent_and_monotone(g in graph_strategy(14), t1 in 0.0..1.0f64, t2 in 0.0..1.0f64) {
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let once = filter_edges(&g, lo);
        prop_assert_eq!(filter_edges(&once, lo), once.clone());
        let stricter = filter_edges(&g, hi);
        prop_assert!(stricter.edge_count() <= once.edge_count());
        for (a, b, w) in stricter.edges() {
            prop_assert!(w >= hi);
            prop_assert_eq!(once.weight(a, b), w);
        }
    }

    #[test]
    fn units_and_subnets_are_consistent(g in graph_strategy(14), unit_size in 1usize..4) {
        let units = group_units(&g, unit_size).unwrap();
        let mut seen = vec![0; g.len()];
        for u in &units {
            prop_assert!(u.len() <= unit_size);
            for &m in u.members() {
                seen[m] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        for s in build_subnets(&g, &units) {
            for &c in &s.context {
                prop_assert!(!s.unit.contains(c));
                prop_assert!(s.unit.members().iter().any(|&m| g.weight(m, c) > 0.0));
            }
        }
    }

    #[test]
    fn splits_are_disjoint_maximal_and_complete(g in graph_strategy(12), unit_size in 1usize..3) {
        let subnets = build_subnets(&g, &group_units(&g, unit_size).unwrap());
        for mode in [SplitMode::Greedy, SplitMode::exact()] {
            let splits = enumerate_splits(&subnets, mode).unwrap();
            for split in &splits {
                for (i, a) in split.subnets.iter().enumerate() {
                    for b in &split.subnets[i + 1..] {
                        prop_assert!(!a.overlaps(b));
                    }
                }
                for s in &subnets {
                    let inside = split.subnets.iter().any(|p| p.id == s.id);
                    prop_assert!(inside || split.subnets.iter().any(|p| p.overlaps(s)));
                }
            }
            for s in &subnets {
                prop_assert!(splits.iter().any(|sp| sp.subnets.iter().any(|p| p.id == s.id)));
            }
        }
    }

    #[test]
    fn acceptance_is_a_probability(e_old in -1e3..1e3f64, e_new in -1e3..1e3f64, t in 0.0..1e3f64) {
        let a = acceptance(e_old, e_new, t);
        prop_assert!((0.0..=1.0).contains(&a));
        if e_new <= e_old {
            prop_assert_eq!(a, 1.0);
        }
    }

    #[test]
    fn step_and_temperature_shrink_with_precision(m in 0.01..1.0f64, t0 in 0.01..10.0f64, p1 in 0.0..=1.0f64, p2 in 0.0..=1.0f64) {
        let (lo, hi) = (p1.min(p2), p1.max(p2));
        prop_assert!(step_size(m, hi) <= step_size(m, lo));
        prop_assert!(temperature(1.0 - hi, t0) <= temperature(1.0 - lo, t0));
    }

    #[test]
    fn annealing_never_worsens_and_is_deterministic(
        start in prop::collection::vec(0.0..1.0f64, 1..5),
        target in 0.0..1.0f64,
        p in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let elements = start
            .iter()
            .enumerate()
            .map(|(id, &x)| Element { id, position: (id as f64, 0.0), params: vec![x] })
            .collect();
        let net = Network::new(vec![ParameterSpec::new("x", 0.0, 1.0)], elements).unwrap();
        let members: Vec<usize> = (0..start.len()).collect();
        let s0 = SubnetState::from_network(Arc::new(net), &members);
        let cfg = AnnealConfig { iterations: 30, seed, ..AnnealConfig::default() };
        let energy = |x: &[f64]| Ok::<f64, ()>(x.iter().map(|v| (v - target).abs()).sum());
        let (a, ea) = optimize_subnet(&s0, p, &cfg, energy).unwrap();
        let (b, eb) = optimize_subnet(&s0, p, &cfg, energy).unwrap();
        prop_assert!(ea <= energy(&s0.free_params).unwrap());
        prop_assert!(a.in_bounds());
        prop_assert_eq!(a.free_params, b.free_params);
        prop_assert_eq!(ea, eb);
    }
}

fn result(subnet_id: usize, replica: usize, members: Vec<usize>, params: Vec<f64>, energy: f64) -> SubnetResult {
    SubnetResult {
        subnet_id,
        replica,
        members,
        params,
        energy,
        initial_energy: 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replica_order_does_not_change_the_merge(
        energies in prop::collection::vec(-1.0..0.5f64, 6),
        xs in prop::collection::vec(0.0..1.0f64, 6),
        shuffle in Just(()).prop_perturb(|_, mut rng| {
            let mut order: Vec<usize> = (0..6).collect();
            for i in (1..6).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            order
        }),
    ) {
        let net = plain_network(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let obj = SeparableQuadratic::new(&net, vec![vec![0.2], vec![0.4], vec![0.9]]);
        // three subnets with two replicas each; coarse energies force ties
        let results: Vec<SubnetResult> = (0..6)
            .map(|i| result(i / 2, i % 2, vec![i / 2], vec![xs[i]], (energies[i] * 4.0).round() / 4.0))
            .collect();
        let permuted: Vec<SubnetResult> = shuffle.iter().map(|&i| results[i].clone()).collect();
        let q = obj.quality(&net).unwrap();
        let a = merge(&net, q, &results, &obj).unwrap();
        let b = merge(&net, q, &permuted, &obj).unwrap();
        prop_assert_eq!(a.network, b.network);
        prop_assert_eq!(a.quality, b.quality);
        let ids = |r: Vec<&SubnetResult>| r.iter().map(|x| (x.subnet_id, x.replica)).collect::<Vec<_>>();
        prop_assert_eq!(ids(select_best(&results).unwrap()), ids(select_best(&permuted).unwrap()));
    }
}

fn antenna_strategy() -> impl Strategy<Value = Antenna> {
    (
        (0.0..3000.0f64, 0.0..3000.0f64),
        30.0..46.0f64,
        20.0..50.0f64,
        0.0..15.0f64,
        0.0..360.0f64,
    )
        .prop_map(|(site, power_dbm, height_m, tilt_deg, azimuth_deg)| Antenna {
            id: 0,
            site,
            power_dbm,
            height_m,
            tilt_deg,
            azimuth_deg,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sinr_matches_a_linear_domain_oracle(
        antennas in prop::collection::vec(antenna_strategy(), 5),
        point in (0.0..3000.0f64, 0.0..3000.0f64),
    ) {
        let cfg = PropagationConfig::default();
        let mw: Vec<f64> = antennas
            .iter()
            .map(|a| 10f64.powf(received_power(a, point, &cfg).unwrap() / 10.0))
            .collect();
        let best = mw.iter().cloned().fold(f64::MIN, f64::max);
        let others: f64 = mw.iter().sum::<f64>() - best;
        let noise = 10f64.powf(cfg.noise_floor_dbm / 10.0);
        let oracle = 10.0 * (best / (others + noise)).log10();
        let got = sinr_at(point, &antennas, &cfg).unwrap();
        prop_assert!((got - oracle).abs() < 1e-9, "{} vs {}", got, oracle);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn raising_the_servers_power_keeps_it_serving(seed in 0u64..1000, boost in 0.1..6.0f64) {
        let mut net = generate_network(3, 3, 2.0, seed, &AntennaBounds::default()).unwrap();
        let grid = Grid::covering(&net, 200.0, 0.0).unwrap();
        let cfg = PropagationConfig::default();
        let before = SinrField::compute(&net, &grid, &cfg).unwrap();
        let server = before.server[before.server.len() / 2];
        let mut params = net.element(server).params.clone();
        params[POWER] += boost;
        net.set_params(server, &params);
        let after = SinrField::compute(&net, &grid, &cfg).unwrap();
        for (i, (&b, &a)) in before.server.iter().zip(&after.server).enumerate() {
            if b == server {
                prop_assert_eq!(a, server);
                prop_assert!(after.sinr_db[i] > before.sinr_db[i]);
            }
        }
    }

    #[test]
    fn network_text_round_trips(seed in any::<u64>(), sites in 1usize..6) {
        let net = generate_network(sites, 3, 2.0, seed, &AntennaBounds::default()).unwrap();
        let back = Network::read_text(net.to_text().as_bytes()).unwrap();
        prop_assert_eq!(back, net);
    }
}

#[test]
fn remote_perturbation_barely_reaches_a_subnet() {
    // two clusters 100 km apart
    let mut net = generate_network(4, 3, 2.0, 9, &AntennaBounds::default()).unwrap();
    let far = generate_network(4, 3, 2.0, 10, &AntennaBounds::default()).unwrap();
    let offset = net.len();
    let mut elements = net.elements().to_vec();
    elements.extend(far.elements().iter().map(|e| Element {
        id: e.id + offset,
        position: (e.position.0 + 100_000.0, e.position.1),
        params: e.params.clone(),
    }));
    net = Network::new(net.specs().to_vec(), elements).unwrap();
    let grid = Grid::covering(&net, 250.0, 0.0).unwrap();
    let obj = WirelessObjective::new(PropagationConfig::default(), grid).unwrap();
    let local_quality = |net: &Network| {
        let state = SubnetState::from_network(Arc::new(net.clone()), &[0, 1, 2]);
        let mut local = obj.subnet_evaluator(&state);
        local.mean_sinr(&state.free_params)
    };
    let base = local_quality(&net);

    let mut remote = net.clone();
    let mut p = remote.element(offset).params.clone();
    p[POWER] = 46.0;
    remote.set_params(offset, &p);
    let mut near = net.clone();
    let mut p = near.element(3).params.clone();
    p[POWER] = if p[POWER] > 38.0 { 30.0 } else { 46.0 };
    near.set_params(3, &p);

    let remote_change = (local_quality(&remote) - base).abs();
    let near_change = (local_quality(&near) - base).abs();
    assert!(near_change > 1e-3, "{near_change}");
    assert!(remote_change < 1e-6 * near_change, "{remote_change} vs {near_change}");
}

#[test]
fn trace_times_strictly_increase() {
    let pos: Vec<(f64, f64)> = (0..10).map(|i| ((i % 5) as f64 * 300.0, (i / 5) as f64 * 300.0)).collect();
    let net = plain_network(&pos);
    let obj = SeparableQuadratic::new(&net, (0..10).map(|i| vec![i as f64 / 10.0]).collect());
    let settings = AlternativeSettings {
        schedule: Schedule { th_min: 1.0, th_max: 4.0, ..Schedule::default() },
        anneal: AnnealConfig { iterations: 10, ..AnnealConfig::default() },
        unit_size: 1,
        split_mode: SplitModeSetting::Greedy,
    };
    let out = run_alternative(&net, &settings, correlation_wireless, &obj, &Execution::new(3)).unwrap();
    assert!(out.trace.records.len() > 2);
    assert!(out.trace.records.windows(2).all(|w| w[1].elapsed_seconds > w[0].elapsed_seconds));
}
