use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::protocol::{dispatch, merge, Assignment, SubnetResult};
use super::schedule::{advance_precision, threshold, Schedule};
use super::trace::{LevelRecord, RunTrace, TraceEvent, TraceRecord};
use crate::anneal::{anneal, step_size, stream_seed, AnnealConfig, SubnetState};
use crate::decomposition::{
    build_subnets, enumerate_splits, filter_edges, group_units, sector_partition, Split,
    SplitMode, Subnet,
};
use crate::error::{Error, Result};
use crate::network::{build_correlation_graph, CorrelationGraph, Element, Network};
use crate::objective::Objective;

const TAG_ALT_SUBNET: u64 = 0;
const TAG_ALT_DISPATCH: u64 = 1;
const TAG_BASE_SUBNET: u64 = 2;
const TAG_BASE_DISPATCH: u64 = 3;

/// How elapsed time is measured for traces and budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    /// Real elapsed time of this process.
    #[default]
    Wall,
    /// Time the run would take with every lane on its own core: coordinator
    /// time plus, per dispatched split, the busiest lane's summed work time.
    /// Meaningful when `threads` does not exceed the physical cores.
    Modeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    /// Worker lanes a split is dispatched over (the modeled core count).
    /// Determines subnet duplication, so it is part of the algorithm.
    pub lanes: usize,
    /// OS threads executing the lanes. Affects wall time only.
    pub threads: usize,
    /// Stop once this much time has elapsed, if set.
    pub budget_seconds: Option<f64>,
    pub clock: ClockMode,
    /// Keep a copy of the network after every commit.
    pub keep_commits: bool,
}

impl Execution {
    pub fn new(lanes: usize) -> Self {
        Self {
            lanes,
            threads: lanes,
            budget_seconds: None,
            clock: ClockMode::Wall,
            keep_commits: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes == 0 {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        if self.threads == 0 {
            return Err(Error::invalid("threads", "must be at least 1"));
        }
        if let Some(b) = self.budget_seconds {
            if !(b > 0.0) {
                return Err(Error::invalid("wall_clock_budget", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSettings {
    pub schedule: Schedule,
    /// `anneal.seed` is the master seed of the run.
    pub anneal: AnnealConfig,
    pub unit_size: usize,
    pub split_mode: SplitModeSetting,
}

/// Serializable form of [`SplitMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitModeSetting {
    Exact,
    #[default]
    Greedy,
}

impl SplitModeSetting {
    pub fn mode(self) -> SplitMode {
        match self {
            SplitModeSetting::Exact => SplitMode::exact(),
            SplitModeSetting::Greedy => SplitMode::Greedy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSettings {
    /// Number of sectors; `None` means one per lane.
    pub k: Option<usize>,
    pub balance_tol: f64,
    /// Geometric temperature decay per round.
    pub decay: f64,
    /// Consecutive non-improving rounds before stopping.
    pub patience: u32,
    /// `anneal.seed` is the master seed of the run.
    pub anneal: AnnealConfig,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self {
            k: None,
            balance_tol: 0.1,
            decay: 0.95,
            patience: 10,
            anneal: AnnealConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub initial_quality: f64,
    pub final_quality: f64,
    pub elapsed_seconds: f64,
    pub levels: usize,
    pub splits_processed: usize,
    pub commits: usize,
    pub stopped_by_budget: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub network: Network,
    pub trace: RunTrace,
    /// Networks after each commit, when `Execution::keep_commits` is set.
    pub commits: Vec<Network>,
    pub stats: RunStats,
}

/// Hex SHA-256 of the canonical text form of `net`.
pub fn network_fingerprint(net: &Network) -> String {
    hex::encode(Sha256::digest(net.to_text().as_bytes()))
}

struct Clock {
    mode: ClockMode,
    start: Instant,
    modeled: f64,
    mark: Instant,
}

impl Clock {
    fn start(mode: ClockMode) -> Self {
        let now = Instant::now();
        Self {
            mode,
            start: now,
            modeled: 0.0,
            mark: now,
        }
    }

    fn now(&self) -> f64 {
        match self.mode {
            ClockMode::Wall => self.start.elapsed().as_secs_f64(),
            ClockMode::Modeled => self.modeled + self.mark.elapsed().as_secs_f64(),
        }
    }

    fn enter_parallel(&mut self) {
        self.modeled += self.mark.elapsed().as_secs_f64();
    }

    fn leave_parallel(&mut self, busiest_lane: f64) {
        self.modeled += busiest_lane;
        self.mark = Instant::now();
    }
}

/// Shared state of a run: the committed network, its quality and the trace.
struct Driver<'a> {
    objective: &'a dyn Objective,
    exec: &'a Execution,
    pool: rayon::ThreadPool,
    clock: Clock,
    current: Arc<Network>,
    quality: f64,
    initial_quality: f64,
    trace: RunTrace,
    commits: Vec<Network>,
    splits_processed: usize,
    commit_count: usize,
}

impl<'a> Driver<'a> {
    fn new(net: &Network, objective: &'a dyn Objective, exec: &'a Execution) -> Result<Self> {
        exec.validate()?;
        net.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(exec.threads)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?;
        let clock = Clock::start(exec.clock);
        let quality = objective.quality(net)?;
        Ok(Self {
            objective,
            exec,
            pool,
            clock,
            current: Arc::new(net.clone()),
            quality,
            initial_quality: quality,
            trace: RunTrace::new(network_fingerprint(net)),
            commits: Vec::new(),
            splits_processed: 0,
            commit_count: 0,
        })
    }

    fn record(&mut self, p: f64, th: f64, split_index: i64, event: TraceEvent) {
        let elapsed_seconds = self.clock.now();
        self.trace.push(TraceRecord {
            elapsed_seconds,
            quality: self.quality,
            p,
            th,
            split_index,
            event,
        });
    }

    fn over_budget(&self) -> bool {
        self.exec
            .budget_seconds
            .is_some_and(|b| self.clock.now() >= b)
    }

    /// Optimizes every assignment of `split` in parallel from the committed
    /// network, merges the results and commits them if they improve it.
    /// Returns whether the network improved.
    fn visit(
        &mut self,
        split: &Split,
        assignments: &[Assignment],
        step: f64,
        temperature: f64,
        iterations: u32,
        seed_of: impl Fn(&Subnet, &Assignment) -> u64 + Sync,
    ) -> Result<bool> {
        let snapshot = Arc::clone(&self.current);
        let objective = self.objective;
        self.clock.enter_parallel();
        let outputs: Vec<Result<(SubnetResult, f64)>> = self.pool.install(|| {
            assignments
                .par_iter()
                .map(|a| {
                    let started = Instant::now();
                    let subnet = &split.subnets[a.subnet];
                    let state = SubnetState::from_network(Arc::clone(&snapshot), &subnet.all);
                    let mut local = objective.local(&state)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(subnet, a));
                    let out = anneal(&state, step, temperature, iterations, &mut rng, |x| {
                        local.quality(x).map(|q| -q)
                    })?;
                    let result = SubnetResult {
                        subnet_id: subnet.id,
                        replica: a.replica,
                        members: out.state.members,
                        params: out.state.free_params,
                        energy: out.energy,
                        initial_energy: out.initial_energy,
                    };
                    Ok((result, started.elapsed().as_secs_f64()))
                })
                .collect()
        });
        let mut lane_busy = vec![0.0; self.exec.lanes];
        let mut results = Vec::with_capacity(outputs.len());
        for (a, out) in assignments.iter().zip(outputs) {
            let (result, seconds) = out?;
            lane_busy[a.worker] += seconds;
            results.push(result);
        }
        self.clock
            .leave_parallel(lane_busy.iter().copied().fold(0.0, f64::max));

        let merged = merge(&self.current, self.quality, &results, self.objective)?;
        self.splits_processed += 1;
        if merged.improved {
            debug_assert!(merged.network.validate().is_ok());
            self.current = Arc::new(merged.network);
            self.quality = merged.quality;
            self.commit_count += 1;
            if self.exec.keep_commits {
                self.commits.push((*self.current).clone());
            }
        }
        Ok(merged.improved)
    }

    fn finish(mut self, levels: usize, stopped_by_budget: bool, p: f64, th: f64) -> RunOutcome {
        self.record(p, th, -1, TraceEvent::End);
        let elapsed_seconds = self
            .trace
            .records
            .last()
            .map_or(0.0, |r| r.elapsed_seconds);
        let stats = RunStats {
            initial_quality: self.initial_quality,
            final_quality: self.quality,
            elapsed_seconds,
            levels,
            splits_processed: self.splits_processed,
            commits: self.commit_count,
            stopped_by_budget,
        };
        RunOutcome {
            network: Arc::try_unwrap(self.current).unwrap_or_else(|arc| (*arc).clone()),
            trace: self.trace,
            commits: self.commits,
            stats,
        }
    }
}

fn correlation_graph<C>(net: &Network, corr: C) -> Result<CorrelationGraph>
where
    C: Fn(&Element, &Element) -> f64,
{
    if net.len() < 2 {
        Ok(CorrelationGraph::empty(net.len()))
    } else {
        build_correlation_graph(net, corr)
    }
}

/// Alternative decomposition with precision-scheduled independent
/// optimization.
///
/// The correlation graph is built once. Each precision level filters it at
/// the level's threshold, regroups units, rebuilds subnets and their
/// alternative splits, then visits the splits round-robin: every visit
/// dispatches the split's subnets over the lanes, anneals them in parallel
/// and commits the merged result if the whole network improves. A level ends
/// after `patience` consecutive visits without improvement; the run ends
/// when the level at full precision has done so (or the budget runs out).
pub fn run_alternative<C>(
    net: &Network,
    settings: &AlternativeSettings,
    corr: C,
    objective: &dyn Objective,
    exec: &Execution,
) -> Result<RunOutcome>
where
    C: Fn(&Element, &Element) -> f64,
{
    settings.schedule.validate()?;
    settings.anneal.validate()?;
    let mut driver = Driver::new(net, objective, exec)?;
    let graph = correlation_graph(net, corr)?;
    let master = settings.anneal.seed;
    let cfg = &settings.anneal;
    let mut sched = settings.schedule.clone();

    driver.record(sched.p, threshold(&sched), -1, TraceEvent::Start);
    let mut level: u64 = 0;
    let mut stopped_by_budget = false;
    loop {
        let th = threshold(&sched);
        let filtered = filter_edges(&graph, th);
        let units = group_units(&filtered, settings.unit_size)?;
        let subnets = build_subnets(&filtered, &units);
        let splits = enumerate_splits(&subnets, settings.split_mode.mode())?;
        let patience = sched.patience_for(splits.len());
        driver.trace.levels.push(LevelRecord {
            p: sched.p,
            th,
            surviving_edges: filtered.edge_count(),
            units: units.len(),
            subnets: subnets.len(),
            splits: splits.len(),
            patience,
            visits: 0,
        });
        driver.record(sched.p, th, -1, TraceEvent::Level);

        let step = step_size(cfg.max_step, sched.p);
        let temperature = cfg.law.temperature(1.0 - sched.p, cfg.t0);
        let mut idle = 0;
        let mut visit: u64 = 0;
        while idle < patience {
            if driver.over_budget() {
                stopped_by_budget = true;
                break;
            }
            let split_index = (visit as usize) % splits.len();
            let split = &splits[split_index];
            let mut rng =
                ChaCha8Rng::seed_from_u64(stream_seed(master, &[TAG_ALT_DISPATCH, level, visit]));
            let assignments = dispatch(split, exec.lanes, &mut rng);
            let seed_of = |s: &Subnet, a: &Assignment| {
                stream_seed(
                    master,
                    &[TAG_ALT_SUBNET, level, visit, s.id as u64, a.replica as u64],
                )
            };
            let improved =
                driver.visit(split, &assignments, step, temperature, cfg.iterations, seed_of)?;
            idle = if improved { 0 } else { idle + 1 };
            let event = if improved {
                TraceEvent::Commit
            } else {
                TraceEvent::Reject
            };
            driver.record(sched.p, th, split_index as i64, event);
            visit += 1;
        }
        if let Some(last) = driver.trace.levels.last_mut() {
            last.visits = visit as usize;
        }
        if stopped_by_budget || sched.p >= 1.0 {
            break;
        }
        sched = advance_precision(&sched)?;
        level += 1;
    }
    let levels = driver.trace.levels.len();
    let th = threshold(&sched);
    Ok(driver.finish(levels, stopped_by_budget, sched.p, th))
}

/// Sector planning baseline: one balanced min-crossing-weight partition into
/// `k` sectors, then every sector is annealed in parallel round after round
/// with the full step and a geometrically decaying temperature, until
/// `patience` consecutive rounds bring no improvement.
pub fn run_sector_baseline<C>(
    net: &Network,
    settings: &BaselineSettings,
    corr: C,
    objective: &dyn Objective,
    exec: &Execution,
) -> Result<RunOutcome>
where
    C: Fn(&Element, &Element) -> f64,
{
    settings.anneal.validate()?;
    if !(settings.decay > 0.0 && settings.decay <= 1.0) {
        return Err(Error::invalid("decay", "must be within (0, 1]"));
    }
    if settings.patience == 0 {
        return Err(Error::invalid("patience", "must be at least 1"));
    }
    let mut driver = Driver::new(net, objective, exec)?;
    let graph = correlation_graph(net, corr)?;
    let k = settings.k.unwrap_or(exec.lanes).min(net.len());
    let parts = sector_partition(&graph, k, settings.balance_tol)?;
    let split = sector_split(parts);
    let master = settings.anneal.seed;
    let cfg = &settings.anneal;

    driver.trace.levels.push(LevelRecord {
        p: 0.0,
        th: 0.0,
        surviving_edges: graph.edge_count(),
        units: split.len(),
        subnets: split.len(),
        splits: 1,
        patience: settings.patience,
        visits: 0,
    });
    driver.record(0.0, 0.0, -1, TraceEvent::Start);
    let step = step_size(cfg.max_step, 0.0);
    let mut idle = 0;
    let mut round: u64 = 0;
    let mut stopped_by_budget = false;
    while idle < settings.patience {
        if driver.over_budget() {
            stopped_by_budget = true;
            break;
        }
        let temperature = cfg.t0 * settings.decay.powi(round.min(i32::MAX as u64) as i32);
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(master, &[TAG_BASE_DISPATCH, round]));
        let assignments = dispatch(&split, exec.lanes, &mut rng);
        let seed_of = |s: &Subnet, a: &Assignment| {
            stream_seed(
                master,
                &[TAG_BASE_SUBNET, round, s.id as u64, a.replica as u64],
            )
        };
        let improved =
            driver.visit(&split, &assignments, step, temperature, cfg.iterations, seed_of)?;
        idle = if improved { 0 } else { idle + 1 };
        let event = if improved {
            TraceEvent::Commit
        } else {
            TraceEvent::Reject
        };
        driver.record(0.0, 0.0, round as i64, event);
        round += 1;
    }
    if let Some(last) = driver.trace.levels.last_mut() {
        last.visits = round as usize;
    }
    Ok(driver.finish(1, stopped_by_budget, 0.0, 0.0))
}

/// The sector parts as context-free subnets of a single split.
pub fn sector_split(parts: Vec<crate::decomposition::OptimizedUnit>) -> Split {
    Split {
        subnets: parts
            .into_iter()
            .enumerate()
            .map(|(id, unit)| Subnet {
                id,
                all: unit.members().to_vec(),
                unit,
                context: Vec::new(),
            })
            .collect(),
    }
}
