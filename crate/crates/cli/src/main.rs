use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use altdecomp_core::config::{Mode, RunConfig};
use altdecomp_core::network::Network;
use altdecomp_core::orchestrator::{
    network_fingerprint, run_alternative, run_sector_baseline, ClockMode, RunTrace,
    SplitModeSetting,
};
use altdecomp_core::reporting::compare;
use altdecomp_core::wireless::{
    correlation_wireless, generate_network, AntennaBounds, AreaType, PropagationModel,
    WirelessObjective,
};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Alternative decomposition and parallel annealing for cellular networks.
#[derive(Parser)]
#[command(name = "altdecomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cellular network file.
    Generate(GenerateArgs),
    /// Optimize a network with the alternative or the sector algorithm.
    Optimize(OptimizeArgs),
    /// Compare two run traces of the same network.
    Compare(CompareArgs),
    /// Write the SINR raster of a network as CSV.
    SinrField(SinrFieldArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    sites: usize,
    #[arg(long, default_value_t = 3)]
    sectors: usize,
    /// Side of the square service area in km.
    #[arg(long)]
    area_km: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Alternative,
    Sector,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Wall,
    Modeled,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    OkumuraHata,
    Cost231,
    Sui,
}

#[derive(Clone, Copy, ValueEnum)]
enum AreaArg {
    Urban,
    Suburban,
    Open,
}

/// Flags overriding the configuration file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, value_enum)]
    clock: Option<ClockArg>,
    #[arg(long)]
    unit_size: Option<usize>,
    #[arg(long, value_enum)]
    split_mode: Option<SplitArg>,
    #[arg(long)]
    p_increment: Option<f64>,
    #[arg(long)]
    th_min: Option<f64>,
    #[arg(long)]
    th_max: Option<f64>,
    #[arg(long)]
    patience: Option<u32>,
    #[arg(long)]
    max_step: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    frequency_mhz: Option<f64>,
    #[arg(long, value_enum)]
    area_type: Option<AreaArg>,
    #[arg(long)]
    noise_floor_dbm: Option<f64>,
    #[arg(long)]
    grid_resolution: Option<f64>,
    /// Number of sectors of the sector baseline.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Master seed of every random stream.
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CompareArgs {
    trace_a: PathBuf,
    trace_b: PathBuf,
    /// A level counts as reached at quality >= level - tolerance.
    #[arg(long, default_value_t = 0.0)]
    plateau_tolerance: f64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SinrFieldArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Error with its exit code class.
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

trait Classify<T> {
    fn invalid(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Validation(e.into()))
    }
    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Optimize(a) => cmd_optimize(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::SinrField(a) => cmd_sinr_field(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), Failure> {
    let net = generate_network(a.sites, a.sectors, a.area_km, a.seed, &AntennaBounds::default())
        .invalid()?;
    write_network(&net, &a.out).runtime()?;
    println!("wrote {} antennas to {}", net.len(), a.out.display());
    Ok(())
}

fn load_config(path: Option<&Path>, overrides: &Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Alternative => Mode::Alternative,
                ModeArg::Sector => Mode::Sector,
            };
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.threads {
            cfg.threads = Some(v);
        }
        if let Some(v) = self.budget {
            cfg.wall_clock_budget = v;
        }
        if let Some(c) = self.clock {
            cfg.clock = match c {
                ClockArg::Wall => ClockMode::Wall,
                ClockArg::Modeled => ClockMode::Modeled,
            };
        }
        if let Some(v) = self.unit_size {
            cfg.unit_size = v;
        }
        if let Some(s) = self.split_mode {
            cfg.split_mode = match s {
                SplitArg::Exact => SplitModeSetting::Exact,
                SplitArg::Greedy => SplitModeSetting::Greedy,
            };
        }
        if let Some(v) = self.p_increment {
            cfg.schedule.p_increment = v;
        }
        if let Some(v) = self.th_min {
            cfg.schedule.th_min = v;
        }
        if let Some(v) = self.th_max {
            cfg.schedule.th_max = v;
        }
        if let Some(v) = self.patience {
            cfg.schedule.patience = std::num::NonZeroU32::new(v);
            cfg.baseline.patience = v;
        }
        if let Some(v) = self.max_step {
            cfg.anneal.max_step = v;
        }
        if let Some(v) = self.t0 {
            cfg.anneal.t0 = v;
        }
        if let Some(v) = self.iterations {
            cfg.anneal.iterations = v;
        }
        if let Some(m) = self.model {
            cfg.propagation.model = match m {
                ModelArg::OkumuraHata => PropagationModel::OkumuraHata,
                ModelArg::Cost231 => PropagationModel::Cost231,
                ModelArg::Sui => PropagationModel::Sui,
            };
        }
        if let Some(v) = self.frequency_mhz {
            cfg.propagation.frequency_mhz = v;
        }
        if let Some(a) = self.area_type {
            cfg.propagation.area_type = match a {
                AreaArg::Urban => AreaType::Urban,
                AreaArg::Suburban => AreaType::Suburban,
                AreaArg::Open => AreaType::Open,
            };
        }
        if let Some(v) = self.noise_floor_dbm {
            cfg.propagation.noise_floor_dbm = v;
        }
        if let Some(v) = self.grid_resolution {
            cfg.grid.resolution_m = v;
        }
        if let Some(v) = self.k {
            cfg.baseline.k = Some(v);
        }
    }
}

fn read_network(path: &Path) -> anyhow::Result<Network> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let net = Network::read_text(BufReader::new(file))
        .with_context(|| format!("reading network {}", path.display()))?;
    if net.params_per_element() != AntennaBounds::default().specs().len() {
        bail!(
            "{} is not a cellular network: expected 4 parameters per antenna, found {}",
            path.display(),
            net.params_per_element()
        );
    }
    Ok(net)
}

fn write_network(net: &Network, path: &Path) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    net.write_text(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<(), Failure> {
    let mut cfg = load_config(a.config.as_deref(), &a.overrides).invalid()?;
    cfg.master_seed = a.seed;
    cfg.anneal.seed = a.seed;
    let net = read_network(&a.network).invalid()?;
    let grid = cfg.grid_for(&net).invalid()?;
    let objective = WirelessObjective::new(cfg.propagation.clone(), grid).invalid()?;
    let exec = cfg.execution();

    let outcome = match cfg.mode {
        Mode::Alternative => run_alternative(
            &net,
            &cfg.alternative_settings(),
            correlation_wireless,
            &objective,
            &exec,
        ),
        Mode::Sector => run_sector_baseline(
            &net,
            &cfg.baseline_settings(),
            correlation_wireless,
            &objective,
            &exec,
        ),
    }
    .runtime()?;

    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))
        .runtime()?;
    let trace_path = a.out_dir.join("trace.csv");
    let net_path = a.out_dir.join("network.txt");
    let summary_path = a.out_dir.join("summary.json");

    (|| -> anyhow::Result<()> {
        let mut out = BufWriter::new(File::create(&trace_path)?);
        outcome.trace.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    })()
    .with_context(|| format!("writing {}", trace_path.display()))
    .runtime()?;
    write_network(&outcome.network, &net_path).runtime()?;

    let s = &outcome.stats;
    let levels: Vec<_> = outcome
        .trace
        .levels
        .iter()
        .map(|l| {
            json!({
                "p": l.p, "th": l.th, "surviving_edges": l.surviving_edges,
                "units": l.units, "subnets": l.subnets, "splits": l.splits,
                "patience": l.patience, "visits": l.visits,
            })
        })
        .collect();
    let summary = json!({
        "mode": cfg.mode,
        "master_seed": cfg.master_seed,
        "network_fingerprint": outcome.trace.network_fingerprint,
        "final_network_fingerprint": network_fingerprint(&outcome.network),
        "initial_quality": s.initial_quality,
        "final_quality": s.final_quality,
        "elapsed_seconds": s.elapsed_seconds,
        "p_levels": s.levels,
        "splits_processed": s.splits_processed,
        "commits": s.commits,
        "stopped_by_budget": s.stopped_by_budget,
        "levels": levels,
        "config": cfg,
    });
    fs::write(&summary_path, serde_json::to_string_pretty(&summary).runtime()? + "\n")
        .with_context(|| format!("writing {}", summary_path.display()))
        .runtime()?;
    println!(
        "{:?} mode: average SINR {:.4} -> {:.4} dB in {:.2} s ({} splits, {} commits)",
        cfg.mode, s.initial_quality, s.final_quality, s.elapsed_seconds, s.splits_processed, s.commits
    );
    Ok(())
}

fn read_trace(path: &Path) -> anyhow::Result<RunTrace> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    RunTrace::read_csv(BufReader::new(file)).with_context(|| format!("reading trace {}", path.display()))
}

fn cmd_compare(a: &CompareArgs) -> Result<(), Failure> {
    let ta = read_trace(&a.trace_a).invalid()?;
    let tb = read_trace(&a.trace_b).invalid()?;
    let report = compare(&ta, &tb, a.plateau_tolerance).invalid()?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).runtime()?);
    } else {
        println!("{report}");
    }
    Ok(())
}

fn cmd_sinr_field(a: &SinrFieldArgs) -> Result<(), Failure> {
    let cfg = load_config(a.config.as_deref(), &a.overrides).invalid()?;
    let net = read_network(&a.network).invalid()?;
    let grid = cfg.grid_for(&net).invalid()?;
    let objective = WirelessObjective::new(cfg.propagation.clone(), grid).invalid()?;
    let field = objective.field(&net).runtime()?;
    (|| -> anyhow::Result<()> {
        let mut out = BufWriter::new(File::create(&a.out)?);
        field.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    })()
    .with_context(|| format!("writing {}", a.out.display()))
    .runtime()?;
    println!(
        "{} points, average SINR {:.4} dB, written to {}",
        field.sinr_db.len(),
        field.mean(),
        a.out.display()
    );
    Ok(())
}
