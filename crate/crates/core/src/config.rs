//! Run configuration file (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anneal::AnnealConfig;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::orchestrator::{
    AlternativeSettings, BaselineSettings, ClockMode, Execution, Schedule, SplitModeSetting,
};
use crate::wireless::{Grid, PropagationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Alternative,
    Sector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub resolution_m: f64,
    /// Extra border around the outermost sites.
    pub margin_m: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution_m: 50.0,
            margin_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Number of sectors; one per worker when absent.
    pub k: Option<usize>,
    pub balance_tol: f64,
    pub decay: f64,
    pub patience: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        let d = BaselineSettings::default();
        Self {
            k: d.k,
            balance_tol: d.balance_tol,
            decay: d.decay,
            patience: d.patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    /// Seeds every random stream of a run; `anneal.seed` is ignored.
    pub master_seed: u64,
    /// Parallel lanes a split is dispatched over.
    pub workers: usize,
    /// Threads executing the lanes; defaults to `workers`.
    pub threads: Option<usize>,
    /// Seconds.
    pub wall_clock_budget: f64,
    pub clock: ClockMode,
    pub unit_size: usize,
    pub split_mode: SplitModeSetting,
    pub schedule: Schedule,
    pub anneal: AnnealConfig,
    pub propagation: PropagationConfig,
    pub grid: GridConfig,
    pub baseline: BaselineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Alternative,
            master_seed: 0,
            workers: 8,
            threads: None,
            wall_clock_budget: 60.0,
            clock: ClockMode::Wall,
            unit_size: 1,
            split_mode: SplitModeSetting::Greedy,
            schedule: Schedule {
                p: 0.0,
                p_increment: 0.25,
                th_min: 0.3,
                th_max: 0.6,
                patience: None,
            },
            anneal: AnnealConfig {
                max_step: 0.3,
                t0: 0.05,
                iterations: 30,
                ..AnnealConfig::default()
            },
            propagation: PropagationConfig::default(),
            grid: GridConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }
}

fn config_err(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Re-labels a nested validation error with the section it came from.
fn in_section(section: &str, err: Error) -> Error {
    match err {
        Error::InvalidArgument { field, reason } => config_err(format!("{section}.{field}"), reason),
        Error::FrequencyOutOfRange { .. } => config_err(format!("{section}.frequency_mhz"), err.to_string()),
        other => other,
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "config".to_string());
            config_err(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(config_err("workers", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(config_err("threads", "must be at least 1"));
        }
        if !(self.wall_clock_budget > 0.0 && self.wall_clock_budget.is_finite()) {
            return Err(config_err("wall_clock_budget", "must be a positive number of seconds"));
        }
        if self.unit_size == 0 {
            return Err(config_err("unit_size", "must be at least 1"));
        }
        self.schedule.validate().map_err(|e| in_section("schedule", e))?;
        self.anneal.validate().map_err(|e| in_section("anneal", e))?;
        self.propagation
            .validate()
            .map_err(|e| in_section("propagation", e))?;
        if !(self.grid.resolution_m > 0.0 && self.grid.resolution_m.is_finite()) {
            return Err(config_err("grid.resolution_m", "must be positive"));
        }
        if !(self.grid.margin_m >= 0.0 && self.grid.margin_m.is_finite()) {
            return Err(config_err("grid.margin_m", "must be non-negative"));
        }
        let b = &self.baseline;
        if b.k == Some(0) {
            return Err(config_err("baseline.k", "must be at least 1"));
        }
        if !(b.balance_tol >= 0.0 && b.balance_tol.is_finite()) {
            return Err(config_err("baseline.balance_tol", "must be non-negative"));
        }
        if !(b.decay > 0.0 && b.decay <= 1.0) {
            return Err(config_err("baseline.decay", "must be within (0, 1]"));
        }
        if b.patience == 0 {
            return Err(config_err("baseline.patience", "must be at least 1"));
        }
        Ok(())
    }

    pub fn execution(&self) -> Execution {
        Execution {
            lanes: self.workers,
            threads: self.threads.unwrap_or(self.workers),
            budget_seconds: Some(self.wall_clock_budget),
            clock: self.clock,
            keep_commits: false,
        }
    }

    fn seeded_anneal(&self) -> AnnealConfig {
        AnnealConfig {
            seed: self.master_seed,
            ..self.anneal.clone()
        }
    }

    pub fn alternative_settings(&self) -> AlternativeSettings {
        AlternativeSettings {
            schedule: self.schedule.clone(),
            anneal: self.seeded_anneal(),
            unit_size: self.unit_size,
            split_mode: self.split_mode,
        }
    }

    pub fn baseline_settings(&self) -> BaselineSettings {
        BaselineSettings {
            k: self.baseline.k,
            balance_tol: self.baseline.balance_tol,
            decay: self.baseline.decay,
            patience: self.baseline.patience,
            anneal: self.seeded_anneal(),
        }
    }

    pub fn grid_for(&self, net: &Network) -> Result<Grid> {
        Grid::covering(net, self.grid.resolution_m, self.grid.margin_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.mode = Mode::Sector;
        c.master_seed = 99;
        c.baseline.k = Some(5);
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml_str("workers = 3\n[schedule]\nth_max = 0.8\n").unwrap();
        assert_eq!(c.workers, 3);
        assert_eq!(c.schedule.th_max, 0.8);
        assert_eq!(c.schedule.p_increment, RunConfig::default().schedule.p_increment);
    }

    fn field_of(c: &RunConfig) -> String {
        match c.validate() {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = RunConfig::default();
        c.wall_clock_budget = 0.0;
        assert_eq!(field_of(&c), "wall_clock_budget");

        let mut c = RunConfig::default();
        c.schedule.p_increment = 0.0;
        assert_eq!(field_of(&c), "schedule.p_increment");

        let mut c = RunConfig::default();
        c.anneal.max_step = 2.0;
        assert_eq!(field_of(&c), "anneal.max_step");

        let mut c = RunConfig::default();
        c.propagation.frequency_mhz = 1800.0;
        assert_eq!(field_of(&c), "propagation.frequency_mhz");

        let mut c = RunConfig::default();
        c.baseline.decay = 1.5;
        assert_eq!(field_of(&c), "baseline.decay");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::from_toml_str("wokers = 3\n"),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn master_seed_reaches_the_annealer() {
        let mut c = RunConfig::default();
        c.master_seed = 1234;
        c.anneal.seed = 1;
        assert_eq!(c.alternative_settings().anneal.seed, 1234);
        assert_eq!(c.baseline_settings().anneal.seed, 1234);
    }
}
