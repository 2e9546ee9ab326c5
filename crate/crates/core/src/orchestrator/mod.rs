//! The outer optimization loop: precision and threshold schedule, split
//! visits with patience, lane dispatch with duplication, best-replica merge,
//! and the sector planning baseline driver.

mod protocol;
mod run;
mod schedule;
mod trace;

pub use protocol::{dispatch, merge, select_best, Assignment, Merged, SubnetResult};
pub use run::{
    network_fingerprint, run_alternative, run_sector_baseline, sector_split,
    AlternativeSettings, BaselineSettings, ClockMode, Execution, RunOutcome, RunStats,
    SplitModeSetting,
};
pub use schedule::{advance_precision, threshold, Schedule};
pub use trace::{LevelRecord, RunTrace, TraceEvent, TraceRecord};
