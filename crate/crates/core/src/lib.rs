//! Alternative decomposition and precision-scheduled parallel annealing for
//! large homogeneous networks, with a cellular SINR benchmark.

pub mod anneal;
pub mod config;
pub mod decomposition;
pub mod error;
pub mod network;
pub mod objective;
pub mod orchestrator;
pub mod reporting;
pub mod wireless;

pub use error::{Error, Result};
