//! Trace comparison: plateau estimates, time-to-reach and speedup.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::orchestrator::RunTrace;

/// Fraction of trailing records averaged into the plateau estimate.
pub const PLATEAU_FRACTION: f64 = 0.1;

/// Mean quality of the final 10% of records (at least one).
pub fn plateau(trace: &RunTrace) -> Result<f64> {
    let n = trace.records.len();
    if n == 0 {
        return Err(Error::invalid("trace", "has no records"));
    }
    let tail = ((n as f64 * PLATEAU_FRACTION).ceil() as usize).clamp(1, n);
    let sum: f64 = trace.records[n - tail..].iter().map(|r| r.quality).sum();
    Ok(sum / tail as f64)
}

/// First time the trace reaches `level`, interpolating linearly between the
/// record before the crossing and the first record at or above it.
pub fn time_to_reach(trace: &RunTrace, level: f64) -> Option<f64> {
    let records = &trace.records;
    let i = records.iter().position(|r| r.quality >= level)?;
    if i == 0 {
        return Some(records[0].elapsed_seconds);
    }
    let (a, b) = (&records[i - 1], &records[i]);
    let frac = (level - a.quality) / (b.quality - a.quality);
    Some(a.elapsed_seconds + frac * (b.elapsed_seconds - a.elapsed_seconds))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub plateau: f64,
    /// When the trace first comes within tolerance of its own plateau.
    pub plateau_time: f64,
    pub final_quality: f64,
    /// When the trace first comes within tolerance of the other plateau.
    pub reach_other: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub tolerance: f64,
    pub a: TraceSummary,
    pub b: TraceSummary,
    /// `b.plateau_time / a.reach_other`: how much sooner A gets to B's
    /// plateau than B itself. `None` when A never does.
    pub speedup: Option<f64>,
}

/// Compares two traces of the same network. A level counts as reached once
/// quality is at least `level - tolerance`.
pub fn compare(a: &RunTrace, b: &RunTrace, tolerance: f64) -> Result<Comparison> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(Error::invalid("plateau_tolerance", "must be a non-negative number"));
    }
    if a.network_fingerprint != b.network_fingerprint {
        return Err(Error::MismatchedTraces {
            a: a.network_fingerprint.clone(),
            b: b.network_fingerprint.clone(),
        });
    }
    let (pa, pb) = (plateau(a)?, plateau(b)?);
    let summary = |t: &RunTrace, own: f64, other: f64| -> TraceSummary {
        // the tail mean can round above every tail record
        let peak = t.records.iter().map(|r| r.quality).fold(f64::MIN, f64::max);
        TraceSummary {
            plateau: own,
            plateau_time: time_to_reach(t, (own - tolerance).min(peak))
                .expect("the peak is always reached"),
            final_quality: t.final_quality().unwrap_or(own),
            reach_other: time_to_reach(t, other - tolerance),
        }
    };
    let sa = summary(a, pa, pb);
    let sb = summary(b, pb, pa);
    let speedup = sa.reach_other.map(|t| {
        if t == sb.plateau_time {
            1.0
        } else {
            sb.plateau_time / t
        }
    });
    Ok(Comparison {
        tolerance,
        a: sa,
        b: sb,
        speedup,
    })
}

fn reach(t: Option<f64>) -> String {
    t.map_or_else(|| "not reached".to_string(), |t| format!("{t:.3} s"))
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, s) in [("A", &self.a), ("B", &self.b)] {
            writeln!(
                f,
                "{name}: plateau {:.4} reached at {:.3} s, final {:.4}, other plateau: {}",
                s.plateau,
                s.plateau_time,
                s.final_quality,
                reach(s.reach_other)
            )?;
        }
        match self.speedup {
            Some(x) => write!(f, "speedup of A over B: {x:.3}"),
            None => write!(f, "speedup of A over B: not reached"),
        }
    }
}
