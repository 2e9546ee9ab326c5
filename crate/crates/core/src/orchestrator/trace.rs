use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceEvent {
    /// Initial network before any optimization.
    Start,
    /// A new decomposition level begins.
    Level,
    /// Merged parameters improved the network and were committed.
    Commit,
    /// Merged parameters did not improve the network and were dropped.
    Reject,
    /// Final record of the run.
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub elapsed_seconds: f64,
    /// Quality of the committed network at this instant.
    pub quality: f64,
    pub p: f64,
    pub th: f64,
    /// Index of the split within its level (round index for the baseline);
    /// -1 for records not tied to a split.
    pub split_index: i64,
    pub event: TraceEvent,
}

/// What one decomposition level looked like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub p: f64,
    pub th: f64,
    pub surviving_edges: usize,
    pub units: usize,
    pub subnets: usize,
    pub splits: usize,
    pub patience: u32,
    pub visits: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// Identifies the initial network; traces over different networks are
    /// not comparable.
    pub network_fingerprint: String,
    pub records: Vec<TraceRecord>,
    pub levels: Vec<LevelRecord>,
}

const FINGERPRINT_PREFIX: &str = "# network_fingerprint=";

impl RunTrace {
    pub fn new(network_fingerprint: impl Into<String>) -> Self {
        Self {
            network_fingerprint: network_fingerprint.into(),
            ..Self::default()
        }
    }

    /// Appends a record, nudging its time forward if needed so that times
    /// stay strictly increasing.
    pub fn push(&mut self, mut record: TraceRecord) {
        if let Some(last) = self.records.last() {
            if record.elapsed_seconds <= last.elapsed_seconds {
                record.elapsed_seconds = last.elapsed_seconds.next_up();
            }
        }
        self.records.push(record);
    }

    pub fn final_quality(&self) -> Option<f64> {
        self.records.last().map(|r| r.quality)
    }

    pub fn qualities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.quality).collect()
    }

    pub fn count(&self, event: TraceEvent) -> usize {
        self.records.iter().filter(|r| r.event == event).count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{FINGERPRINT_PREFIX}{}", self.network_fingerprint)?;
        let mut writer = csv::Writer::from_writer(out);
        for record in &self.records {
            writer.serialize(record)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads records written by [`RunTrace::write_csv`]. Level summaries are
    /// not part of the CSV and come back empty.
    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let fingerprint = first
            .trim_end()
            .strip_prefix(FINGERPRINT_PREFIX)
            .ok_or_else(|| Error::Parse {
                line: 1,
                reason: "missing network fingerprint line".into(),
            })?
            .to_string();
        let mut reader = csv::Reader::from_reader(input);
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<TraceRecord>, _>>()?;
        Ok(Self {
            network_fingerprint: fingerprint,
            records,
            levels: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64, q: f64, event: TraceEvent) -> TraceRecord {
        TraceRecord {
            elapsed_seconds: t,
            quality: q,
            p: 0.25,
            th: 0.5,
            split_index: 2,
            event,
        }
    }

    #[test]
    fn times_are_forced_strictly_increasing() {
        let mut trace = RunTrace::new("x");
        trace.push(record(1.0, 0.0, TraceEvent::Start));
        trace.push(record(1.0, 0.0, TraceEvent::Commit));
        trace.push(record(0.5, 0.0, TraceEvent::Commit));
        let t: Vec<f64> = trace.records.iter().map(|r| r.elapsed_seconds).collect();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn csv_round_trip() {
        let mut trace = RunTrace::new("abc123");
        trace.push(record(0.0, -3.5, TraceEvent::Start));
        trace.push(record(0.1, -2.25, TraceEvent::Commit));
        trace.push(record(0.2, -2.25, TraceEvent::Reject));
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("elapsed_seconds,quality,p,th,split_index,event"));
        let back = RunTrace::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.network_fingerprint, "abc123");
        assert_eq!(back.records, trace.records);
    }

    #[test]
    fn missing_fingerprint_is_an_error() {
        let text = "elapsed_seconds,quality,p,th,split_index,event\n";
        assert!(RunTrace::read_csv(text.as_bytes()).is_err());
    }
}
