//! Budget matching between Best-of-N and a baseline tree search.
//!
//! Tree-search runs are summarized by their average expansion width `b`,
//! average expansion count `p` and average ideal path length `L`. From these,
//! [`n_call`] gives the N matching the number of model calls and [`n_res`]
//! the N matching the number of generated reasoning steps.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{expansion_events, StrategySpec};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("{field} must be a positive finite number, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no trace records found")]
    Empty,
    #[error("trace `{question_id}` has no events")]
    NoEvents { question_id: String },
    #[error("trace `{question_id}`: {message}")]
    InvalidTrace { question_id: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Averaged expansion statistics of a tree-search run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub avg_b: f64,
    pub avg_p: f64,
    pub avg_l: f64,
}

impl TraceStats {
    pub fn new(avg_b: f64, avg_p: f64, avg_l: f64) -> Result<Self, CalibrationError> {
        let stats = TraceStats { avg_b, avg_p, avg_l };
        stats.check()?;
        Ok(stats)
    }

    pub fn check(&self) -> Result<(), CalibrationError> {
        for (field, value) in [
            ("avg_b", self.avg_b),
            ("avg_p", self.avg_p),
            ("avg_l", self.avg_l),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(CalibrationError::NonPositive { field, value });
            }
        }
        Ok(())
    }
}

impl std::str::FromStr for TraceStats {
    type Err = CalibrationError;

    /// Parses `b,p,L`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(CalibrationError::Parse {
                line: 1,
                message: format!("expected `b,p,L`, got `{s}`"),
            });
        }
        let mut values = [0.0; 3];
        for (v, part) in values.iter_mut().zip(&parts) {
            *v = part.parse().map_err(|e| CalibrationError::Parse {
                line: 1,
                message: format!("`{part}`: {e}"),
            })?;
        }
        TraceStats::new(values[0], values[1], values[2])
    }
}

/// One question's expansion record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionTrace {
    pub question_id: String,
    /// `(node_depth, children_sampled)` per expansion.
    pub events: Vec<(u32, u64)>,
    pub ideal_path_length: u32,
}

impl ExpansionTrace {
    pub fn check(&self) -> Result<(), CalibrationError> {
        let invalid = |message: &str| CalibrationError::InvalidTrace {
            question_id: self.question_id.clone(),
            message: message.to_string(),
        };
        if self.events.is_empty() {
            return Err(CalibrationError::NoEvents {
                question_id: self.question_id.clone(),
            });
        }
        if self.events.iter().any(|&(_, c)| c == 0) {
            return Err(invalid("children_sampled must be at least 1"));
        }
        if self.ideal_path_length == 0 {
            return Err(invalid("ideal_path_length must be positive"));
        }
        Ok(())
    }

    /// Structural trace of one run of `strategy`.
    pub fn from_strategy(
        question_id: impl Into<String>,
        strategy: &StrategySpec,
        path_length: usize,
    ) -> Self {
        ExpansionTrace {
            question_id: question_id.into(),
            events: expansion_events(strategy, path_length),
            ideal_path_length: path_length as u32,
        }
    }
}

/// N matching the number of model calls: `p·b`.
pub fn n_call(stats: &TraceStats) -> f64 {
    stats.avg_p * stats.avg_b
}

/// N matching the number of reasoning steps: `p·b / L`.
pub fn n_res(stats: &TraceStats) -> f64 {
    n_call(stats) / stats.avg_l
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NRange {
    pub low: f64,
    pub high: f64,
    /// Set when `avg_l < 1`, in which case `low > high`.
    pub inverted: bool,
}

impl NRange {
    /// Integers inside the range, from `ceil(low)` to `floor(high)`.
    pub fn integer_candidates(&self) -> std::ops::RangeInclusive<u64> {
        let (lo, hi) = if self.inverted {
            (self.high, self.low)
        } else {
            (self.low, self.high)
        };
        (lo.ceil().max(1.0) as u64)..=(hi.floor().max(0.0) as u64)
    }
}

/// The reasonable-N interval `[n_res, n_call]`.
pub fn reasonable_n_range(stats: &TraceStats) -> NRange {
    NRange {
        low: n_res(stats),
        high: n_call(stats),
        inverted: stats.avg_l < 1.0,
    }
}

/// Averages a set of traces.
pub fn summarize(traces: &[ExpansionTrace]) -> Result<TraceStats, CalibrationError> {
    if traces.is_empty() {
        return Err(CalibrationError::Empty);
    }
    let mut children = 0u128;
    let mut events = 0u64;
    let mut length = 0u64;
    for t in traces {
        t.check()?;
        children += t.events.iter().map(|&(_, c)| c as u128).sum::<u128>();
        events += t.events.len() as u64;
        length += t.ideal_path_length as u64;
    }
    let q = traces.len() as f64;
    TraceStats::new(
        children as f64 / events as f64,
        events as f64 / q,
        length as f64 / q,
    )
}

/// Reads line-delimited JSON trace records; blank lines are skipped.
pub fn read_traces<R: BufRead>(reader: R) -> Result<Vec<ExpansionTrace>, CalibrationError> {
    let mut traces = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let trace: ExpansionTrace =
            serde_json::from_str(&line).map_err(|e| CalibrationError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        trace.check().map_err(|e| CalibrationError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        traces.push(trace);
    }
    Ok(traces)
}

pub fn write_traces<W: std::io::Write>(
    mut writer: W,
    traces: &[ExpansionTrace],
) -> Result<(), CalibrationError> {
    for t in traces {
        let line = serde_json::to_string(t).map_err(std::io::Error::other)?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn ingest_traces(path: impl AsRef<Path>) -> Result<TraceStats, CalibrationError> {
    let file = std::fs::File::open(path)?;
    summarize(&read_traces(std::io::BufReader::new(file))?)
}
