//! Line-delimited trace files: a versioned header, one record per step,
//! and a result footer. All JSON, stable field order, deterministic bytes
//! for identical runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::run::{EpisodeResult, StepRecord};
use topnav_core::Real;

pub const TRACE_SCHEMA: &str = "trace/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub episode: usize,
    pub world_seed: u64,
    pub category: String,
    pub regime: String,
    pub controller: String,
    pub switch_enabled: bool,
    pub budget: u32,
    pub goal_instance: u32,
    pub alt_goal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub success: bool,
    pub steps: u32,
    pub final_distance: Real,
    pub switch_count: u32,
    pub collision_count: u32,
}

#[derive(Error, Debug)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace {0}")]
    Malformed(String),
}

pub fn write_trace(header: &TraceHeader, result: &EpisodeResult) -> String {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(header).expect("header serializes"));
    out.push('\n');
    for rec in &result.trace {
        out.push_str(&serde_json::to_string(rec).expect("record serializes"));
        out.push('\n');
    }
    let footer = TraceFooter {
        success: result.success,
        steps: result.steps,
        final_distance: result.final_distance,
        switch_count: result.switch_count,
        collision_count: result.collision_count,
    };
    out.push_str(&serde_json::to_string(&footer).expect("footer serializes"));
    out.push('\n');
    out
}

/// Parse a trace back into its parts; used by `plot` and the tests.
pub fn read_trace(text: &str) -> Result<(TraceHeader, Vec<OwnedStepRecord>, TraceFooter), TraceError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| TraceError::Malformed("empty".into()))?;
    let header: TraceHeader =
        serde_json::from_str(first).map_err(|source| TraceError::Json { line: 1, source })?;
    if header.schema != TRACE_SCHEMA {
        return Err(TraceError::Malformed(format!("unknown schema {}", header.schema)));
    }
    let mut records = Vec::new();
    let mut footer: Option<TraceFooter> = None;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if line.contains("\"success\"") {
            footer = Some(
                serde_json::from_str(line)
                    .map_err(|source| TraceError::Json { line: i + 1, source })?,
            );
        } else {
            records.push(
                serde_json::from_str(line)
                    .map_err(|source| TraceError::Json { line: i + 1, source })?,
            );
        }
    }
    let footer = footer.ok_or_else(|| TraceError::Malformed("missing footer".into()))?;
    Ok((header, records, footer))
}

/// Deserializable twin of [`StepRecord`] (whose mode strings are static).
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct OwnedStepRecord {
    pub step: u32,
    pub x: Real,
    pub y: Real,
    pub theta: Real,
    pub mode: String,
    pub reason: String,
    pub v: Real,
    pub w: Real,
    pub ref_index: Option<usize>,
    pub best_raw: Option<Real>,
    pub best_norm: Option<Real>,
    pub mask_entries: usize,
    pub collided: bool,
    pub goal_dist: Real,
}

impl OwnedStepRecord {
    pub fn matches(&self, rec: &StepRecord) -> bool {
        self.step == rec.step && self.mode == rec.mode && self.x == rec.x && self.y == rec.y
    }
}
