//! JSON-lines run ledger.
//!
//! Line 1 is a header (versions, spec hash, provider kind, config). Line 2
//! records the initial population. Each later line is one generation. The
//! ledger is a pure rendering of [`RunState`], so a resumed run rewrites it
//! byte for byte. No timestamps or wall times are recorded.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::state::{CandidateRecord, GenerationRecord, RunState};
use crate::population::CandidateId;
use crate::problem::RunConfig;

pub const LEDGER_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerHeader {
    pub format_version: u32,
    pub crate_version: String,
    pub prompt_version: String,
    pub problem: String,
    pub spec_hash: String,
    pub provider: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialLine {
    pub candidates: Vec<CandidateRecord>,
    pub elite_id: CandidateId,
    pub elite_score: f64,
    /// Source of every candidate in `candidates`.
    pub sources: BTreeMap<CandidateId, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLine {
    #[serde(flatten)]
    pub record: GenerationRecord,
    /// Sources of the functional and structural candidates.
    pub sources: BTreeMap<CandidateId, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LedgerLine {
    Header(LedgerHeader),
    Initial(InitialLine),
    Generation(GenerationLine),
}

impl LedgerLine {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ledger lines serialize")
    }
}

fn source_of(state: &RunState, id: &CandidateId) -> String {
    state.store.get(id).map(|c| c.source.clone()).unwrap_or_default()
}

pub fn initial_line(state: &RunState) -> Option<LedgerLine> {
    let best = state
        .initial
        .iter()
        .filter_map(|r| r.score.map(|s| (s, &r.id)))
        .fold(None::<(f64, &CandidateId)>, |acc, (s, id)| match acc {
            Some((b, bid)) if b > s || (b == s && bid <= id) => Some((b, bid)),
            _ => Some((s, id)),
        })?;
    let sources = state
        .initial
        .iter()
        .map(|r| (r.id.clone(), source_of(state, &r.id)))
        .collect();
    Some(LedgerLine::Initial(InitialLine {
        candidates: state.initial.clone(),
        elite_id: best.1.clone(),
        elite_score: best.0,
        sources,
    }))
}

pub fn generation_line(state: &RunState, record: &GenerationRecord) -> LedgerLine {
    let sources = [&record.functional.id, &record.structural.id]
        .into_iter()
        .map(|id| (id.clone(), source_of(state, id)))
        .collect();
    LedgerLine::Generation(GenerationLine {
        record: record.clone(),
        sources,
    })
}

/// The complete ledger text for `state`, one JSON object per line.
pub fn render(header: &LedgerHeader, state: &RunState) -> String {
    let mut out = LedgerLine::Header(header.clone()).to_json();
    out.push('\n');
    if let Some(line) = initial_line(state) {
        out.push_str(&line.to_json());
        out.push('\n');
    }
    for record in &state.history {
        out.push_str(&generation_line(state, record).to_json());
        out.push('\n');
    }
    out
}
