//! Serializable run state and the per-generation audit records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::population::{Candidate, CandidateId, Origin, Population};
use crate::reflection::ReflectionLedger;
use crate::rng::RngState;
use crate::sandbox::{EvaluationOutcome, Status};

/// One generated candidate and how its evaluation went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub origin: Origin,
    pub id: CandidateId,
    pub status: Status,
    #[serde(default)]
    pub score: Option<f64>,
    /// Deterministic diagnostic summary for non-Ok outcomes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    /// Provider note about a degenerate request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl CandidateRecord {
    pub fn new(candidate: &Candidate, outcome: &EvaluationOutcome, warning: Option<String>) -> Self {
        let diagnostic = (outcome.status() != Status::Ok).then(|| outcome.feedback().summary());
        CandidateRecord {
            origin: candidate.origin,
            id: candidate.id.clone(),
            status: outcome.status(),
            score: outcome.score(),
            diagnostic,
            warning,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub worse: CandidateId,
    pub better: CandidateId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    pub pairs: Vec<PairRecord>,
    pub short_reflections: Vec<String>,
    pub long_reflection: String,
    /// The uniform draw deciding the functional branch (mutation iff `u < μ`).
    pub branch_draw: f64,
    pub functional: CandidateRecord,
    pub structural: CandidateRecord,
    pub elite_id_after: CandidateId,
    pub elite_score_after: f64,
    /// Failure feedback routed into this generation's mutate/restructure requests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routed_feedback: Option<String>,
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    /// Completed generations; equals `history.len()`.
    pub generation: u32,
    pub population: Population,
    pub ledger: ReflectionLedger,
    pub rng_state: RngState,
    pub initial: Vec<CandidateRecord>,
    pub history: Vec<GenerationRecord>,
    /// Every generated candidate by id, including excluded ones.
    pub store: BTreeMap<CandidateId, Candidate>,
    /// Most recent non-Ok feedback, routed to the next mutate/restructure.
    #[serde(default)]
    pub last_failure: Option<String>,
}

impl RunState {
    pub fn elite(&self) -> Option<&Candidate> {
        self.population.elite()
    }

    pub fn candidate(&self, id: &CandidateId) -> Option<&Candidate> {
        self.store.get(id)
    }

    /// Elite score after initialization followed by the score after each generation.
    pub fn elite_trajectory(&self) -> Vec<f64> {
        let initial = self
            .initial
            .iter()
            .filter_map(|r| r.score)
            .fold(f64::NEG_INFINITY, f64::max);
        std::iter::once(initial)
            .chain(self.history.iter().map(|g| g.elite_score_after))
            .collect()
    }

    /// Check the structural invariants a loaded state must satisfy.
    pub fn check_consistency(&self) -> Result<(), String> {
        if self.history.len() != self.generation as usize {
            return Err(format!(
                "history has {} records but generation is {}",
                self.history.len(),
                self.generation
            ));
        }
        let resolve = |id: &CandidateId| {
            if self.store.contains_key(id) {
                Ok(())
            } else {
                Err(format!("candidate {id} is not in the store"))
            }
        };
        for r in &self.initial {
            resolve(&r.id)?;
        }
        for g in &self.history {
            for p in &g.pairs {
                resolve(&p.worse)?;
                resolve(&p.better)?;
            }
            resolve(&g.functional.id)?;
            resolve(&g.structural.id)?;
            resolve(&g.elite_id_after)?;
        }
        for m in self.population.members() {
            resolve(&m.id)?;
        }
        if self.population.is_empty() {
            return Err("population is empty".into());
        }
        Ok(())
    }
}
