//! Detector-graph decoding with detector/observable-aware edge reweighting.
//!
//! Candidates set the reweighting scales; fitness is `1 - LER` of the exact
//! matcher on the `rep3` fixture over a seeded shot ensemble.

pub mod fixtures;
pub mod graph;
pub mod matching;
pub mod simulate;

use std::sync::OnceLock;

pub use graph::{doa_reweight, log_odds_weight, DetectorGraph, DoaScales, Edge, EdgeIndicators, Endpoint, GraphFixture};
pub use matching::{min_weight_matching, Matching, MatchingError, Partner, MAX_FLAGGED};
pub use simulate::{logical_error_rate, sample_shot, LerReport, Shot};

use super::params::Params;
use super::{BuiltinProblem, EvalFailure, Scored};
use crate::sandbox::Deadline;

/// Shots per candidate evaluation.
pub const EVAL_SHOTS: usize = 2000;

const SEED_TEMPLATE: &str = "\
# Edge weighting for a minimum-weight matching decoder.
# Base weights are alpha * log-odds of each edge's calibrated error rate.
# Each scale multiplies the weight of edges carrying that indicator:
# boundary, bulk (non-boundary), observable-touching, isolated detector.
alpha = 1.0
s_bnd = 1.0
s_blk = 1.0
s_obs = 1.0
s_iso = 1.0
";

pub struct DoaProblem {
    fixture: OnceLock<GraphFixture>,
}

impl DoaProblem {
    pub const fn new() -> Self {
        DoaProblem {
            fixture: OnceLock::new(),
        }
    }

    fn fixture(&self) -> &GraphFixture {
        self.fixture
            .get_or_init(|| fixtures::shipped("rep3").expect("rep3 fixture"))
    }

    /// Scales declared by a candidate. `use_bnd`, `use_obs` and `use_iso`
    /// (default true) switch a factor off entirely.
    pub fn scales_from(params: &Params) -> Result<DoaScales, String> {
        let mut s = DoaScales {
            alpha: params.number("alpha")?,
            s_bnd: params.number("s_bnd")?,
            s_blk: params.number("s_blk")?,
            s_obs: params.number("s_obs")?,
            s_iso: params.number("s_iso")?,
        };
        if !params.flag_or("use_bnd", true)? {
            s.s_bnd = 1.0;
        }
        if !params.flag_or("use_obs", true)? {
            s.s_obs = 1.0;
        }
        if !params.flag_or("use_iso", true)? {
            s.s_iso = 1.0;
        }
        s.validate().map_err(|e| e.to_string())?;
        Ok(s)
    }
}

impl Default for DoaProblem {
    fn default() -> Self {
        Self::new()
    }
}

/// LER of the exact decoder after reweighting `fixture` with `scales`.
pub fn reweighted_ler(
    fixture: &GraphFixture,
    scales: &DoaScales,
    shots: usize,
    eval_seed: u64,
    deadline: &Deadline,
) -> Result<LerReport, EvalFailure> {
    let graph = DetectorGraph::from_fixture(fixture, scales.alpha).map_err(|e| EvalFailure::Crash(e.to_string()))?;
    let graph = doa_reweight(&graph, scales);
    simulate::logical_error_rate_until(&graph, shots, eval_seed, deadline).map_err(|_| EvalFailure::Timeout)
}

impl BuiltinProblem for DoaProblem {
    fn id(&self) -> &'static str {
        "doa"
    }

    fn description(&self) -> &'static str {
        "Choose multiplicative edge-weight scales (boundary, bulk, observable, isolated) \
         for a minimum-weight matching decoder; fitness is 1 - logical error rate on the rep3 \
         detector graph."
    }

    fn seed_template(&self) -> &'static str {
        SEED_TEMPLATE
    }

    fn evaluate(&self, params: &Params, eval_seed: u64, deadline: &Deadline) -> Result<Scored, EvalFailure> {
        let scales = Self::scales_from(params).map_err(EvalFailure::Crash)?;
        let report = reweighted_ler(self.fixture(), &scales, EVAL_SHOTS, eval_seed, deadline)?;
        let mut note = format!(
            "LER {:.5} ({} of {} shots failed)",
            report.ler, report.failures, report.shots
        );
        if report.undecodable > 0 {
            note.push_str(&format!("; {} undecodable: {}", report.undecodable, report.diagnostics.join("; ")));
        }
        Ok(Scored {
            score: 1.0 - report.ler,
            note,
        })
    }
}
