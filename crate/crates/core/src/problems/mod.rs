//! Builtin problems evaluated in-process.
//!
//! A builtin candidate is a parameter recipe (see [`params`]); each problem
//! reads the parameters it needs and scores them deterministically per
//! evaluation seed.

pub mod decoding;
pub mod params;
pub mod stability;

use crate::sandbox::Deadline;
use params::Params;

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub score: f64,
    /// Human-readable evaluation summary, surfaced as oracle feedback.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalFailure {
    Crash(String),
    Timeout,
}

pub trait BuiltinProblem: Sync {
    fn id(&self) -> &'static str;
    fn description(&self) -> &'static str;
    /// Reference candidate; also the starting point for initial variants.
    fn seed_template(&self) -> &'static str;
    fn evaluate(&self, params: &Params, eval_seed: u64, deadline: &Deadline) -> Result<Scored, EvalFailure>;
}

static DOA: decoding::DoaProblem = decoding::DoaProblem::new();
static STABILITY: stability::StabilityProblem = stability::StabilityProblem;

/// Every registered builtin problem, in listing order.
pub fn list() -> [&'static dyn BuiltinProblem; 2] {
    [&DOA, &STABILITY]
}

pub fn lookup(id: &str) -> Option<&'static dyn BuiltinProblem> {
    list().into_iter().find(|p| p.id() == id)
}
