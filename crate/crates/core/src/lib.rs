//! Reflective co-evolution of candidate programs.
//!
//! A population of candidate sources is evolved along two coupled axes: a
//! functional axis (crossover of ranked pairs, or mutation of the elite) and
//! a structural axis (whole-program restructuring). Every generation is
//! steered by short pairwise reflections and one accumulated long-term
//! reflection, and every candidate is scored by a sandboxed oracle that
//! returns structured diagnostics alongside the fitness.
//!
//! The crate ships two in-process benchmark problems:
//!
//! * [`problems::decoding`]: a small detector-graph decoder with
//!   multiplicative detector/observable-aware edge reweighting and an exact
//!   bitmask matcher.
//! * [`problems::stability`]: adaptive loss weighting with a trust-region
//!   step limit, trained on a small residual network.
//!
//! A citation-key gate for LaTeX manuscripts lives in [`report`].
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory (`cargo run -p coevolve --example <name>`).

pub mod cli;
pub mod engine;
pub mod population;
pub mod problem;
pub mod problems;
pub mod provider;
pub mod reflection;
pub mod report;
pub mod rng;
pub mod sandbox;

pub use engine::{Engine, EngineError, RunResult, RunState};
pub use population::{Candidate, CandidateId, Origin, Population};
pub use problem::{OracleBinding, ProblemSpec, RunConfig};
pub use reflection::ReflectionLedger;
