//! Short-term pairwise reflections and the accumulated long-term reflection.

use serde::{Deserialize, Serialize};

use crate::population::CandidateId;

/// Word cap for every stored reflection.
pub const MAX_REFLECTION_WORDS: usize = 50;

/// Keep the first `limit` whitespace-separated words, joined by single spaces.
pub fn truncate_words(text: &str, limit: usize) -> String {
    text.split_whitespace().take(limit).collect::<Vec<_>>().join(" ")
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortReflection {
    pub worse_id: CandidateId,
    pub better_id: CandidateId,
    pub text: String,
}

impl ShortReflection {
    pub fn new(worse_id: CandidateId, better_id: CandidateId, text: &str) -> Self {
        ShortReflection {
            worse_id,
            better_id,
            text: truncate_words(text, MAX_REFLECTION_WORDS),
        }
    }
}

/// Reflections for the current generation plus the running synthesis.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReflectionLedger {
    pub short_term: Vec<ShortReflection>,
    pub long_term: String,
    pub generation: u32,
}

impl ReflectionLedger {
    pub fn advance(&self, short_term: Vec<ShortReflection>, long_term: &str) -> Self {
        ReflectionLedger {
            short_term,
            long_term: truncate_words(long_term, MAX_REFLECTION_WORDS),
            generation: self.generation + 1,
        }
    }
}
