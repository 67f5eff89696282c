//! Candidate generation and reflection.
//!
//! A [`Provider`] answers one [`ProviderRequest`] at a time. The role
//! functions in this module ([`generate_initial`], [`reflect_short`],
//! [`reflect_long`], [`crossover`], [`mutate`], [`restructure`]) build the
//! request, draw its seed from the run generator, and post-process the
//! response: code roles require exactly one extractable fenced block, and
//! reflections are truncated to the word cap.

mod http;
mod mock;
pub mod prompts;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpConfig, HttpProvider, DEFAULT_MAX_IN_FLIGHT, MAX_ATTEMPTS};
pub use mock::{MockProvider, MUTATION_FACTORS, NO_DIFFERENCE};

use crate::population::Candidate;
use crate::problem::ProblemSpec;
use crate::reflection::{truncate_words, MAX_REFLECTION_WORDS};

/// Default output-token budget per request.
pub const DEFAULT_BUDGET: u32 = 2048;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("provider unavailable after {attempts} attempts: {last_error}")]
    Unavailable { attempts: u32, last_error: String },
    #[error("malformed response (no fenced code block)")]
    Malformed { raw: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    GenerateInitial,
    ReflectShort,
    ReflectLong,
    Crossover,
    Mutate,
    Restructure,
}

impl Role {
    pub fn produces_code(self) -> bool {
        !matches!(self, Role::ReflectShort | Role::ReflectLong)
    }
}

/// Role-specific inputs. Every field a role needs is a required field of
/// its variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Payload {
    GenerateInitial {
        problem: String,
        reference: String,
        index: usize,
        count: usize,
    },
    ReflectShort {
        worse: String,
        better: String,
        worse_score: f64,
        better_score: f64,
    },
    ReflectLong {
        shorts: Vec<String>,
        previous: String,
    },
    Crossover {
        worse: String,
        better: String,
        reflection: String,
    },
    Mutate {
        elite: String,
        reflection: String,
        feedback: Option<String>,
    },
    Restructure {
        problem: String,
        elite: String,
        reflection: String,
        feedback: Option<String>,
    },
}

impl Payload {
    pub fn role(&self) -> Role {
        match self {
            Payload::GenerateInitial { .. } => Role::GenerateInitial,
            Payload::ReflectShort { .. } => Role::ReflectShort,
            Payload::ReflectLong { .. } => Role::ReflectLong,
            Payload::Crossover { .. } => Role::Crossover,
            Payload::Mutate { .. } => Role::Mutate,
            Payload::Restructure { .. } => Role::Restructure,
        }
    }

    /// Error feedback routed into this request, if any.
    pub fn feedback(&self) -> Option<&str> {
        match self {
            Payload::Mutate { feedback, .. } | Payload::Restructure { feedback, .. } => feedback.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub payload: Payload,
    /// Maximum output tokens.
    pub budget: u32,
    /// Drawn from the run generator; the mock backend is a pure function of it.
    pub seed: u64,
}

impl ProviderRequest {
    pub fn new(payload: Payload, seed: u64) -> Self {
        ProviderRequest {
            payload,
            budget: DEFAULT_BUDGET,
            seed,
        }
    }

    pub fn role(&self) -> Role {
        self.payload.role()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    pub extracted_code: Option<String>,
    pub extracted_thought: Option<String>,
    /// Backend note about a degenerate request (e.g. nothing to mutate).
    pub warning: Option<String>,
}

impl ProviderResponse {
    pub fn from_text(text: impl Into<String>) -> Self {
        let text = text.into();
        ProviderResponse {
            extracted_code: extract_code(&text),
            extracted_thought: extract_thought(&text),
            text,
            warning: None,
        }
    }
}

pub trait Provider: Send + Sync {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
    /// Short backend name recorded in checkpoints.
    fn kind(&self) -> &'static str;
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// Interior of the first fenced block: the lines strictly between the
/// opening fence line and the next line that starts with a fence.
pub fn extract_code(text: &str) -> Option<String> {
    let mut offset = 0;
    let mut open: Option<usize> = None;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        if !is_fence(line) {
            continue;
        }
        match open {
            None => open = Some(offset),
            Some(body) => {
                let end = if start > body { start - 1 } else { body };
                let interior = &text[body..end.max(body)];
                return Some(interior.strip_suffix('\r').unwrap_or(interior).to_string());
            }
        }
    }
    None
}

/// Text after the first `Thought:` label, up to the end of its line.
pub fn extract_thought(text: &str) -> Option<String> {
    text.lines().find_map(|line| {
        let t = line.trim_start();
        let rest = t.strip_prefix("Thought:").or_else(|| t.strip_prefix("thought:"))?;
        let rest = rest.trim();
        (!rest.is_empty()).then(|| rest.to_string())
    })
}

/// Wrap a program in the response shape code roles are asked to produce.
pub fn render_code_response(thought: &str, source: &str) -> String {
    let body = source.strip_suffix('\n').unwrap_or(source);
    format!("Thought: {thought}\n```\n{body}\n```\n")
}

/// A generated program plus its optional strategy note.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub source: String,
    pub thought: Option<String>,
    pub warning: Option<String>,
}

fn call<R: RngCore + ?Sized>(provider: &dyn Provider, payload: Payload, rng: &mut R) -> Result<ProviderResponse, ProviderError> {
    let request = ProviderRequest::new(payload, rng.next_u64());
    provider.complete(&request)
}

fn code_from(response: ProviderResponse) -> Result<Generated, ProviderError> {
    match response.extracted_code {
        Some(code) => {
            // keep a trailing newline convention so ids stay stable
            let source = if code.is_empty() || code.ends_with('\n') { code } else { format!("{code}\n") };
            Ok(Generated {
                source,
                thought: response.extracted_thought.map(|t| truncate_words(&t, 100)),
                warning: response.warning,
            })
        }
        None => Err(ProviderError::Malformed { raw: response.text }),
    }
}

fn reflection_from(response: ProviderResponse) -> String {
    truncate_words(&response.text, MAX_REFLECTION_WORDS)
}

pub fn generate_initial<R: RngCore + ?Sized>(
    provider: &dyn Provider,
    problem: &ProblemSpec,
    reference: &str,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Generated>, ProviderError> {
    if n == 0 {
        return Err(ProviderError::InvalidArgument("n must be at least 1".into()));
    }
    (0..n)
        .map(|index| generate_initial_one(provider, problem, reference, index, n, rng))
        .collect()
}

/// Variant `index` of `count`; lets callers issue initial requests in parallel.
pub fn generate_initial_one<R: RngCore + ?Sized>(
    provider: &dyn Provider,
    problem: &ProblemSpec,
    reference: &str,
    index: usize,
    count: usize,
    rng: &mut R,
) -> Result<Generated, ProviderError> {
    if index >= count {
        return Err(ProviderError::InvalidArgument(format!("index {index} out of range for {count} variants")));
    }
    let payload = Payload::GenerateInitial {
        problem: problem.description.clone(),
        reference: reference.to_string(),
        index,
        count,
    };
    code_from(call(provider, payload, rng)?)
}

fn score_of(c: &Candidate) -> f64 {
    c.score.unwrap_or(f64::NAN)
}

pub fn reflect_short<R: RngCore + ?Sized>(
    provider: &dyn Provider,
    worse: &Candidate,
    better: &Candidate,
    rng: &mut R,
) -> Result<String, ProviderError> {
    let payload = Payload::ReflectShort {
        worse: worse.source.clone(),
        better: better.source.clone(),
        worse_score: score_of(worse),
        better_score: score_of(better),
    };
    Ok(reflection_from(call(provider, payload, rng)?))
}

pub fn reflect_long<R: RngCore + ?Sized>(
    provider: &dyn Provider,
    shorts: &[String],
    previous: &str,
    rng: &mut R,
) -> Result<String, ProviderError> {
    let payload = Payload::ReflectLong {
        shorts: shorts.to_vec(),
        previous: previous.to_string(),
    };
    Ok(reflection_from(call(provider, payload, rng)?))
}

pub fn crossover<R: RngCore + ?Sized>(
    provider: &dyn Provider,
    worse: &Candidate,
    better: &Candidate,
    short_reflection: &str,
    rng: &mut R,
) -> Result<Generated, ProviderError> {
    let payload = Payload::Crossover {
        worse: worse.source.clone(),
        better: better.source.clone(),
        reflection: short_reflection.to_string(),
    };
    code_from(call(provider, payload, rng)?)
}

pub fn mutate<R: RngCore + ?Sized>(
    provider: &dyn Provider,
    elite: &Candidate,
    long_reflection: &str,
    feedback: Option<&str>,
    rng: &mut R,
) -> Result<Generated, ProviderError> {
    let payload = Payload::Mutate {
        elite: elite.source.clone(),
        reflection: long_reflection.to_string(),
        feedback: feedback.map(str::to_string),
    };
    code_from(call(provider, payload, rng)?)
}

pub fn restructure<R: RngCore + ?Sized>(
    provider: &dyn Provider,
    problem: &ProblemSpec,
    elite: &Candidate,
    long_reflection: &str,
    feedback: Option<&str>,
    rng: &mut R,
) -> Result<Generated, ProviderError> {
    let payload = Payload::Restructure {
        problem: problem.description.clone(),
        elite: elite.source.clone(),
        reflection: long_reflection.to_string(),
        feedback: feedback.map(str::to_string),
    };
    code_from(call(provider, payload, rng)?)
}
