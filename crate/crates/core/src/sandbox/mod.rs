//! Candidate validation and evaluation.
//!
//! Every evaluation produces an [`EvaluationOutcome`]: a status, a score only
//! when the status is `Ok`, and structured diagnostics that are kept for
//! every failure so the next generation's prompts can carry them.

mod builtin;
mod external;

use std::fmt;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::evaluate_builtin;
pub use external::{execute_external, parse_oracle_line, ExternalSandbox, KILL_GRACE};

/// Cap on retained stdout/stderr tails.
pub const FEEDBACK_TAIL_BYTES: usize = 4096;

/// Environment variable carrying the evaluation seed to external oracles.
pub const EVAL_SEED_ENV: &str = "EVO_EVAL_SEED";

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("unknown builtin problem `{0}`")]
    UnknownProblem(String),
    #[error("sandbox infrastructure failure: {0}")]
    Infrastructure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidatorKind {
    /// Run `runner` (a template containing `{candidate}`); non-zero exit fails.
    SyntaxCheck { runner: String },
    MaxSourceBytes { limit: usize },
    ForbiddenToken { token: String },
    /// Source must define `name` (`def name(`, `fn name(`, `function name(` or `name = ...`).
    RequiredEntrypoint { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatorRule {
    #[serde(flatten)]
    pub kind: ValidatorKind,
    #[serde(default)]
    pub message: String,
}

impl ValidatorRule {
    pub fn new(kind: ValidatorKind, message: impl Into<String>) -> Self {
        ValidatorRule {
            kind,
            message: message.into(),
        }
    }

    pub fn check_well_formed(&self) -> Result<(), String> {
        match &self.kind {
            ValidatorKind::MaxSourceBytes { limit } if *limit == 0 => {
                Err("max_source_bytes limit must be positive".into())
            }
            ValidatorKind::ForbiddenToken { token } if token.is_empty() => {
                Err("forbidden_token must be non-empty".into())
            }
            ValidatorKind::RequiredEntrypoint { name } if name.is_empty() => {
                Err("required_entrypoint name must be non-empty".into())
            }
            ValidatorKind::SyntaxCheck { runner }
                if runner.matches(crate::problem::CANDIDATE_PLACEHOLDER).count() != 1 =>
            {
                Err("syntax_check runner must contain {candidate} exactly once".into())
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ValidatorKind::SyntaxCheck { .. } => "syntax_check",
            ValidatorKind::MaxSourceBytes { .. } => "max_source_bytes",
            ValidatorKind::ForbiddenToken { .. } => "forbidden_token",
            ValidatorKind::RequiredEntrypoint { .. } => "required_entrypoint",
        }
    }
}

/// The first rule a source failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub rule: ValidatorRule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule #{} {}: {}", self.index, self.rule.name(), self.detail)?;
        if !self.rule.message.is_empty() {
            write!(f, " ({})", self.rule.message)?;
        }
        Ok(())
    }
}

/// Check rules in declaration order and report the first failure.
pub fn validate(source: &str, rules: &[ValidatorRule]) -> Result<(), Violation> {
    for (index, rule) in rules.iter().enumerate() {
        let failure = match &rule.kind {
            ValidatorKind::MaxSourceBytes { limit } => (source.len() > *limit)
                .then(|| format!("source is {} bytes, limit {limit}", source.len())),
            ValidatorKind::ForbiddenToken { token } => source
                .contains(token.as_str())
                .then(|| format!("forbidden token `{token}` present")),
            ValidatorKind::RequiredEntrypoint { name } => (!defines_entrypoint(source, name))
                .then(|| format!("entrypoint `{name}` not defined")),
            ValidatorKind::SyntaxCheck { runner } => external::syntax_check(source, runner).err(),
        };
        if let Some(detail) = failure {
            return Err(Violation {
                index,
                rule: rule.clone(),
                detail,
            });
        }
    }
    Ok(())
}

fn defines_entrypoint(source: &str, name: &str) -> bool {
    let name = regex::escape(name);
    let pattern = format!(
        r"(?m)(\b(def|fn|function)\s+{name}\s*[(<])|(^\s*(let\s+|const\s+)?{name}\s*=)"
    );
    Regex::new(&pattern).map(|re| re.is_match(source)).unwrap_or(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Timeout,
    Crash,
    Invalid,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Timeout => "timeout",
            Status::Crash => "crash",
            Status::Invalid => "invalid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Feedback {
    pub stderr_tail: String,
    pub stdout_tail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violated_rule: Option<String>,
    /// Seconds of wall clock spent on the evaluation.
    pub wall_time: f64,
}

impl Feedback {
    /// Deterministic diagnostic text (excludes wall time) for prompts and ledgers.
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some(rule) = &self.violated_rule {
            parts.push(format!("violated rule: {rule}"));
        }
        if !self.stderr_tail.trim().is_empty() {
            parts.push(format!("stderr: {}", self.stderr_tail.trim()));
        }
        if !self.stdout_tail.trim().is_empty() {
            parts.push(format!("stdout: {}", self.stdout_tail.trim()));
        }
        tail(&parts.join("\n"), FEEDBACK_TAIL_BYTES)
    }
}

/// Result of one oracle call. Construct through the associated functions so
/// that `status == Ok` holds exactly when a score is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutcome {
    status: Status,
    score: Option<f64>,
    feedback: Feedback,
}

impl EvaluationOutcome {
    pub fn ok(score: f64, feedback: Feedback) -> Self {
        assert!(score.is_finite(), "scores must be finite");
        EvaluationOutcome {
            status: Status::Ok,
            score: Some(score),
            feedback,
        }
    }

    pub fn failed(status: Status, feedback: Feedback) -> Self {
        assert!(status != Status::Ok, "use EvaluationOutcome::ok for successes");
        EvaluationOutcome {
            status,
            score: None,
            feedback,
        }
    }

    pub fn crash(message: impl Into<String>, wall_time: f64) -> Self {
        Self::failed(
            Status::Crash,
            Feedback {
                stderr_tail: tail(&message.into(), FEEDBACK_TAIL_BYTES),
                wall_time,
                ..Feedback::default()
            },
        )
    }

    pub fn invalid(violation: &Violation) -> Self {
        Self::failed(
            Status::Invalid,
            Feedback {
                violated_rule: Some(violation.to_string()),
                ..Feedback::default()
            },
        )
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn score(&self) -> Option<f64> {
        self.score
    }

    pub fn feedback(&self) -> &Feedback {
        &self.feedback
    }
}

/// What the engine does with an evaluated candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum Disposition {
    Selectable { score: f64 },
    /// Sentinel: kept out of selection, diagnostics retained for correction.
    Excluded { status: Status, feedback: Feedback },
}

pub fn sentinel_wrap(outcome: &EvaluationOutcome) -> Disposition {
    match (outcome.status, outcome.score) {
        (Status::Ok, Some(score)) => Disposition::Selectable { score },
        (status, _) => Disposition::Excluded {
            status,
            feedback: outcome.feedback.clone(),
        },
    }
}

/// Cooperative wall-clock deadline for in-process evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    start: Instant,
    limit: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeadlineExceeded;

impl Deadline {
    pub fn after(limit: Duration) -> Self {
        Deadline {
            start: Instant::now(),
            limit,
        }
    }

    pub fn unlimited() -> Self {
        Self::after(Duration::from_secs(u64::MAX / 4))
    }

    pub fn check(&self) -> Result<(), DeadlineExceeded> {
        if self.start.elapsed() >= self.limit {
            Err(DeadlineExceeded)
        } else {
            Ok(())
        }
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

/// Last `max_bytes` of `text`, cut on a char boundary.
pub fn tail(text: &str, max_bytes: usize) -> String {
    if text.len() <= max_bytes {
        return text.to_string();
    }
    let mut start = text.len() - max_bytes;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    text[start..].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(kind: ValidatorKind) -> ValidatorRule {
        ValidatorRule::new(kind, "")
    }

    #[test]
    fn empty_rules_pass() {
        assert!(validate("anything", &[]).is_ok());
    }

    #[test]
    fn max_bytes_violation_names_rule() {
        let v = validate("0123456789", &[rule(ValidatorKind::MaxSourceBytes { limit: 5 })]).unwrap_err();
        assert_eq!(v.rule.name(), "max_source_bytes");
        assert_eq!(v.index, 0);
    }

    #[test]
    fn forbidden_token_absent_passes() {
        let rules = [rule(ValidatorKind::ForbiddenToken {
            token: "import os".into(),
        })];
        assert!(validate("import math\n", &rules).is_ok());
        assert!(validate("import os\n", &rules).is_err());
    }

    #[test]
    fn rules_checked_in_order() {
        let rules = [
            rule(ValidatorKind::ForbiddenToken { token: "zzz".into() }),
            rule(ValidatorKind::MaxSourceBytes { limit: 1 }),
            rule(ValidatorKind::ForbiddenToken { token: "abc".into() }),
        ];
        assert_eq!(validate("abc", &rules).unwrap_err().index, 1);
    }

    #[test]
    fn entrypoint_detection() {
        let rules = [rule(ValidatorKind::RequiredEntrypoint { name: "priority".into() })];
        assert!(validate("def priority(item, bins):\n    return 0\n", &rules).is_ok());
        assert!(validate("priority = 3\n", &rules).is_ok());
        assert!(validate("def priority_score(x):\n", &rules).is_err());
    }

    #[test]
    fn sentinel_dispositions() {
        let ok = EvaluationOutcome::ok(0.4, Feedback::default());
        assert_eq!(sentinel_wrap(&ok), Disposition::Selectable { score: 0.4 });

        let timeout = EvaluationOutcome::failed(
            Status::Timeout,
            Feedback {
                stderr_tail: "partial".into(),
                wall_time: 1.0,
                ..Feedback::default()
            },
        );
        match sentinel_wrap(&timeout) {
            Disposition::Excluded { status, feedback } => {
                assert_eq!(status, Status::Timeout);
                assert_eq!(feedback.stderr_tail, "partial");
            }
            other => panic!("unexpected {other:?}"),
        }

        let v = validate("0123456789", &[rule(ValidatorKind::MaxSourceBytes { limit: 5 })]).unwrap_err();
        match sentinel_wrap(&EvaluationOutcome::invalid(&v)) {
            Disposition::Excluded { feedback, .. } => {
                assert!(feedback.violated_rule.unwrap().contains("max_source_bytes"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tail_respects_char_boundaries() {
        let s = "é".repeat(3000);
        let t = tail(&s, FEEDBACK_TAIL_BYTES);
        assert!(t.len() <= FEEDBACK_TAIL_BYTES);
        assert!(s.ends_with(&t));
    }

    #[test]
    fn rule_json_shape() {
        let r: ValidatorRule =
            serde_json::from_str(r#"{"kind":"required_entrypoint","name":"priority","message":"m"}"#).unwrap();
        assert_eq!(r.kind, ValidatorKind::RequiredEntrypoint { name: "priority".into() });
    }
}
