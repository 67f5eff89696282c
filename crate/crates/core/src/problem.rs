//! Problem definitions and run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::problems;
use crate::sandbox::ValidatorRule;

/// Placeholder replaced by the candidate file path in external runner templates.
pub const CANDIDATE_PLACEHOLDER: &str = "{candidate}";

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read problem spec {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid problem spec {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid problem spec: {0}")]
    Invalid(String),
}

/// Where the evaluation oracle for a problem lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleBinding {
    /// One of the in-process problems in [`crate::problems`].
    Builtin(String),
    /// A command template run as a subprocess; must contain `{candidate}` once.
    External(String),
}

/// Reference implementation handed to the provider as starting context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceCode {
    Inline(String),
    Path(PathBuf),
}

/// One research problem: description, reference code, bibliography and oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Optional for builtin problems, which fall back to their seed template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_code: Option<ReferenceCode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bibliography_path: Option<PathBuf>,
    pub oracle_binding: OracleBinding,
    #[serde(default)]
    pub validators: Vec<ValidatorRule>,
    /// File name external candidates are written under (e.g. `candidate.py`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_filename: Option<String>,
    /// Directory the spec was loaded from; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ProblemSpec {
    pub fn builtin(problem_id: &str) -> Result<Self, SpecError> {
        let problem = problems::lookup(problem_id)
            .ok_or_else(|| SpecError::Invalid(format!("unknown builtin problem `{problem_id}`")))?;
        let spec = ProblemSpec {
            name: problem.id().to_string(),
            description: problem.description().to_string(),
            reference_code: None,
            bibliography_path: None,
            oracle_binding: OracleBinding::Builtin(problem_id.to_string()),
            validators: Vec::new(),
            candidate_filename: None,
            base_dir: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = fs::read_to_string(path).map_err(|source| SpecError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut spec = Self::from_json(&text).map_err(|source| SpecError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        // absolute, because oracles run inside their own working directory
        let absolute = std::path::absolute(path).map_err(|source| SpecError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        spec.base_dir = absolute.parent().map(Path::to_path_buf);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.name.trim().is_empty() {
            return Err(SpecError::Invalid("name must be non-empty".into()));
        }
        match &self.oracle_binding {
            OracleBinding::Builtin(id) => {
                if problems::lookup(id).is_none() {
                    return Err(SpecError::Invalid(format!("unknown builtin problem `{id}`")));
                }
            }
            OracleBinding::External(template) => {
                let count = template.matches(CANDIDATE_PLACEHOLDER).count();
                if count != 1 {
                    return Err(SpecError::Invalid(format!(
                        "runner template must contain {CANDIDATE_PLACEHOLDER} exactly once (found {count})"
                    )));
                }
            }
        }
        for rule in &self.validators {
            rule.check_well_formed().map_err(SpecError::Invalid)?;
        }
        if let Some(name) = &self.candidate_filename {
            if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
                return Err(SpecError::Invalid(format!("candidate_filename `{name}` must be a plain file name")));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// Reference source text; builtin problems default to their seed template.
    pub fn reference_source(&self) -> Result<String, SpecError> {
        match &self.reference_code {
            Some(ReferenceCode::Inline(text)) => Ok(text.clone()),
            Some(ReferenceCode::Path(path)) => {
                let path = self.resolve(path);
                fs::read_to_string(&path).map_err(|source| SpecError::Io { path, source })
            }
            None => match &self.oracle_binding {
                OracleBinding::Builtin(id) => problems::lookup(id)
                    .map(|p| p.seed_template().to_string())
                    .ok_or_else(|| SpecError::Invalid(format!("unknown builtin problem `{id}`"))),
                OracleBinding::External(_) => Ok(String::new()),
            },
        }
    }

    /// Content hash of the serialized spec, recorded in ledger headers.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

/// Engine hyperparameters. Defaults follow the reference configuration:
/// 10 initial candidates, population 10, mutation rate 0.5, 10 generations,
/// 30 s evaluation timeout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n_init: usize,
    pub n_pop: usize,
    pub mutation_rate: f64,
    pub iterations: u32,
    pub eval_timeout_secs: f64,
    pub seed: u64,
    pub max_workers: usize,
    /// Pairs selected per generation for short-term reflection.
    pub pairs_per_generation: usize,
    /// Keep sandbox working directories after evaluation.
    pub keep_artifacts: bool,
    /// Fixed evaluation seed; derived from `seed` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_init: 10,
            n_pop: 10,
            mutation_rate: 0.5,
            iterations: 10,
            eval_timeout_secs: 30.0,
            seed: 0,
            max_workers: 4,
            pairs_per_generation: 2,
            keep_artifacts: false,
            eval_seed: None,
        }
    }
}

impl RunConfig {
    /// The longer schedule used for the reported experiments (20 generations).
    pub fn experiment_profile() -> Self {
        RunConfig {
            iterations: 20,
            ..RunConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let bad = |m: &str| Err(SpecError::Invalid(m.to_string()));
        if self.n_init == 0 {
            return bad("n_init must be positive");
        }
        if self.n_pop == 0 {
            return bad("n_pop must be positive");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0, 1]");
        }
        if !(self.eval_timeout_secs.is_finite() && self.eval_timeout_secs > 0.0) {
            return bad("eval_timeout_secs must be positive");
        }
        if self.max_workers == 0 {
            return bad("max_workers must be positive");
        }
        if self.pairs_per_generation == 0 {
            return bad("pairs_per_generation must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_table() {
        let c = RunConfig::default();
        assert_eq!(c.n_init, 10);
        assert_eq!(c.n_pop, 10);
        assert_eq!(c.mutation_rate, 0.5);
        assert_eq!(c.iterations, 10);
        assert_eq!(c.eval_timeout_secs, 30.0);
        assert_eq!(RunConfig::experiment_profile().iterations, 20);
    }

    #[test]
    fn external_template_needs_exactly_one_placeholder() {
        let mut spec = ProblemSpec::builtin("stability").unwrap();
        spec.oracle_binding = OracleBinding::External("python3 oracle.py".into());
        assert!(spec.validate().is_err());
        spec.oracle_binding = OracleBinding::External("cat {candidate} {candidate}".into());
        assert!(spec.validate().is_err());
        spec.oracle_binding = OracleBinding::External("python3 oracle.py {candidate}".into());
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn empty_name_rejected() {
        let mut spec = ProblemSpec::builtin("doa").unwrap();
        spec.name = "  ".into();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn json_schema_parses() {
        let text = r#"{
            "name": "binpack",
            "description": "online bin packing heuristic",
            "reference_code": {"path": "seed.py"},
            "oracle_binding": {"external": "python3 oracle.py {candidate}"},
            "validators": [
                {"kind": "max_source_bytes", "limit": 4096, "message": "too long"},
                {"kind": "forbidden_token", "token": "import os", "message": "no os"}
            ]
        }"#;
        let spec = ProblemSpec::from_json(text).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.validators.len(), 2);
        assert_eq!(spec.reference_code, Some(ReferenceCode::Path("seed.py".into())));
    }

    #[test]
    fn builtin_reference_defaults_to_seed_template() {
        let spec = ProblemSpec::builtin("stability").unwrap();
        assert!(spec.reference_source().unwrap().contains("tau"));
    }
}
