//! Versioned JSON checkpoints.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::state::RunState;
use super::EngineError;
use crate::problem::{ProblemSpec, RunConfig};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub crate_version: String,
    pub spec: ProblemSpec,
    /// Directory the spec was loaded from, for resolving relative paths.
    #[serde(default)]
    pub spec_dir: Option<PathBuf>,
    pub config: RunConfig,
    pub provider: String,
    pub state: RunState,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoints serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, EngineError> {
        let probe: VersionProbe =
            serde_json::from_str(text).map_err(|e| EngineError::CorruptCheckpoint(e.to_string()))?;
        if probe.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(EngineError::CheckpointVersion {
                found: probe.format_version,
                expected: CHECKPOINT_FORMAT_VERSION,
            });
        }
        let mut checkpoint: Checkpoint =
            serde_json::from_str(text).map_err(|e| EngineError::CorruptCheckpoint(e.to_string()))?;
        checkpoint.spec.base_dir = checkpoint.spec_dir.clone();
        checkpoint.state.check_consistency().map_err(EngineError::CorruptCheckpoint)?;
        Ok(checkpoint)
    }

    /// Write atomically: a sibling temporary file is renamed over `path`.
    pub fn save(&self, path: &Path) -> Result<(), EngineError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_json()).map_err(|e| EngineError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| EngineError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = fs::read_to_string(path).map_err(|e| EngineError::io(path, e))?;
        Self::from_json(&text)
    }
}
