//! Resumable snapshots of a run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::pusher::RunState;
use crate::scenario::RngState;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config_hash: String,
    pub config: RunConfig,
    pub rng: RngState,
    pub state: RunState,
}

impl Checkpoint {
    pub fn new(config: &RunConfig, rng: RngState, state: RunState) -> Self {
        Checkpoint { schema_version: SCHEMA_VERSION, config_hash: config.hash(), config: config.clone(), rng, state }
    }

    pub fn to_json(&self) -> Result<String> {
        // Non-finite floats would come back as null and fail to load.
        let text = serde_json::to_string(self)?;
        Self::from_json(&text)?;
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("unreadable checkpoint: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Checkpoint(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.config.hash() != self.config_hash {
            return Err(Error::Checkpoint("config hash does not match the stored config".into()));
        }
        if self.state.ensemble.len() != self.config.n {
            return Err(Error::Checkpoint("ensemble size does not match the config".into()));
        }
        Ok(())
    }

    /// Write through a temporary file so a crash never leaves a torn file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{sample_initial_ensemble, ScenarioKind};

    fn sample() -> Checkpoint {
        let cfg = RunConfig::minimal(ScenarioKind::RadialShell, 20, 0.01, 0.05);
        let (ens, rng) = sample_initial_ensemble(&cfg.scenario(), cfg.n, 1.0, 5).unwrap();
        let state = RunState::new(ens, &cfg.plan()).unwrap();
        Checkpoint::new(&cfg, rng, state)
    }

    #[test]
    fn json_round_trip_is_exact() {
        let c = sample();
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn tampered_config_is_rejected() {
        let mut c = sample();
        c.config.dt = 0.02;
        assert!(matches!(c.validate(), Err(Error::Checkpoint(_))));
        let mut c = sample();
        c.schema_version = 99;
        assert!(matches!(Checkpoint::from_json(&serde_json::to_string(&c).unwrap()), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        let c = sample();
        c.save(&p).unwrap();
        assert_eq!(Checkpoint::load(&p).unwrap(), c);
        assert!(matches!(Checkpoint::load(&dir.path().join("missing.json")), Err(Error::Checkpoint(_))));
    }
}
