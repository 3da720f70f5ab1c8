use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Arch, PolicyError, PolicyParams};

/// Serialized policy: architecture, flat parameters and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub arch: Arch,
    pub theta: PolicyParams,
    pub config_hash: String,
    pub seed: u64,
}

impl Checkpoint {
    pub fn new(
        arch: Arch,
        theta: PolicyParams,
        config_hash: impl Into<String>,
        seed: u64,
    ) -> Result<Self, PolicyError> {
        let ck = Self {
            arch,
            theta,
            config_hash: config_hash.into(),
            seed,
        };
        ck.validate()?;
        Ok(ck)
    }

    fn validate(&self) -> Result<(), PolicyError> {
        if self.theta.len() != self.arch.param_count() {
            return Err(PolicyError::Shape {
                what: "checkpoint theta",
                expected: self.arch.param_count(),
                got: self.theta.len(),
            });
        }
        if !self.theta.is_finite() {
            return Err(PolicyError::Checkpoint(
                "theta contains non-finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let ck: Self =
            serde_json::from_str(text).map_err(|e| PolicyError::Checkpoint(e.to_string()))?;
        ck.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PolicyError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
