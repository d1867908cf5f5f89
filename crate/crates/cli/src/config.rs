//! The shared TOML run configuration.
//!
//! ```toml
//! seed = 7
//! trials = 100000
//!
//! [process]
//! path_length = 3
//! decay = { kind = "exponential", lambda_tau = 1.0 }
//! selector = { kind = "noisy_score", noise_std = 1.0, margin = 1.0 }
//!
//! [[strategies]]
//! kind = "bon"
//! n = 8
//! rule = "orm_max"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slowthink_core::info::FanoSuiteConfig;
use slowthink_core::{HsicConfig, ProcessConfig, StrategySpec};
use thiserror::Error;

use crate::recipes::RecipeParams;

pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: u64,
    pub out: PathBuf,
    pub process: Option<ProcessConfig>,
    pub strategies: Vec<StrategySpec>,
    pub hsic: HsicConfig,
    pub fano: FanoSuiteConfig,
    pub recipe: RecipeParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            trials: DEFAULT_TRIALS,
            out: PathBuf::from("out"),
            process: None,
            strategies: Vec::new(),
            hsic: HsicConfig::default(),
            fano: FanoSuiteConfig::default(),
            recipe: RecipeParams::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Checks every section against its owning module's rules.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        if self.trials == 0 {
            return Err(ConfigError::Invalid("trials must be at least 1".into()));
        }
        if let Some(process) = &self.process {
            process.validate().map_err(|e| invalid(&e))?;
            for s in &self.strategies {
                s.validate(process).map_err(|e| invalid(&e))?;
            }
        }
        self.hsic.check().map_err(|e| invalid(&e))?;
        self.fano.check().map_err(|e| invalid(&e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let text = r#"
seed = 7
trials = 100000

[process]
path_length = 3
decay = { kind = "exponential", lambda_tau = 1.0 }
selector = { kind = "noisy_score", noise_std = 1.0, margin = 1.0 }

[[strategies]]
kind = "bon"
n = 8
rule = "orm_max"
"#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.strategies.len(), 1);
        assert_eq!(cfg.process.unwrap().path_length, 3);
    }

    #[test]
    fn invalid_sections_are_rejected() {
        let bad: RunConfig = toml::from_str(
            "[process]\npath_length = 2\ndecay = { kind = \"tabulated\", table = [0.5, 0.9] }\nselector = { kind = \"ideal\" }\n",
        )
        .unwrap();
        assert!(bad.validate().is_err());
        assert!(toml::from_str::<RunConfig>("unknown_key = 1").is_err());
    }
}
