//! Pipeline configuration: a TOML file whose values command-line flags
//! override.

use std::path::{Path, PathBuf};

use anchor_absa::abae::AbaeHyper;
use anchor_absa::cat::CatConfig;
use anchor_absa::embeddings::SgnsConfig;
use anchor_absa::ensembles::RuleConfig;
use anchor_absa::numerics::derive_seed;
use anchor_absa::synthetic::SyntheticConfig;
use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crate::Invalid;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub anchors: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchorConfig {
    pub sigma: f64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        Self { sigma: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed; each stage draws from its own derived stream.
    pub seed: u64,
    pub min_count: u64,
    pub paths: Paths,
    pub sgns: SgnsConfig,
    pub abae: AbaeHyper,
    pub cat: CatConfig,
    pub rule: RuleConfig,
    pub anchors: AnchorConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            min_count: 10,
            paths: Paths::default(),
            sgns: SgnsConfig::default(),
            abae: AbaeHyper::default(),
            cat: CatConfig::default(),
            rule: RuleConfig::default(),
            anchors: AnchorConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let config: Self =
            toml::from_str(&text).map_err(|e| Invalid(format!("bad config {}: {e}", path.display())))?;
        Ok(config)
    }

    /// Seed for a named stage.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.anchors.sigma >= 0.0) || !self.anchors.sigma.is_finite() {
            bail!(Invalid(format!("sigma must be >= 0, got {}", self.anchors.sigma)));
        }
        if self.min_count == 0 {
            bail!(Invalid("min-count must be at least 1".into()));
        }
        self.abae.validate().map_err(|e| Invalid(e.to_string()))?;
        self.rule.validate().map_err(|e| Invalid(e.to_string()))?;
        if let Some(g) = self.cat.gamma {
            if !(g > 0.0) {
                bail!(Invalid(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }

    /// Resolves a path from a flag, falling back to the config file.
    pub fn path(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> anyhow::Result<PathBuf> {
        flag.or_else(|| configured.clone())
            .ok_or_else(|| Invalid(format!("no {what} given; pass it as a flag or under [paths]")).into())
    }

    pub fn output(&self, flag: Option<PathBuf>, default_name: &str) -> PathBuf {
        flag.unwrap_or_else(|| {
            self.paths.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")).join(default_name)
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub fn read_existing(path: &Path, what: &str) -> anyhow::Result<Vec<u8>> {
    if !path.exists() {
        bail!(Invalid(format!("{what} {} does not exist", path.display())));
    }
    std::fs::read(path).with_context(|| format!("reading {what} {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = PipelineConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let c: PipelineConfig = toml::from_str("seed = 7\n[abae]\nk = 5\n[anchors]\nsigma = 0.5\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.abae.k, 5);
        assert_eq!(c.abae.epochs, AbaeHyper::default().epochs);
        assert_eq!(c.anchors.sigma, 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<PipelineConfig>("sede = 7\n").is_err());
    }

    #[test]
    fn stage_seeds_differ() {
        let c = PipelineConfig::default();
        assert_ne!(c.stage_seed("embed"), c.stage_seed("train-abae"));
    }
}
