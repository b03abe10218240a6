//! Versioned JSON checkpoints.
//!
//! Floats are written in shortest round-trip form and parsed with full
//! precision, so save followed by load is lossless.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::DatasetStats;
use crate::error::{Error, Result};
use crate::net::Model;

pub const FORMAT: &str = "taafs-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub epoch: usize,
    pub config: RunConfig,
    pub stats: DatasetStats,
    pub model: Model,
}

impl Checkpoint {
    pub fn new(config: RunConfig, stats: DatasetStats, model: Model, epoch: usize) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            epoch,
            config,
            stats,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("not a checkpoint: {e}")))?;
        if header.format != FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", header.format)));
        }
        if header.version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                header.version
            )));
        }
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.stats.validate()?;
        if self.model.input_dim() != self.stats.normalized_dim() {
            return Err(Error::Checkpoint(format!(
                "model takes {} inputs, statistics provide {}",
                self.model.input_dim(),
                self.stats.normalized_dim()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_json(&text).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Energy in raw units for raw features.
    pub fn predict_energy(&self, raw_features: &[f64]) -> Result<f64> {
        self.check_dim(raw_features)?;
        let x = self.stats.normalize_features(raw_features);
        Ok(self.stats.denormalize_energy(self.model.predict(&x)))
    }

    /// `-dE/dx` in raw units for raw features.
    pub fn predict_forces(&self, raw_features: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(raw_features)?;
        let x = self.stats.normalize_features(raw_features);
        let f_norm = self.model.input_gradient(&x);
        Ok(self.stats.raw_energy_gradient(&f_norm))
    }

    fn check_dim(&self, raw_features: &[f64]) -> Result<()> {
        if raw_features.len() != self.stats.raw_dim() {
            return Err(Error::Dimension(format!(
                "expected {} features, got {}",
                self.stats.raw_dim(),
                raw_features.len()
            )));
        }
        Ok(())
    }
}
