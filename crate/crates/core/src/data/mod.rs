//! Potential-energy samples: synthetic generators, CSV IO and standardization.

mod csv_io;
mod normalize;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_csv, parse_csv, save_csv, write_csv};
pub use normalize::{denormalize, normalize, DatasetStats, STD_CONVENTION};
pub use synth::{gen_lennard_jones, gen_morse, pair_features, pair_jacobian, PairPotential};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub energy: f64,
    pub forces: Option<Vec<f64>>,
}

/// How stored forces relate to the features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceLayout {
    None,
    /// One force per feature: `-dE/dx`.
    PerFeature,
    /// Pair descriptor `[r, 1/r, 1/r^6, 1/r^12]` with the scalar force `-dE/dr`.
    Pair,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
}

impl Dataset {
    /// Checks that feature and force lengths are uniform and values finite.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let dim = first.features.len();
            let fdim = first.forces.as_ref().map(Vec::len);
            if dim == 0 {
                return Err(Error::InvalidDataset("samples have no features".into()));
            }
            for (i, s) in samples.iter().enumerate() {
                if s.features.len() != dim {
                    return Err(Error::InvalidDataset(format!(
                        "sample {i} has {} features, expected {dim}",
                        s.features.len()
                    )));
                }
                if s.forces.as_ref().map(Vec::len) != fdim {
                    return Err(Error::InvalidDataset(format!("sample {i} has inconsistent forces")));
                }
                let finite = s.energy.is_finite()
                    && s.features.iter().all(|v| v.is_finite())
                    && s.forces.iter().flatten().all(|v| v.is_finite());
                if !finite {
                    return Err(Error::InvalidDataset(format!("sample {i} has a non-finite value")));
                }
            }
        }
        Ok(Dataset { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }

    pub fn force_dim(&self) -> Option<usize> {
        self.samples.first().and_then(|s| s.forces.as_ref().map(Vec::len))
    }

    pub fn force_layout(&self) -> ForceLayout {
        match self.force_dim() {
            None => ForceLayout::None,
            Some(d) if d == self.feature_dim() => ForceLayout::PerFeature,
            Some(1) if self.feature_dim() == 4 => ForceLayout::Pair,
            Some(_) => ForceLayout::None,
        }
    }

    /// Splits off the last `ceil(fraction * n)` samples for validation.
    pub fn split(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Config(format!("validation fraction {fraction} not in [0, 1)")));
        }
        let n_val = (fraction * self.len() as f64).ceil() as usize;
        let cut = self.len() - n_val;
        if cut == 0 {
            return Err(Error::InvalidDataset("no samples left for training".into()));
        }
        Ok((
            Dataset { samples: self.samples[..cut].to_vec() },
            Dataset { samples: self.samples[cut..].to_vec() },
        ))
    }
}
