use serde::{Deserialize, Serialize};

use super::{Dataset, Sample};
use crate::error::{Error, Result};

/// Standard deviations use the population (1/N) convention.
pub const STD_CONVENTION: &str = "population";

/// Per-feature and energy standardization statistics.
///
/// Constant features are dropped: `kept` lists the surviving raw feature
/// indices in order, and the normalized features contain only those.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub kept: Vec<usize>,
    pub energy_mean: f64,
    pub energy_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl DatasetStats {
    pub fn compute(dataset: &Dataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::InvalidDataset("cannot normalize an empty dataset".into()));
        }
        let samples = dataset.samples();
        let dim = dataset.feature_dim();
        let mut feature_mean = Vec::with_capacity(dim);
        let mut feature_std = Vec::with_capacity(dim);
        let mut kept = Vec::new();
        for j in 0..dim {
            let (m, s) = mean_std(samples.iter().map(|x| x.features[j]));
            feature_mean.push(m);
            feature_std.push(s);
            if s > 0.0 && s.is_finite() {
                kept.push(j);
            }
        }
        if kept.is_empty() {
            return Err(Error::InvalidDataset("every feature is constant".into()));
        }
        let (energy_mean, energy_std) = mean_std(samples.iter().map(|x| x.energy));
        if !(energy_std > 0.0 && energy_std.is_finite()) {
            return Err(Error::InvalidDataset("energy column is constant".into()));
        }
        Ok(DatasetStats { feature_mean, feature_std, kept, energy_mean, energy_std })
    }

    pub fn raw_dim(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn normalized_dim(&self) -> usize {
        self.kept.len()
    }

    pub fn normalize_features(&self, raw: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .map(|&j| (raw[j] - self.feature_mean[j]) / self.feature_std[j])
            .collect()
    }

    /// Restores the full raw vector; dropped features come back at their mean.
    pub fn denormalize_features(&self, normalized: &[f64]) -> Vec<f64> {
        let mut raw = self.feature_mean.clone();
        for (&j, &v) in self.kept.iter().zip(normalized) {
            raw[j] = v * self.feature_std[j] + self.feature_mean[j];
        }
        raw
    }

    pub fn normalize_energy(&self, e: f64) -> f64 {
        (e - self.energy_mean) / self.energy_std
    }

    pub fn denormalize_energy(&self, e: f64) -> f64 {
        e * self.energy_std + self.energy_mean
    }

    /// Converts a gradient with respect to normalized features into raw
    /// `dE/dx` for the full raw feature vector.
    pub fn raw_energy_gradient(&self, normalized_grad: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.raw_dim()];
        for (&j, &d) in self.kept.iter().zip(normalized_grad) {
            g[j] = d * self.energy_std / self.feature_std[j];
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.raw_dim();
        let ok = self.feature_std.len() == dim
            && !self.kept.is_empty()
            && self.kept.windows(2).all(|w| w[0] < w[1])
            && self.kept.iter().all(|&j| j < dim && self.feature_std[j] > 0.0)
            && self.energy_std > 0.0
            && self.feature_mean.iter().chain(&self.feature_std).all(|v| v.is_finite())
            && self.energy_mean.is_finite()
            && self.energy_std.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDataset("inconsistent normalization statistics".into()))
        }
    }
}

/// Standardizes features and energies. Forces are carried over unchanged, in
/// raw units.
pub fn normalize(dataset: &Dataset) -> Result<(Dataset, DatasetStats)> {
    let stats = DatasetStats::compute(dataset)?;
    let samples = dataset
        .samples()
        .iter()
        .map(|s| Sample {
            features: stats.normalize_features(&s.features),
            energy: stats.normalize_energy(s.energy),
            forces: s.forces.clone(),
        })
        .collect();
    Ok((Dataset::new(samples)?, stats))
}

pub fn denormalize(dataset: &Dataset, stats: &DatasetStats) -> Result<Dataset> {
    if !dataset.is_empty() && dataset.feature_dim() != stats.normalized_dim() {
        return Err(Error::Dimension(format!(
            "dataset has {} features, statistics expect {}",
            dataset.feature_dim(),
            stats.normalized_dim()
        )));
    }
    let samples = dataset
        .samples()
        .iter()
        .map(|s| Sample {
            features: stats.denormalize_features(&s.features),
            energy: stats.denormalize_energy(s.energy),
            forces: s.forces.clone(),
        })
        .collect();
    Dataset::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_morse;
    use proptest::prelude::*;

    fn one_feature(xs: &[f64]) -> Dataset {
        Dataset::new(
            xs.iter()
                .map(|&x| Sample { features: vec![x], energy: x * x, forces: None })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn population_std_of_one_two_three() {
        let stats = DatasetStats::compute(&one_feature(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(stats.feature_mean, vec![2.0]);
        // population sqrt(2/3); the sample convention would give 1.0
        assert!((stats.feature_std[0] - 0.816496580927726).abs() < 1e-15);
        assert_eq!(STD_CONVENTION, "population");
    }

    #[test]
    fn standardized_input_has_trivial_stats() {
        let (norm, _) = normalize(&gen_morse(100, (0.8, 3.0), 1).unwrap()).unwrap();
        let stats = DatasetStats::compute(&norm).unwrap();
        for j in 0..stats.raw_dim() {
            assert!(stats.feature_mean[j].abs() < 1e-12);
            assert!((stats.feature_std[j] - 1.0).abs() < 1e-12);
        }
        assert!(stats.energy_mean.abs() < 1e-12);
        assert!((stats.energy_std - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_features_dropped_constant_energy_rejected() {
        let d = Dataset::new(
            (0..5)
                .map(|i| Sample { features: vec![7.0, i as f64], energy: i as f64, forces: None })
                .collect(),
        )
        .unwrap();
        let (norm, stats) = normalize(&d).unwrap();
        assert_eq!(stats.kept, vec![1]);
        assert_eq!(norm.feature_dim(), 1);
        let back = denormalize(&norm, &stats).unwrap();
        assert_eq!(back.samples()[3].features[0], 7.0);

        let flat = Dataset::new(
            (0..5)
                .map(|i| Sample { features: vec![i as f64], energy: 1.0, forces: None })
                .collect(),
        )
        .unwrap();
        assert!(matches!(normalize(&flat), Err(Error::InvalidDataset(_))));
        assert!(normalize(&Dataset::default()).is_err());
    }

    #[test]
    fn raw_gradient_chain_rule() {
        let d = gen_morse(50, (0.8, 3.0), 4).unwrap();
        let stats = DatasetStats::compute(&d).unwrap();
        let g = stats.raw_energy_gradient(&[1.0, 0.0, 0.0, 0.0]);
        assert!((g[0] - stats.energy_std / stats.feature_std[0]).abs() < 1e-15);
        assert_eq!(&g[1..], &[0.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn round_trip(xs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 2..40)) {
            let d = Dataset::new(
                xs.iter()
                    .map(|&(a, b, e)| Sample { features: vec![a, b], energy: e, forces: Some(vec![a]) })
                    .collect(),
            )
            .unwrap();
            prop_assume!(DatasetStats::compute(&d).map(|s| s.kept.len() == 2).unwrap_or(false));
            let (norm, stats) = normalize(&d).unwrap();
            let back = denormalize(&norm, &stats).unwrap();
            for (a, b) in d.samples().iter().zip(back.samples()) {
                prop_assert!((a.energy - b.energy).abs() <= 1e-12 * a.energy.abs().max(1.0));
                for (x, y) in a.features.iter().zip(&b.features) {
                    prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                }
                prop_assert_eq!(&a.forces, &b.forces);
            }
        }
    }
}
