use serde::{Deserialize, Serialize};

use super::{DatasetError, LabeledDataset};
use crate::manifest::FeatureVector;

/// Per-feature min-max scaler. Fit on the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_normalizer(train: &LabeledDataset) -> Result<Normalizer, DatasetError> {
    let first = train.rows.first().ok_or_else(|| {
        DatasetError::InvalidConfig("cannot fit a normalizer on an empty dataset".into())
    })?;
    let mut min = first.features.0.clone();
    let mut max = first.features.0.clone();
    for row in &train.rows[1..] {
        for (j, &v) in row.features.as_slice().iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(Normalizer { min, max })
}

impl Normalizer {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// `(x - min) / (max - min)` clipped to [0, 1]; constant features map to 0.5.
    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        FeatureVector(self.apply_slice(v.as_slice()))
    }

    pub fn apply_slice(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| {
                if hi > lo {
                    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect()
    }
}
