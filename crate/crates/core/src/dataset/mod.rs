//! Labeled feature datasets: generation, loading, splitting, scaling and rebalancing.

mod csv_io;
mod normalize;
mod resample;
mod split;
mod synthetic;

pub use csv_io::{load_csv, read_csv, write_csv};
pub use normalize::{fit_normalizer, Normalizer};
pub use resample::{random_undersample, smote, smote_traced, SmoteOrigin};
pub use split::stratified_split;
pub use synthetic::{generate_synthetic, SyntheticConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Legit = 0,
    Fraud = 1,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }

    pub fn is_fraud(self) -> bool {
        self == Label::Fraud
    }

    pub fn from_fraud(fraud: bool) -> Self {
        if fraud {
            Label::Fraud
        } else {
            Label::Legit
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub features: FeatureVector,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Row>,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("schema error in {path}: {reason}")]
    SchemaError { path: String, reason: String },
    #[error("parse error in {path} at row {row}, column {column}: {reason}")]
    ParseError {
        path: String,
        row: usize,
        column: String,
        reason: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LabeledDataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Row>,
        provenance: Provenance,
    ) -> Result<Self, DatasetError> {
        let mut seen = std::collections::HashSet::new();
        for n in &feature_names {
            if !seen.insert(n.as_str()) {
                return Err(DatasetError::InvalidConfig(format!(
                    "duplicate feature name {n}"
                )));
            }
        }
        if let Some((i, r)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.features.len() != feature_names.len())
        {
            return Err(DatasetError::InvalidConfig(format!(
                "row {i} has {} features, expected {}",
                r.features.len(),
                feature_names.len()
            )));
        }
        Ok(LabeledDataset {
            feature_names,
            rows,
            provenance,
        })
    }

    /// Same names and provenance, different rows.
    pub fn with_rows(&self, rows: Vec<Row>) -> Self {
        LabeledDataset {
            feature_names: self.feature_names.clone(),
            rows,
            provenance: self.provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn count(&self, label: Label) -> usize {
        self.rows.iter().filter(|r| r.label == label).count()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn features(&self) -> Vec<&[f64]> {
        self.rows.iter().map(|r| r.features.as_slice()).collect()
    }

    /// Rows with the given label, in order.
    pub fn filter(&self, label: Label) -> Self {
        self.with_rows(
            self.rows
                .iter()
                .filter(|r| r.label == label)
                .cloned()
                .collect(),
        )
    }

    /// Applies `norm` to every row.
    pub fn normalized(&self, norm: &Normalizer) -> Self {
        self.with_rows(
            self.rows
                .iter()
                .map(|r| Row {
                    features: norm.apply(&r.features),
                    label: r.label,
                })
                .collect(),
        )
    }

    /// Minority and majority labels; ties make fraud the minority.
    pub fn minority_majority(&self) -> (Label, Label) {
        if self.count(Label::Fraud) <= self.count(Label::Legit) {
            (Label::Fraud, Label::Legit)
        } else {
            (Label::Legit, Label::Fraud)
        }
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
