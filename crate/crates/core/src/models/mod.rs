//! The six-model ensemble: decision tree, random forest, gradient boosting,
//! linear SVM, multilayer perceptron and autoencoder.
//!
//! All trainers expect normalized inputs and are pure functions of their data,
//! parameters and seed.

mod autoencoder;
pub mod dense;
mod ensemble;
mod forest;
mod gbm;
mod mlp;
mod svm;
mod tree;

pub use autoencoder::{train_autoencoder, AeParams, Autoencoder};
pub use dense::{sigmoid, Activation};
pub use ensemble::{
    ensemble_predict, load_bundle, save_bundle, train_ensemble, AggregationWeights, Ensemble,
    EnsembleParams, ModelOutputs, Resample, BUNDLE_FORMAT_VERSION,
};
pub use forest::{train_forest, ForestParams, RandomForest};
pub use gbm::{log_loss, train_gbm, train_gbm_traced, GbmParams, GradientBoosting};
pub use mlp::{train_mlp, Mlp, MlpParams};
pub use svm::{train_svm, LinearSvm, SvmParams};
pub use tree::{
    fit_tree, gini, gini_gain, root_split, train_tree, DecisionTree, Node, SplitChoice, TreeParams,
};

use thiserror::Error;

use crate::dataset::DatasetError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("bundle error: {0}")]
    Bundle(String),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { expected, got })
    }
}

/// Per-model seed derived from the master seed.
pub(crate) fn sub_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rows_and_labels(ds: &crate::dataset::LabeledDataset) -> (Vec<&[f64]>, Vec<f64>) {
    (
        ds.rows.iter().map(|r| r.features.as_slice()).collect(),
        ds.rows.iter().map(|r| r.label.as_f64()).collect(),
    )
}
