use serde::{Deserialize, Serialize};
use tracing::warn;

use super::dense::sigmoid;
use super::tree::{fit, Criterion};
use super::{check_dim, rows_and_labels, DecisionTree, ModelError, TreeParams};
use crate::dataset::LabeledDataset;

const BASE_RATE_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbmParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            n_rounds: 50,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub tree: DecisionTree,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub n_features: usize,
    pub base_log_odds: f64,
    pub stages: Vec<Stage>,
}

/// Mean binary cross-entropy of probabilities `p` against 0/1 labels.
pub fn log_loss(p: &[f64], y: &[f64]) -> f64 {
    let eps = 1e-15;
    p.iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(eps, 1.0 - eps);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / p.len() as f64
}

pub fn train_gbm(ds: &LabeledDataset, params: GbmParams) -> Result<GradientBoosting, ModelError> {
    train_gbm_traced(ds, params).map(|(g, _)| g)
}

/// Trains and also returns the training log-loss before the first round and
/// after every round.
pub fn train_gbm_traced(
    ds: &LabeledDataset,
    params: GbmParams,
) -> Result<(GradientBoosting, Vec<f64>), ModelError> {
    if !(params.learning_rate.is_finite() && params.learning_rate >= 0.0) {
        return Err(ModelError::InvalidConfig(format!(
            "learning_rate must be finite and >= 0, got {}",
            params.learning_rate
        )));
    }
    if params.min_samples_leaf == 0 {
        return Err(ModelError::InvalidConfig(
            "min_samples_leaf must be >= 1".into(),
        ));
    }
    if ds.is_empty() {
        return Err(ModelError::InvalidConfig(
            "gbm needs a non-empty dataset".into(),
        ));
    }
    let (x, y) = rows_and_labels(ds);
    let n = y.len() as f64;
    let raw_rate = y.iter().sum::<f64>() / n;
    if raw_rate == 0.0 || raw_rate == 1.0 {
        warn!(
            rate = raw_rate,
            "degenerate base rate: all labels identical, clamping"
        );
    }
    let rate = raw_rate.clamp(BASE_RATE_CLAMP, 1.0 - BASE_RATE_CLAMP);
    let base = (rate / (1.0 - rate)).ln();

    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
    };
    let mut f = vec![base; x.len()];
    let probs = |f: &[f64]| f.iter().map(|&v| sigmoid(v)).collect::<Vec<_>>();
    let mut losses = vec![log_loss(&probs(&f), &y)];
    let mut stages = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let residual: Vec<f64> = f
            .iter()
            .zip(&y)
            .map(|(&fi, &yi)| yi - sigmoid(fi))
            .collect();
        let tree = fit(&x, &residual, None, tree_params, Criterion::Variance)?;
        for (fi, xi) in f.iter_mut().zip(&x) {
            *fi += params.learning_rate * tree.eval(xi);
        }
        losses.push(log_loss(&probs(&f), &y));
        stages.push(Stage {
            tree,
            learning_rate: params.learning_rate,
        });
    }
    Ok((
        GradientBoosting {
            n_features: ds.feature_names.len(),
            base_log_odds: base,
            stages,
        },
        losses,
    ))
}

impl GradientBoosting {
    pub fn decision(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.n_features, x.len())?;
        Ok(self.base_log_odds
            + self
                .stages
                .iter()
                .map(|s| s.learning_rate * s.tree.eval(x))
                .sum::<f64>())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.decision(x).map(sigmoid)
    }
}
