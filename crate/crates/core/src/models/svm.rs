use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dense::sigmoid;
use super::{check_dim, rows_and_labels, ModelError};
use crate::dataset::{rng, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    /// Project onto the ball of radius `1/sqrt(lambda)` after each step.
    pub project: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-3,
            epochs: 30,
            project: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

impl LinearSvm {
    pub fn zeros(n_features: usize, lambda: f64) -> Self {
        LinearSvm {
            weights: vec![0.0; n_features],
            bias: 0.0,
            lambda,
        }
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.weights.len(), x.len())?;
        Ok(self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias)
    }

    /// `sigmoid(w·x + b)`; a probability proxy, not a calibrated one.
    pub fn predict(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.decision(x).map(sigmoid)
    }
}

/// One Pegasos step at iteration `t` (1-based) on sample `(x, y)`, `y = ±1`.
/// The bias is the last coordinate of `w` and `x` is implicitly extended by 1.
fn pegasos_step(w: &mut [f64], x: &[f64], y: f64, lambda: f64, t: usize, project: bool) {
    let eta = 1.0 / (lambda * t as f64);
    let d = x.len();
    let margin = y * (w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]);
    let shrink = 1.0 - eta * lambda;
    for wi in w.iter_mut() {
        *wi *= shrink;
    }
    if margin < 1.0 {
        for (wi, xi) in w[..d].iter_mut().zip(x) {
            *wi += eta * y * xi;
        }
        w[d] += eta * y;
    }
    if project {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = 1.0 / lambda.sqrt();
        if norm > radius {
            let s = radius / norm;
            for wi in w.iter_mut() {
                *wi *= s;
            }
        }
    }
}

/// Pegasos stochastic subgradient descent on hinge loss plus `(λ/2)‖w‖²`.
/// Samples are visited in a fresh seeded permutation every epoch.
pub fn train_svm(
    ds: &LabeledDataset,
    params: SvmParams,
    seed: u64,
) -> Result<LinearSvm, ModelError> {
    if !(params.lambda.is_finite() && params.lambda > 0.0) {
        return Err(ModelError::InvalidConfig(format!(
            "lambda must be > 0, got {}",
            params.lambda
        )));
    }
    let (x, y) = rows_and_labels(ds);
    let n_fraud = y.iter().filter(|&&v| v > 0.5).count();
    if n_fraud == 0 || n_fraud == y.len() {
        return Err(ModelError::InvalidConfig(
            "svm needs both classes present".into(),
        ));
    }
    let d = ds.feature_names.len();
    let mut w = vec![0.0; d + 1];
    let mut rng = rng(seed);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut t = 0;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let label = if y[i] > 0.5 { 1.0 } else { -1.0 };
            pegasos_step(&mut w, x[i], label, params.lambda, t, params.project);
        }
    }
    let bias = w.pop().expect("bias slot");
    Ok(LinearSvm {
        weights: w,
        bias,
        lambda: params.lambda,
    })
}
