use serde::{Deserialize, Serialize};

use super::dense::{train_minibatch, Activation, Network};
use super::{check_dim, rows_and_labels, ModelError};
use crate::dataset::{rng, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 16,
            lr: 0.01,
            epochs: 60,
            batch_size: 32,
        }
    }
}

/// One ReLU hidden layer and a sigmoid output trained on binary cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub network: Network,
    pub params: MlpParams,
    pub seed: u64,
}

impl Mlp {
    pub fn init(n_features: usize, params: MlpParams, seed: u64) -> Self {
        let network = Network::new(
            &[n_features, params.hidden, 1],
            &[Activation::Relu, Activation::Sigmoid],
            &mut rng(seed),
        );
        Mlp {
            network,
            params,
            seed,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.network.input_dim(), x.len())?;
        Ok(self.network.forward(x)[0])
    }

    /// Mean binary cross-entropy over `(x, y)` and its gradient with respect to
    /// the flat parameter vector.
    pub fn loss_and_grad(&self, x: &[&[f64]], y: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.network.n_params()];
        let mut loss = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            let trace = self.network.trace(xi);
            let p = trace.output()[0];
            loss -= yi * p.ln() + (1.0 - yi) * (1.0 - p).ln();
            self.network.backward(&trace, vec![p - yi], &mut grad);
        }
        let n = x.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }
}

pub fn train_mlp(ds: &LabeledDataset, params: MlpParams, seed: u64) -> Result<Mlp, ModelError> {
    if params.hidden == 0 || params.batch_size == 0 {
        return Err(ModelError::InvalidConfig(
            "hidden and batch_size must be >= 1".into(),
        ));
    }
    if !(params.lr.is_finite() && params.lr > 0.0) {
        return Err(ModelError::InvalidConfig(format!(
            "lr must be > 0, got {}",
            params.lr
        )));
    }
    if ds.is_empty() {
        return Err(ModelError::InvalidConfig(
            "mlp needs a non-empty dataset".into(),
        ));
    }
    let (x, y) = rows_and_labels(ds);
    let mut mlp = Mlp::init(ds.feature_names.len(), params, seed);
    // Initialization and shuffling draw from separate streams.
    let mut order_rng = rng(seed ^ 0x005E_ED0F_0DE5);
    train_minibatch(
        &mut mlp.network,
        x.len(),
        |i| x[i].to_vec(),
        params.epochs,
        params.batch_size,
        params.lr,
        &mut order_rng,
        |trace, i| vec![trace.output()[0] - y[i]],
    );
    Ok(mlp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Label, Provenance, Row};
    use crate::manifest::FeatureVector;

    fn ds() -> LabeledDataset {
        let rows = (0..80)
            .map(|i| {
                let a = (i * 13 % 80) as f64 / 80.0;
                let b = (i * 29 % 80) as f64 / 80.0;
                Row {
                    features: FeatureVector(vec![a, b]),
                    label: Label::from_fraud(a + b > 1.0),
                }
            })
            .collect();
        LabeledDataset::new(vec!["a".into(), "b".into()], rows, Provenance::Synthetic).unwrap()
    }

    #[test]
    fn learns_linear_boundary_and_stays_in_range() {
        let d = ds();
        let m = train_mlp(
            &d,
            MlpParams {
                epochs: 200,
                ..Default::default()
            },
            4,
        )
        .unwrap();
        let mut hits = 0;
        for r in &d.rows {
            let p = m.predict(r.features.as_slice()).unwrap();
            assert!(p > 0.0 && p < 1.0);
            hits += ((p > 0.5) == r.label.is_fraud()) as usize;
        }
        assert!(hits as f64 / d.len() as f64 > 0.9);
    }

    #[test]
    fn deterministic() {
        let d = ds();
        let p = MlpParams {
            epochs: 5,
            ..Default::default()
        };
        assert_eq!(train_mlp(&d, p, 8).unwrap(), train_mlp(&d, p, 8).unwrap());
        assert_ne!(train_mlp(&d, p, 8).unwrap(), train_mlp(&d, p, 9).unwrap());
    }

    #[test]
    fn shapes_chain() {
        let m = Mlp::init(35, MlpParams::default(), 1);
        assert!(m.network.shapes_chain());
        assert_eq!(m.network.input_dim(), 35);
        assert_eq!(m.network.output_dim(), 1);
        assert!(m.predict(&[0.0; 3]).is_err());
    }
}
