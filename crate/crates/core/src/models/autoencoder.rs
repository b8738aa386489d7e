use serde::{Deserialize, Serialize};

use super::dense::{percentile, train_minibatch, Activation, Network};
use super::{check_dim, ModelError};
use crate::dataset::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeParams {
    pub bottleneck: usize,
    pub encoder_activation: Activation,
    pub decoder_activation: Activation,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub threshold_percentile: f64,
}

impl Default for AeParams {
    fn default() -> Self {
        AeParams {
            bottleneck: 4,
            encoder_activation: Activation::Tanh,
            decoder_activation: Activation::Sigmoid,
            lr: 0.01,
            epochs: 60,
            batch_size: 32,
            threshold_percentile: 95.0,
        }
    }
}

/// `d -> bottleneck -> d` reconstruction network fit on legitimate rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autoencoder {
    pub network: Network,
    pub anomaly_threshold: f64,
    pub params: AeParams,
    pub seed: u64,
}

impl Autoencoder {
    pub fn init(n_features: usize, params: AeParams, seed: u64) -> Self {
        let network = Network::new(
            &[n_features, params.bottleneck, n_features],
            &[params.encoder_activation, params.decoder_activation],
            &mut rng(seed),
        );
        Autoencoder {
            network,
            anomaly_threshold: 0.0,
            params,
            seed,
        }
    }

    /// Mean squared reconstruction error.
    pub fn anomaly_score(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.network.input_dim(), x.len())?;
        Ok(mse(&self.network.forward(x), x))
    }

    pub fn is_anomalous(&self, x: &[f64]) -> Result<bool, ModelError> {
        Ok(self.anomaly_score(x)? > self.anomaly_threshold)
    }

    /// Mean anomaly score over `x` and its gradient with respect to the flat
    /// parameter vector.
    pub fn loss_and_grad(&self, x: &[&[f64]]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.network.n_params()];
        let mut loss = 0.0;
        for xi in x {
            let trace = self.network.trace(xi);
            loss += mse(trace.output(), xi);
            self.network
                .backward(&trace, self.output_delta(&trace, xi), &mut grad);
        }
        let n = x.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    fn output_delta(&self, trace: &super::dense::Trace, x: &[f64]) -> Vec<f64> {
        output_delta(self.params.decoder_activation, trace, x)
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len() as f64
}

fn output_delta(act: Activation, trace: &super::dense::Trace, x: &[f64]) -> Vec<f64> {
    let d = x.len() as f64;
    trace
        .output()
        .iter()
        .zip(trace.output_pre())
        .zip(x)
        .map(|((&o, &z), &xi)| 2.0 * (o - xi) / d * act.derivative(z, o))
        .collect()
}

pub fn train_autoencoder(
    legit_rows: &[&[f64]],
    params: AeParams,
    seed: u64,
) -> Result<Autoencoder, ModelError> {
    let Some(first) = legit_rows.first() else {
        return Err(ModelError::InvalidConfig(
            "autoencoder needs at least one legitimate row".into(),
        ));
    };
    if params.bottleneck == 0 || params.batch_size == 0 {
        return Err(ModelError::InvalidConfig(
            "bottleneck and batch_size must be >= 1".into(),
        ));
    }
    if !(params.lr.is_finite() && params.lr > 0.0) {
        return Err(ModelError::InvalidConfig(format!(
            "lr must be > 0, got {}",
            params.lr
        )));
    }
    if !(0.0..=100.0).contains(&params.threshold_percentile) {
        return Err(ModelError::InvalidConfig(format!(
            "threshold_percentile must be in [0, 100], got {}",
            params.threshold_percentile
        )));
    }
    let d = first.len();
    if legit_rows.iter().any(|r| r.len() != d) {
        return Err(ModelError::InvalidConfig("ragged feature rows".into()));
    }
    let mut ae = Autoencoder::init(d, params, seed);
    let mut order_rng = rng(seed ^ 0x005E_ED0F_0DE5);
    let act = params.decoder_activation;
    train_minibatch(
        &mut ae.network,
        legit_rows.len(),
        |i| legit_rows[i].to_vec(),
        params.epochs,
        params.batch_size,
        params.lr,
        &mut order_rng,
        |trace, i| output_delta(act, trace, legit_rows[i]),
    );
    let errors: Vec<f64> = legit_rows
        .iter()
        .map(|r| mse(&ae.network.forward(r), r))
        .collect();
    ae.anomaly_threshold = percentile(&errors, params.threshold_percentile);
    Ok(ae)
}
