//! Ensemble training, prediction and the JSON model bundle.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    sub_seed, train_autoencoder, train_forest, train_gbm, train_mlp, train_svm, train_tree,
    AeParams, Autoencoder, DecisionTree, ForestParams, GbmParams, GradientBoosting, LinearSvm, Mlp,
    MlpParams, ModelError, RandomForest, SvmParams, TreeParams,
};
use crate::dataset::{
    fit_normalizer, random_undersample, smote, Label, LabeledDataset, Normalizer,
};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOutputs {
    pub tree: f64,
    pub forest: f64,
    pub gbm: f64,
    pub svm: f64,
    pub mlp: f64,
    pub anomaly_score: f64,
    pub anomaly_flag: bool,
}

impl ModelOutputs {
    /// The five probabilities in weight order.
    pub fn probabilities(&self) -> [f64; 5] {
        [self.tree, self.forest, self.gbm, self.svm, self.mlp]
    }
}

/// Weights of the five probability models in the aggregate score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationWeights {
    pub tree: f64,
    pub forest: f64,
    pub gbm: f64,
    pub svm: f64,
    pub mlp: f64,
}

impl Default for AggregationWeights {
    fn default() -> Self {
        AggregationWeights {
            tree: 0.15,
            forest: 0.25,
            gbm: 0.25,
            svm: 0.15,
            mlp: 0.2,
        }
    }
}

impl AggregationWeights {
    pub fn uniform() -> Self {
        AggregationWeights {
            tree: 0.2,
            forest: 0.2,
            gbm: 0.2,
            svm: 0.2,
            mlp: 0.2,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.tree, self.forest, self.gbm, self.svm, self.mlp]
    }

    /// Every weight finite and non-negative, sum within 1e-9 of 1.
    pub fn validate(&self) -> Result<(), String> {
        let w = self.as_array();
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(format!("weights must be finite and >= 0, got {w:?}"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("weights must sum to 1, got {sum}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resample {
    #[default]
    None,
    Undersample,
    Smote,
}

impl std::str::FromStr for Resample {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Resample::None),
            "undersample" => Ok(Resample::Undersample),
            "smote" => Ok(Resample::Smote),
            other => Err(format!(
                "unknown resample strategy {other:?}; expected none, undersample or smote"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleParams {
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub gbm: GbmParams,
    pub svm: SvmParams,
    pub mlp: MlpParams,
    pub autoencoder: AeParams,
    pub weights: AggregationWeights,
    pub resample: Resample,
    pub smote_k: usize,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams {
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            gbm: GbmParams::default(),
            svm: SvmParams::default(),
            mlp: MlpParams::default(),
            autoencoder: AeParams::default(),
            weights: AggregationWeights::default(),
            resample: Resample::None,
            smote_k: 5,
        }
    }
}

/// The trained model bundle. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ensemble {
    pub format_version: u32,
    pub manifest: Vec<String>,
    pub normalizer: Normalizer,
    pub tree: DecisionTree,
    pub forest: RandomForest,
    pub gbm: GradientBoosting,
    pub svm: LinearSvm,
    pub mlp: Mlp,
    pub autoencoder: Autoencoder,
    pub weights: AggregationWeights,
    /// Raw-scale per-feature training medians used for explanations.
    pub medians: Vec<f64>,
    pub training_seed: u64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Fits the normalizer on `train`, rebalances per `params.resample`, then trains
/// all six models. The autoencoder sees only the legitimate rows of the
/// un-resampled training set.
pub fn train_ensemble(
    train: &LabeledDataset,
    params: &EnsembleParams,
    seed: u64,
) -> Result<Ensemble, ModelError> {
    params
        .weights
        .validate()
        .map_err(ModelError::InvalidConfig)?;
    if train.count(Label::Fraud) == 0 || train.count(Label::Legit) == 0 {
        return Err(ModelError::InvalidConfig(
            "training set needs both classes".into(),
        ));
    }
    let d = train.feature_names.len();
    let normalizer = fit_normalizer(train)?;
    let medians = (0..d)
        .map(|j| median(train.rows.iter().map(|r| r.features.get(j)).collect()))
        .collect();
    let normalized = train.normalized(&normalizer);
    let fit_set = match params.resample {
        Resample::None => normalized.clone(),
        Resample::Undersample => random_undersample(&normalized, sub_seed(seed, 1))?,
        Resample::Smote => smote(&normalized, params.smote_k, sub_seed(seed, 2))?,
    };
    let legit = normalized.filter(Label::Legit);
    let legit_rows: Vec<&[f64]> = legit.rows.iter().map(|r| r.features.as_slice()).collect();

    let (tree, forest, gbm, svm, mlp, autoencoder) = std::thread::scope(|s| {
        let fs = &fit_set;
        let tree = s.spawn(move || train_tree(fs, params.tree));
        let forest = s.spawn(move || train_forest(fs, params.forest, sub_seed(seed, 3)));
        let gbm = s.spawn(move || train_gbm(fs, params.gbm));
        let svm = s.spawn(move || train_svm(fs, params.svm, sub_seed(seed, 4)));
        let mlp = s.spawn(move || train_mlp(fs, params.mlp, sub_seed(seed, 5)));
        let ae = train_autoencoder(&legit_rows, params.autoencoder, sub_seed(seed, 6));
        (
            join(tree),
            join(forest),
            join(gbm),
            join(svm),
            join(mlp),
            ae,
        )
    });

    Ok(Ensemble {
        format_version: BUNDLE_FORMAT_VERSION,
        manifest: train.feature_names.clone(),
        normalizer,
        tree: tree?,
        forest: forest?,
        gbm: gbm?,
        svm: svm?,
        mlp: mlp?,
        autoencoder: autoencoder?,
        weights: params.weights,
        medians,
        training_seed: seed,
    })
}

fn join<T>(h: std::thread::ScopedJoinHandle<'_, T>) -> T {
    h.join().expect("trainer thread panicked")
}

/// Normalizes the raw vector `x` and runs every model in staged order: tree and
/// forest, then GBM and MLP, then SVM and autoencoder.
pub fn ensemble_predict(e: &Ensemble, x: &[f64]) -> Result<ModelOutputs, ModelError> {
    super::check_dim(e.manifest.len(), x.len())?;
    let z = e.normalizer.apply_slice(x);
    let tree = e.tree.predict(&z)?;
    let forest = e.forest.predict(&z)?;
    let gbm = e.gbm.predict(&z)?;
    let mlp = e.mlp.predict(&z)?;
    let svm = e.svm.predict(&z)?;
    let anomaly_score = e.autoencoder.anomaly_score(&z)?;
    Ok(ModelOutputs {
        tree,
        forest,
        gbm,
        svm,
        mlp,
        anomaly_score,
        anomaly_flag: anomaly_score > e.autoencoder.anomaly_threshold,
    })
}

impl Ensemble {
    pub fn n_features(&self) -> usize {
        self.manifest.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let e: Ensemble =
            serde_json::from_str(text).map_err(|err| ModelError::Bundle(err.to_string()))?;
        e.check()?;
        Ok(e)
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.format_version != BUNDLE_FORMAT_VERSION {
            return Err(ModelError::Bundle(format!(
                "unsupported format_version {}; expected {BUNDLE_FORMAT_VERSION}",
                self.format_version
            )));
        }
        let d = self.manifest.len();
        let dims = [
            ("normalizer", self.normalizer.dim()),
            ("tree", self.tree.n_features),
            (
                "forest",
                self.forest.trees.first().map_or(0, |t| t.n_features),
            ),
            ("gbm", self.gbm.n_features),
            ("svm", self.svm.weights.len()),
            ("mlp", self.mlp.network.input_dim()),
            ("autoencoder", self.autoencoder.network.input_dim()),
            ("medians", self.medians.len()),
        ];
        if let Some((name, got)) = dims.iter().find(|(_, got)| *got != d) {
            return Err(ModelError::Bundle(format!(
                "{name} expects {got} features but the manifest has {d}"
            )));
        }
        if !self.mlp.network.shapes_chain() || !self.autoencoder.network.shapes_chain() {
            return Err(ModelError::Bundle(
                "network layer shapes do not chain".into(),
            ));
        }
        self.weights.validate().map_err(ModelError::Bundle)
    }
}

pub fn save_bundle(e: &Ensemble, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, e.to_json() + "\n")
        .map_err(|err| ModelError::Bundle(format!("writing {}: {err}", path.display())))
}

pub fn load_bundle(path: &Path) -> Result<Ensemble, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| ModelError::Bundle(format!("reading {}: {err}", path.display())))?;
    Ensemble::from_json(&text)
}
