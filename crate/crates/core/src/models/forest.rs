use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{fit, Criterion};
use super::{check_dim, rows_and_labels, DecisionTree, ModelError, TreeParams};
use crate::dataset::{rng, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    /// Features drawn per tree; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 30,
            bootstrap: true,
            max_features: None,
            tree: TreeParams {
                max_depth: 8,
                min_samples_leaf: 1,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    /// Sorted feature indices each tree was allowed to split on.
    pub feature_subsets: Vec<Vec<usize>>,
    pub params: ForestParams,
    pub seed: u64,
}

pub fn train_forest(
    ds: &LabeledDataset,
    params: ForestParams,
    seed: u64,
) -> Result<RandomForest, ModelError> {
    if params.n_trees == 0 {
        return Err(ModelError::InvalidConfig("n_trees must be >= 1".into()));
    }
    if ds.is_empty() {
        return Err(ModelError::InvalidConfig(
            "forest needs a non-empty dataset".into(),
        ));
    }
    let (x, y) = rows_and_labels(ds);
    let n = x.len();
    let d = ds.feature_names.len();
    let k = match params.max_features {
        Some(k) if k == 0 || k > d => {
            return Err(ModelError::InvalidConfig(format!(
                "max_features must be in 1..={d}, got {k}"
            )))
        }
        Some(k) => k,
        None => (d as f64).sqrt().ceil() as usize,
    };

    let mut rng = rng(seed);
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut subsets = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let mut subset: Vec<usize> = sample(&mut rng, d, k).into_vec();
        subset.sort_unstable();
        let (bx, by): (Vec<&[f64]>, Vec<f64>) = if params.bootstrap {
            (0..n)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    (x[i], y[i])
                })
                .unzip()
        } else {
            (x.clone(), y.clone())
        };
        trees.push(fit(&bx, &by, Some(&subset), params.tree, Criterion::Gini)?);
        subsets.push(subset);
    }
    Ok(RandomForest {
        trees,
        feature_subsets: subsets,
        params,
        seed,
    })
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    /// Arithmetic mean of the member trees' outputs.
    pub fn predict(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.n_features(), x.len())?;
        Ok(self.trees.iter().map(|t| t.eval(x)).sum::<f64>() / self.trees.len() as f64)
    }

    pub fn tree_outputs(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        check_dim(self.n_features(), x.len())?;
        Ok(self.trees.iter().map(|t| t.eval(x)).collect())
    }
}
