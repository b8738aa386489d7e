//! CART trees: Gini classification trees and variance-reduction regression trees.
//!
//! Candidate thresholds are midpoints between consecutive distinct sorted values.
//! Among equally good splits the lowest feature index wins, then the lowest
//! threshold. Samples with `x[feature] <= threshold` go left.

use serde::{Deserialize, Serialize};

use super::{check_dim, rows_and_labels, ModelError};
use crate::dataset::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 6,
            min_samples_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// `value` is the fraud fraction for classification trees and the mean
    /// target for regression trees.
    Leaf { value: f64, sample_count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub params: TreeParams,
    /// `nodes[0]` is the root.
    pub nodes: Vec<Node>,
}

/// A chosen split and its impurity decrease.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

pub fn gini(fraud: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = fraud as f64 / n as f64;
    let q = (n - fraud) as f64 / n as f64;
    1.0 - p * p - q * q
}

/// Gini decrease of splitting `(n, fraud)` into left/right counts.
pub fn gini_gain(n: usize, fraud: usize, nl: usize, fl: usize) -> f64 {
    let nr = n - nl;
    let fr = fraud - fl;
    gini(fraud, n) - (nl as f64 / n as f64) * gini(fl, nl) - (nr as f64 / n as f64) * gini(fr, nr)
}

/// Exact ordering key for Gini splits: maximizing the gain is maximizing
/// `(a/nl + b/nr)` with `a = fl² + ll²`, `b = fr² + lr²`. Kept as a fraction so
/// ties are detected without rounding.
#[derive(Clone, Copy)]
struct GiniKey {
    num: u128,
    den: u128,
}

impl GiniKey {
    fn new(nl: usize, fl: usize, nr: usize, fr: usize) -> Self {
        let (nl, fl, nr, fr) = (nl as u128, fl as u128, nr as u128, fr as u128);
        let a = fl * fl + (nl - fl) * (nl - fl);
        let b = fr * fr + (nr - fr) * (nr - fr);
        GiniKey {
            num: a * nr + b * nl,
            den: nl * nr,
        }
    }

    fn beats(&self, other: &GiniKey) -> bool {
        self.num * other.den > other.num * self.den
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Criterion {
    Gini,
    Variance,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = (a + b) / 2.0;
    // Adjacent floats can round the midpoint up onto `b`.
    if m >= b {
        a
    } else {
        m
    }
}

/// Best split of the samples `idx` over `features`, or `None` when no split
/// leaves `min_leaf` samples on both sides. Gini splits are accepted at zero gain;
/// variance splits need a strictly positive one.
pub(crate) fn best_split(
    x: &[&[f64]],
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
    criterion: Criterion,
) -> Option<SplitChoice> {
    let n = idx.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let total_fraud = idx.iter().filter(|&&i| y[i] > 0.5).count();
    let total_sum: f64 = idx.iter().map(|&i| y[i]).sum();

    let mut best: Option<(SplitChoice, GiniKey, f64)> = None;
    let mut sorted = idx.to_vec();
    for &f in features {
        sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut fl = 0usize;
        let mut sum_l = 0.0;
        for pos in 0..n - 1 {
            let i = sorted[pos];
            if y[i] > 0.5 {
                fl += 1;
            }
            sum_l += y[i];
            let nl = pos + 1;
            let nr = n - nl;
            let (a, b) = (x[i][f], x[sorted[pos + 1]][f]);
            if a == b || nl < min_leaf || nr < min_leaf {
                continue;
            }
            let threshold = midpoint(a, b);
            match criterion {
                Criterion::Gini => {
                    let key = GiniKey::new(nl, fl, nr, total_fraud - fl);
                    if best.as_ref().is_none_or(|(_, k, _)| key.beats(k)) {
                        let gain = gini_gain(n, total_fraud, nl, fl);
                        best = Some((
                            SplitChoice {
                                feature: f,
                                threshold,
                                gain,
                            },
                            key,
                            0.0,
                        ));
                    }
                }
                Criterion::Variance => {
                    let sum_r = total_sum - sum_l;
                    let score = sum_l * sum_l / nl as f64 + sum_r * sum_r / nr as f64;
                    let gain = (score - total_sum * total_sum / n as f64) / n as f64;
                    if gain > 0.0 && best.as_ref().is_none_or(|(_, _, s)| score > *s) {
                        let key = GiniKey { num: 0, den: 1 };
                        best = Some((
                            SplitChoice {
                                feature: f,
                                threshold,
                                gain,
                            },
                            key,
                            score,
                        ));
                    }
                }
            }
        }
    }
    best.map(|(s, _, _)| s)
}

struct Builder<'a> {
    x: &'a [&'a [f64]],
    y: &'a [f64],
    features: &'a [usize],
    params: TreeParams,
    criterion: Criterion,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&self, idx: &[usize]) -> Node {
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        Node::Leaf {
            value,
            sample_count: idx.len(),
        }
    }

    fn is_pure(&self, idx: &[usize]) -> bool {
        let first = self.y[idx[0]];
        idx.iter().all(|&i| self.y[i] == first)
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: 0.0,
            sample_count: 0,
        });
        let split = if depth >= self.params.max_depth || self.is_pure(&idx) {
            None
        } else {
            best_split(
                self.x,
                self.y,
                &idx,
                self.features,
                self.params.min_samples_leaf,
                self.criterion,
            )
        };
        let Some(split) = split else {
            self.nodes[slot] = self.leaf(&idx);
            return slot;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        slot
    }
}

fn validate(x: &[&[f64]], y: &[f64], params: &TreeParams) -> Result<usize, ModelError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(ModelError::InvalidConfig(
            "tree needs a non-empty dataset with one target per row".into(),
        ));
    }
    if params.min_samples_leaf == 0 {
        return Err(ModelError::InvalidConfig(
            "min_samples_leaf must be >= 1".into(),
        ));
    }
    if x.len() < params.min_samples_leaf {
        return Err(ModelError::InvalidConfig(format!(
            "{} rows cannot fill a leaf of min_samples_leaf {}",
            x.len(),
            params.min_samples_leaf
        )));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(ModelError::InvalidConfig("ragged feature rows".into()));
    }
    Ok(d)
}

pub(crate) fn fit(
    x: &[&[f64]],
    y: &[f64],
    features: Option<&[usize]>,
    params: TreeParams,
    criterion: Criterion,
) -> Result<DecisionTree, ModelError> {
    let d = validate(x, y, &params)?;
    let all: Vec<usize> = (0..d).collect();
    let features = features.unwrap_or(&all);
    if features.iter().any(|&f| f >= d) {
        return Err(ModelError::InvalidConfig(
            "feature subset index out of range".into(),
        ));
    }
    let mut b = Builder {
        x,
        y,
        features,
        params,
        criterion,
        nodes: Vec::new(),
    };
    b.build((0..x.len()).collect(), 0);
    Ok(DecisionTree {
        n_features: d,
        params,
        nodes: b.nodes,
    })
}

/// Gini CART classifier on 0/1 labels (`y > 0.5` is fraud).
pub fn fit_tree(x: &[&[f64]], y: &[f64], params: TreeParams) -> Result<DecisionTree, ModelError> {
    fit(x, y, None, params, Criterion::Gini)
}

pub fn train_tree(ds: &LabeledDataset, params: TreeParams) -> Result<DecisionTree, ModelError> {
    let (x, y) = rows_and_labels(ds);
    fit_tree(&x, &y, params)
}

/// Root split a Gini tree would choose on this data.
pub fn root_split(x: &[&[f64]], y: &[f64], min_samples_leaf: usize) -> Option<SplitChoice> {
    let idx: Vec<usize> = (0..x.len()).collect();
    let features: Vec<usize> = (0..x.first().map_or(0, |r| r.len())).collect();
    best_split(x, y, &idx, &features, min_samples_leaf, Criterion::Gini)
}

impl DecisionTree {
    /// Leaf value reached by `x` with no dimension check.
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                Node::Leaf { value, .. } => return *value,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, ModelError> {
        check_dim(self.n_features, x.len())?;
        Ok(self.eval(x))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf {
                value,
                sample_count,
            } => Some((*value, *sample_count)),
            Node::Split { .. } => None,
        })
    }

    /// Single-leaf tree predicting `value` everywhere.
    pub fn constant(n_features: usize, value: f64) -> Self {
        DecisionTree {
            n_features,
            params: TreeParams {
                max_depth: 0,
                min_samples_leaf: 1,
            },
            nodes: vec![Node::Leaf {
                value,
                sample_count: 1,
            }],
        }
    }

    /// One split on `feature` at `threshold`.
    pub fn stump(n_features: usize, feature: usize, threshold: f64, left: f64, right: f64) -> Self {
        DecisionTree {
            n_features,
            params: TreeParams {
                max_depth: 1,
                min_samples_leaf: 1,
            },
            nodes: vec![
                Node::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf {
                    value: left,
                    sample_count: 1,
                },
                Node::Leaf {
                    value: right,
                    sample_count: 1,
                },
            ],
        }
    }
}
