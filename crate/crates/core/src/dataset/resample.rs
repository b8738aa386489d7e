use rand::seq::index::sample;
use rand::Rng;

use super::{rng, DatasetError, LabeledDataset, Row};
use crate::manifest::FeatureVector;

fn check_both_classes(ds: &LabeledDataset) -> Result<(), DatasetError> {
    let (minority, _) = ds.minority_majority();
    if ds.count(minority) == 0 {
        return Err(DatasetError::InvalidConfig(format!(
            "class {minority:?} is empty"
        )));
    }
    Ok(())
}

/// Samples the majority class without replacement down to the minority count.
/// Minority rows are untouched and original order is kept.
pub fn random_undersample(ds: &LabeledDataset, seed: u64) -> Result<LabeledDataset, DatasetError> {
    check_both_classes(ds)?;
    let (minority, majority) = ds.minority_majority();
    let target = ds.count(minority);
    let majority_idx: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.rows[i].label == majority)
        .collect();
    let mut keep = vec![true; ds.len()];
    if majority_idx.len() > target {
        for &i in &majority_idx {
            keep[i] = false;
        }
        let mut rng = rng(seed);
        for pos in sample(&mut rng, majority_idx.len(), target) {
            keep[majority_idx[pos]] = true;
        }
    }
    Ok(ds.with_rows(
        ds.rows
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(r, _)| r.clone())
            .collect(),
    ))
}

/// Where a synthetic SMOTE row came from: indices into the input dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoteOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// SMOTE with default provenance discarded. See [`smote_traced`].
pub fn smote(ds: &LabeledDataset, k: usize, seed: u64) -> Result<LabeledDataset, DatasetError> {
    smote_traced(ds, k, seed).map(|(d, _)| d)
}

/// Appends synthetic minority rows `x + u * (nn - x)`, `u ~ U(0,1)`, until the
/// classes are equal. `nn` is one of the `k` nearest minority neighbours of a
/// uniformly chosen minority row `x` (Euclidean, ties by row order); `k` is capped
/// at `minority - 1`.
pub fn smote_traced(
    ds: &LabeledDataset,
    k: usize,
    seed: u64,
) -> Result<(LabeledDataset, Vec<SmoteOrigin>), DatasetError> {
    if k == 0 {
        return Err(DatasetError::InvalidConfig("smote k must be >= 1".into()));
    }
    let (minority, majority) = ds.minority_majority();
    let min_idx: Vec<usize> = (0..ds.len())
        .filter(|&i| ds.rows[i].label == minority)
        .collect();
    if min_idx.len() < 2 {
        return Err(DatasetError::InvalidConfig(format!(
            "smote needs at least 2 minority rows, found {}",
            min_idx.len()
        )));
    }
    let k = k.min(min_idx.len() - 1);

    let neighbours: Vec<Vec<usize>> = min_idx
        .iter()
        .map(|&i| {
            let xi = ds.rows[i].features.as_slice();
            let mut others: Vec<(f64, usize)> = min_idx
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (sq_dist(xi, ds.rows[j].features.as_slice()), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();

    let needed = ds.count(majority).saturating_sub(min_idx.len());
    let mut rng = rng(seed);
    let mut rows = ds.rows.clone();
    let mut origins = Vec::with_capacity(needed);
    for _ in 0..needed {
        let m = rng.random_range(0..min_idx.len());
        let base = min_idx[m];
        let nb = neighbours[m][rng.random_range(0..k)];
        let gap: f64 = rng.random();
        let x = ds.rows[base].features.as_slice();
        let y = ds.rows[nb].features.as_slice();
        let synth: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + gap * (b - a)).collect();
        rows.push(Row {
            features: FeatureVector(synth),
            label: minority,
        });
        origins.push(SmoteOrigin {
            base,
            neighbor: nb,
            gap,
        });
    }
    Ok((ds.with_rows(rows), origins))
}
