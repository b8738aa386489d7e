use rand::seq::SliceRandom;

use super::{rng, DatasetError, Label, LabeledDataset};

/// Per-class shuffled split. Each class contributes `round(count * test_fraction)`
/// rows to the test set; both halves keep the original row order.
pub fn stratified_split(
    ds: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::InvalidConfig(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = rng(seed);
    let mut in_test = vec![false; ds.len()];
    for label in [Label::Legit, Label::Fraud] {
        let mut idx: Vec<usize> = (0..ds.len())
            .filter(|&i| ds.rows[i].label == label)
            .collect();
        if idx.len() < 2 {
            return Err(DatasetError::InvalidConfig(format!(
                "class {label:?} has {} rows; stratified split needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let take = (idx.len() as f64 * test_fraction).round() as usize;
        for &i in &idx[..take] {
            in_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (row, t) in ds.rows.iter().zip(in_test) {
        if t {
            test.push(row.clone());
        } else {
            train.push(row.clone());
        }
    }
    Ok((ds.with_rows(train), ds.with_rows(test)))
}
