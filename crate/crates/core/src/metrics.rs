//! Binary classification metrics with fraud as the positive class.

use serde::{Deserialize, Serialize};

/// Score at or above which a row counts as predicted fraud in evaluation.
pub const FRAUD_SCORE_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut m = ConfusionMatrix::default();
        for (actual, predicted) in pairs {
            m.record(actual, predicted);
        }
        m
    }

    pub fn record(&mut self, actual_fraud: bool, predicted_fraud: bool) {
        match (actual_fraud, predicted_fraud) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Precision, recall and F1 are 0 when their denominators are 0.
    pub fn metrics(&self) -> Metrics {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision,
            recall,
            f1,
            confusion: *self,
        }
    }
}

impl Metrics {
    /// Fixed-format report table.
    pub fn table(&self) -> String {
        let c = &self.confusion;
        format!(
            "metric     value\n\
             accuracy   {:.4}\n\
             precision  {:.4}\n\
             recall     {:.4}\n\
             f1         {:.4}\n\
             \n\
             confusion       pred_fraud  pred_legit\n\
             actual_fraud    {:>10}  {:>10}\n\
             actual_legit    {:>10}  {:>10}\n",
            self.accuracy, self.precision, self.recall, self.f1, c.tp, c.fn_, c.fp, c.tn
        )
    }
}
