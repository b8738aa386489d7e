//! Risk score aggregation, verdict tiers, explanations and session rescoring.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledDataset;
use crate::metrics::{ConfusionMatrix, Metrics, FRAUD_SCORE_THRESHOLD};
use crate::models::{ensemble_predict, AggregationWeights, Ensemble, ModelError, ModelOutputs};
use crate::pipeline::write_session;
use crate::session::SessionFeatures;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Safe,
    Caution,
    Danger,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Safe => "safe",
            Verdict::Caution => "caution",
            Verdict::Danger => "danger",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub caution_threshold: f64,
    pub danger_threshold: f64,
    /// Minimum score when the autoencoder flags an anomaly.
    pub anomaly_floor: f64,
    /// Minimum score after a hidden redirect or an external sensitive submit.
    pub session_floor: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            caution_threshold: 30.0,
            danger_threshold: 70.0,
            anomaly_floor: 75.0,
            session_floor: 70.0,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        let (c, d) = (self.caution_threshold, self.danger_threshold);
        if !(0.0 <= c && c < d && d <= 100.0) {
            return Err(ScoringError::InvalidConfig(format!(
                "thresholds need 0 <= caution < danger <= 100, got caution {c}, danger {d}"
            )));
        }
        for (name, v) in [
            ("anomaly_floor", self.anomaly_floor),
            ("session_floor", self.session_floor),
        ] {
            if !(0.0..=100.0).contains(&v) {
                return Err(ScoringError::InvalidConfig(format!(
                    "{name} must be in [0, 100], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub score: f64,
    pub verdict: Verdict,
    pub model_outputs: ModelOutputs,
    /// Sorted by `|delta|` descending.
    pub explanation: Vec<Contribution>,
    pub cached: bool,
    pub assessed_at: DateTime<Utc>,
}

/// `100 * Σ wᵢ·pᵢ`, raised to `anomaly_floor` when the anomaly flag is set.
pub fn aggregate_score(
    outputs: &ModelOutputs,
    weights: &AggregationWeights,
    anomaly_floor: f64,
) -> Result<f64, ScoringError> {
    weights.validate().map_err(ScoringError::InvalidWeights)?;
    let p = outputs.probabilities();
    let raw = 100.0
        * weights
            .as_array()
            .iter()
            .zip(p)
            .map(|(w, p)| w * p)
            .sum::<f64>();
    let score = if outputs.anomaly_flag {
        raw.max(anomaly_floor)
    } else {
        raw
    };
    Ok(score.clamp(0.0, 100.0))
}

/// Lower bounds are inclusive for the higher tier.
pub fn assign_verdict(score: f64, cfg: &ScoringConfig) -> Result<Verdict, ScoringError> {
    cfg.validate()?;
    Ok(verdict_for(score, cfg))
}

fn verdict_for(score: f64, cfg: &ScoringConfig) -> Verdict {
    if score >= cfg.danger_threshold {
        Verdict::Danger
    } else if score >= cfg.caution_threshold {
        Verdict::Caution
    } else {
        Verdict::Safe
    }
}

fn score_vector(
    e: &Ensemble,
    x: &[f64],
    cfg: &ScoringConfig,
) -> Result<(f64, ModelOutputs), ScoringError> {
    let out = ensemble_predict(e, x)?;
    Ok((aggregate_score(&out, &e.weights, cfg.anomaly_floor)?, out))
}

/// Held-out metrics with rows scoring at least [`FRAUD_SCORE_THRESHOLD`]
/// counted as predicted fraud.
pub fn evaluate(
    e: &Ensemble,
    test: &LabeledDataset,
    cfg: &ScoringConfig,
) -> Result<Metrics, ScoringError> {
    let mut cm = ConfusionMatrix::default();
    for row in &test.rows {
        let (score, _) = score_vector(e, row.features.as_slice(), cfg)?;
        cm.record(row.label.is_fraud(), score >= FRAUD_SCORE_THRESHOLD);
    }
    Ok(cm.metrics())
}

fn explain_from(
    e: &Ensemble,
    x: &[f64],
    base: f64,
    cfg: &ScoringConfig,
) -> Result<Vec<Contribution>, ScoringError> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for (i, name) in e.manifest.iter().enumerate() {
        probe[i] = e.medians[i];
        let (s, _) = score_vector(e, &probe, cfg)?;
        probe[i] = x[i];
        out.push(Contribution {
            feature: name.clone(),
            delta: base - s,
        });
    }
    // stable sort keeps manifest order among equal magnitudes
    out.sort_by(|a, b| b.delta.abs().total_cmp(&a.delta.abs()));
    Ok(out)
}

/// Score change when each feature in turn is replaced by its training median.
pub fn explain(
    e: &Ensemble,
    x: &[f64],
    cfg: &ScoringConfig,
) -> Result<Vec<Contribution>, ScoringError> {
    let (base, _) = score_vector(e, x, cfg)?;
    explain_from(e, x, base, cfg)
}

/// Full model assessment of a raw feature vector.
pub fn assess(
    e: &Ensemble,
    x: &[f64],
    cfg: &ScoringConfig,
    now: DateTime<Utc>,
) -> Result<RiskAssessment, ScoringError> {
    cfg.validate()?;
    let (score, model_outputs) = score_vector(e, x, cfg)?;
    Ok(RiskAssessment {
        score,
        verdict: verdict_for(score, cfg),
        model_outputs,
        explanation: explain_from(e, x, score, cfg)?,
        cached: false,
        assessed_at: now,
    })
}

/// Rescores `base_features` with the session slots overwritten, applies the
/// session floors, then never lets the score drop below `prev.score`.
pub fn rescore_with_session(
    prev: &RiskAssessment,
    base_features: &[f64],
    session: &SessionFeatures,
    e: &Ensemble,
    cfg: &ScoringConfig,
    now: DateTime<Utc>,
) -> Result<RiskAssessment, ScoringError> {
    let mut v = crate::manifest::FeatureVector(base_features.to_vec());
    if v.len() != e.n_features() {
        return Err(ModelError::DimensionMismatch {
            expected: e.n_features(),
            got: v.len(),
        }
        .into());
    }
    write_session(&mut v, session);
    let fresh = assess(e, v.as_slice(), cfg, now)?;
    let mut score = fresh.score;
    if session.hidden_redirect_flag || session.external_sensitive_submit {
        score = score.max(cfg.session_floor);
    }
    let score = score.max(prev.score);
    Ok(RiskAssessment {
        score,
        verdict: verdict_for(score, cfg),
        cached: false,
        ..fresh
    })
}
