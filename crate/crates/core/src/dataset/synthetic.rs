//! Seeded synthetic website dataset.
//!
//! Every row is drawn feature-by-feature with a per-row *shift* `s`:
//! `s = 0` for legitimate rows, `s = separation` for fraud rows, except that a
//! fraud row is "stealthy" with probability 0.2 and then uses
//! `s = 0.25 * separation`. Each feature moves from its legitimate distribution
//! toward its fraud distribution linearly in `s`. The full table lives in
//! `docs/synthetic-data.md`; the code below is the reference.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{rng, DatasetError, Label, LabeledDataset, Provenance, Row};
use crate::manifest::{self, idx, FeatureVector, N_FEATURES};

pub const STEALTH_PROBABILITY: f64 = 0.2;
pub const STEALTH_SCALE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub fraud_ratio: f64,
    pub separation: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 2000,
            fraud_ratio: 0.1,
            separation: 1.0,
            seed: 42,
        }
    }
}

struct Draw<'a> {
    rng: &'a mut ChaCha8Rng,
}

impl Draw<'_> {
    fn bern(&mut self, p: f64) -> bool {
        self.rng.random::<f64>() < p.clamp(0.0, 1.0)
    }

    fn unif(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    fn int(&mut self, lo: f64, hi: f64) -> f64 {
        self.unif(lo, hi).round()
    }

    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        Normal::new(mean, sd).expect("positive sd").sample(self.rng)
    }

    fn binomial(&mut self, trials: u32, p: f64) -> f64 {
        (0..trials).filter(|_| self.bern(p)).count() as f64
    }

    fn categorical(&mut self, weights: &[f64]) -> f64 {
        let u = self.rng.random::<f64>() * weights.iter().sum::<f64>();
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i as f64;
            }
        }
        (weights.len() - 1) as f64
    }
}

fn draw_row(d: &mut Draw<'_>, s: f64) -> Vec<f64> {
    let mut v = vec![0.0; N_FEATURES];

    // URL lexical
    let host_is_ip = d.bern(0.002 + 0.1 * s);
    let host_len = d.normal(14.0 + 10.0 * s, 4.0).round().clamp(4.0, 80.0);
    v[idx::HOST_LENGTH] = host_len;
    v[idx::URL_LENGTH] = (host_len + d.normal(30.0 + 25.0 * s, 10.0).round()).max(host_len + 8.0);
    v[idx::DIGIT_RATIO] = d.unif(0.0, 0.06 + 0.14 * s);
    v[idx::CHAR_ENTROPY] = d.normal(4.0 + 0.35 * s, 0.2).clamp(2.5, 6.0);
    v[idx::HAS_AT_SYMBOL] = manifest::flag(d.bern(0.005 + 0.08 * s));
    v[idx::HAS_PUNYCODE] = manifest::flag(d.bern(0.005 + 0.06 * s));
    v[idx::HOST_IS_IP] = manifest::flag(host_is_ip);
    if !host_is_ip {
        let extra = if d.bern(0.5 * s) {
            d.int(1.0, 3.0)
        } else {
            0.0
        };
        v[idx::SUBDOMAIN_COUNT] = d.categorical(&[0.55, 0.4, 0.05]) + extra;
        v[idx::HYPHEN_COUNT] = d.binomial(3, 0.08 + 0.25 * s);
        v[idx::SUSPICIOUS_TLD] = manifest::flag(d.bern(0.03 + 0.3 * s));
    }

    // domain metadata
    let resolved = !host_is_ip && d.bern(0.95 - 0.15 * s);
    v[idx::DOMAIN_RESOLVED] = manifest::flag(resolved);
    if resolved {
        let young = d.bern(0.04 + 0.66 * s);
        let age = if young {
            d.int(1.0, 179.0)
        } else {
            d.int(180.0, 8000.0)
        };
        v[idx::DOMAIN_AGE_DAYS] = age;
        v[idx::DOMAIN_IS_YOUNG] = manifest::flag(age < 180.0);
        let cert = d.bern(0.97 - 0.5 * s);
        v[idx::CERT_VALID] = manifest::flag(cert);
        if cert {
            v[idx::CERT_DAYS_REMAINING] = d.int(5.0, 365.0);
        }
    }

    // page content
    if d.bern(0.9) {
        v[idx::CONTENT_PRESENT] = 1.0;
        let forms = d.categorical(&[0.4, 0.45, 0.15]) + if d.bern(0.6 * s) { 1.0 } else { 0.0 };
        v[idx::FORM_COUNT] = forms;
        if forms > 0.0 && d.bern(0.15 + 0.6 * s) {
            v[idx::PASSWORD_INPUT_COUNT] = 1.0;
        }
        v[idx::EXTERNAL_FORM_ACTIONS] = d.binomial(forms as u32, 0.03 + 0.55 * s);
        v[idx::SCRIPT_COUNT] = d.int(2.0, 30.0 - 12.0 * s);
        v[idx::EXTERNAL_SCRIPT_RATIO] = (d.unif(0.0, 0.5) + 0.3 * s * d.unif(0.0, 1.0)).min(1.0);
        v[idx::IFRAME_COUNT] = d.int(0.0, 1.0 + 2.0 * s);
        v[idx::HIDDEN_ELEMENT_COUNT] = (d.unif(0.0, 3.0) + 5.0 * s * d.unif(0.0, 1.0)).round();
        let refresh = d.bern(0.02 + 0.2 * s);
        v[idx::META_REFRESH_PRESENT] = manifest::flag(refresh);
        v[idx::META_REFRESH_CROSS_ORIGIN] = manifest::flag(refresh && d.bern(0.2 + 0.6 * s));
        v[idx::EXTERNAL_LINK_RATIO] = (d.unif(0.05, 0.45) + 0.4 * s * d.unif(0.0, 1.0)).min(1.0);
        v[idx::MAX_SCRIPT_OBFUSCATION] = (d.unif(0.0, 0.25) + 0.5 * s * d.unif(0.0, 1.0)).min(1.0);
    }

    // session evidence, observed for half the rows
    if d.bern(0.5) {
        let redirects = manifest::flag(d.bern(0.2)) + (3.0 * s * d.unif(0.0, 1.0)).round();
        v[idx::REDIRECT_CHAIN_LENGTH] = redirects;
        v[idx::CROSS_ORIGIN_HOPS] = d.binomial(redirects as u32, 0.2 + 0.6 * s);
        v[idx::RAPID_REDIRECT_COUNT] = d.binomial(redirects as u32, 0.05 + 0.75 * s);
        let ratio = (d.unif(0.0, 0.35) + 0.45 * s * d.unif(0.0, 1.0)).min(1.0);
        v[idx::THIRD_PARTY_REQUEST_RATIO] = ratio;
        v[idx::UNIQUE_THIRD_PARTY_DOMAINS] = (ratio * d.unif(2.0, 12.0)).round();
        v[idx::EXTERNAL_FORM_SUBMIT] = manifest::flag(d.bern(0.02 + 0.5 * s));
        v[idx::SENSITIVE_FIELD_FOCUS_COUNT] = d.int(0.0, 1.0) + manifest::flag(d.bern(0.6 * s));
        v[idx::HIDDEN_REDIRECT_FLAG] = manifest::flag(redirects > 0.0 && d.bern(0.05 + 0.7 * s));
    }
    v
}

/// Deterministic labeled dataset with exactly `round(n * fraud_ratio)` fraud rows.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<LabeledDataset, DatasetError> {
    if cfg.n < 10 {
        return Err(DatasetError::InvalidConfig(format!(
            "n must be >= 10, got {}",
            cfg.n
        )));
    }
    if !(cfg.fraud_ratio > 0.0 && cfg.fraud_ratio < 1.0) {
        return Err(DatasetError::InvalidConfig(format!(
            "fraud_ratio must be in (0, 1), got {}",
            cfg.fraud_ratio
        )));
    }
    if !(cfg.separation.is_finite() && cfg.separation >= 0.0) {
        return Err(DatasetError::InvalidConfig(format!(
            "separation must be finite and >= 0, got {}",
            cfg.separation
        )));
    }
    let n_fraud = (cfg.n as f64 * cfg.fraud_ratio).round() as usize;
    let mut labels: Vec<Label> = (0..cfg.n).map(|i| Label::from_fraud(i < n_fraud)).collect();
    let mut rng = rng(cfg.seed);
    labels.shuffle(&mut rng);

    let mut d = Draw { rng: &mut rng };
    let rows = labels
        .into_iter()
        .map(|label| {
            let s = match label {
                Label::Legit => 0.0,
                Label::Fraud if d.bern(STEALTH_PROBABILITY) => STEALTH_SCALE * cfg.separation,
                Label::Fraud => cfg.separation,
            };
            Row {
                features: FeatureVector(draw_row(&mut d, s)),
                label,
            }
        })
        .collect();
    LabeledDataset::new(manifest::manifest(), rows, Provenance::Synthetic)
}
