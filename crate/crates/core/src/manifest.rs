//! Frozen feature layout shared by extraction, datasets and models.
//!
//! Index positions never move; new features may only be appended together with a
//! bundle format version bump.

use serde::{Deserialize, Serialize};

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    // url lexical
    "url_length",
    "host_length",
    "digit_ratio",
    "char_entropy",
    "subdomain_count",
    "has_at_symbol",
    "has_punycode",
    "hyphen_count",
    "host_is_ip",
    "suspicious_tld",
    // domain metadata
    "domain_age_days",
    "domain_is_young",
    "cert_valid",
    "cert_days_remaining",
    "domain_resolved",
    // page content
    "content_present",
    "form_count",
    "password_input_count",
    "external_form_actions",
    "script_count",
    "external_script_ratio",
    "iframe_count",
    "hidden_element_count",
    "meta_refresh_present",
    "meta_refresh_cross_origin",
    "external_link_ratio",
    "max_script_obfuscation",
    // session
    "redirect_chain_length",
    "cross_origin_hops",
    "rapid_redirect_count",
    "third_party_request_ratio",
    "unique_third_party_domains",
    "external_form_submit",
    "sensitive_field_focus_count",
    "hidden_redirect_flag",
];

pub const N_FEATURES: usize = 35;

pub mod idx {
    pub const URL_LENGTH: usize = 0;
    pub const HOST_LENGTH: usize = 1;
    pub const DIGIT_RATIO: usize = 2;
    pub const CHAR_ENTROPY: usize = 3;
    pub const SUBDOMAIN_COUNT: usize = 4;
    pub const HAS_AT_SYMBOL: usize = 5;
    pub const HAS_PUNYCODE: usize = 6;
    pub const HYPHEN_COUNT: usize = 7;
    pub const HOST_IS_IP: usize = 8;
    pub const SUSPICIOUS_TLD: usize = 9;
    pub const DOMAIN_AGE_DAYS: usize = 10;
    pub const DOMAIN_IS_YOUNG: usize = 11;
    pub const CERT_VALID: usize = 12;
    pub const CERT_DAYS_REMAINING: usize = 13;
    pub const DOMAIN_RESOLVED: usize = 14;
    pub const CONTENT_PRESENT: usize = 15;
    pub const FORM_COUNT: usize = 16;
    pub const PASSWORD_INPUT_COUNT: usize = 17;
    pub const EXTERNAL_FORM_ACTIONS: usize = 18;
    pub const SCRIPT_COUNT: usize = 19;
    pub const EXTERNAL_SCRIPT_RATIO: usize = 20;
    pub const IFRAME_COUNT: usize = 21;
    pub const HIDDEN_ELEMENT_COUNT: usize = 22;
    pub const META_REFRESH_PRESENT: usize = 23;
    pub const META_REFRESH_CROSS_ORIGIN: usize = 24;
    pub const EXTERNAL_LINK_RATIO: usize = 25;
    pub const MAX_SCRIPT_OBFUSCATION: usize = 26;
    pub const REDIRECT_CHAIN_LENGTH: usize = 27;
    pub const CROSS_ORIGIN_HOPS: usize = 28;
    pub const RAPID_REDIRECT_COUNT: usize = 29;
    pub const THIRD_PARTY_REQUEST_RATIO: usize = 30;
    pub const UNIQUE_THIRD_PARTY_DOMAINS: usize = 31;
    pub const EXTERNAL_FORM_SUBMIT: usize = 32;
    pub const SENSITIVE_FIELD_FOCUS_COUNT: usize = 33;
    pub const HIDDEN_REDIRECT_FLAG: usize = 34;

    /// Slots overwritten by session evidence.
    pub const SESSION: std::ops::Range<usize> = REDIRECT_CHAIN_LENGTH..HIDDEN_REDIRECT_FLAG + 1;
}

/// The manifest as owned strings, the form stored in bundles and configs.
pub fn manifest() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

pub fn index_of(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// Numeric feature vector in manifest order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros() -> Self {
        FeatureVector(vec![0.0; N_FEATURES])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        self.0[i] = value;
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
