//! URL, page HTML, domain metadata and session evidence to a [`FeatureVector`].

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::content::{analyze_html, ContentConfig, ContentFeatures};
use crate::features::{
    domain_metadata, lexical_features, parse_url, DomainMetadata, MetadataProvider, UrlError,
    UrlLexicalFeatures, UrlParts, DEFAULT_SUSPICIOUS_TLDS, DEFAULT_YOUNG_DAYS,
};
use crate::manifest::{flag, idx, FeatureVector};
use crate::session::SessionFeatures;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub suspicious_tlds: Vec<String>,
    pub young_days: i64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            suspicious_tlds: DEFAULT_SUSPICIOUS_TLDS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            young_days: DEFAULT_YOUNG_DAYS,
        }
    }
}

/// Extraction result: the vector plus the pieces it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub url: UrlParts,
    pub vector: FeatureVector,
}

pub fn write_lexical(v: &mut FeatureVector, f: &UrlLexicalFeatures) {
    v.set(idx::URL_LENGTH, f.url_length as f64);
    v.set(idx::HOST_LENGTH, f.host_length as f64);
    v.set(idx::DIGIT_RATIO, f.digit_ratio);
    v.set(idx::CHAR_ENTROPY, f.char_entropy);
    v.set(idx::SUBDOMAIN_COUNT, f.subdomain_count as f64);
    v.set(idx::HAS_AT_SYMBOL, flag(f.has_at_symbol));
    v.set(idx::HAS_PUNYCODE, flag(f.has_punycode));
    v.set(idx::HYPHEN_COUNT, f.hyphen_count as f64);
    v.set(idx::HOST_IS_IP, flag(f.host_is_ip));
    v.set(idx::SUSPICIOUS_TLD, flag(f.suspicious_tld));
}

/// Unknown values encode as 0 with `domain_resolved` telling them apart.
pub fn write_domain(v: &mut FeatureVector, m: &DomainMetadata) {
    v.set(idx::DOMAIN_AGE_DAYS, m.age_days.unwrap_or(0) as f64);
    v.set(idx::DOMAIN_IS_YOUNG, flag(m.is_young));
    v.set(idx::CERT_VALID, flag(m.cert_valid.unwrap_or(false)));
    v.set(
        idx::CERT_DAYS_REMAINING,
        m.cert_days_remaining.unwrap_or(0).max(0) as f64,
    );
    v.set(idx::DOMAIN_RESOLVED, flag(m.provider_resolved));
}

pub fn write_content(v: &mut FeatureVector, c: &ContentFeatures) {
    v.set(idx::CONTENT_PRESENT, 1.0);
    v.set(idx::FORM_COUNT, c.form_count as f64);
    v.set(idx::PASSWORD_INPUT_COUNT, c.password_input_count as f64);
    v.set(idx::EXTERNAL_FORM_ACTIONS, c.external_form_actions as f64);
    v.set(idx::SCRIPT_COUNT, c.script_count as f64);
    v.set(idx::EXTERNAL_SCRIPT_RATIO, c.external_script_ratio);
    v.set(idx::IFRAME_COUNT, c.iframe_count as f64);
    v.set(idx::HIDDEN_ELEMENT_COUNT, c.hidden_element_count as f64);
    v.set(idx::META_REFRESH_PRESENT, flag(c.meta_refresh_present));
    v.set(
        idx::META_REFRESH_CROSS_ORIGIN,
        flag(c.meta_refresh_cross_origin),
    );
    v.set(idx::EXTERNAL_LINK_RATIO, c.external_link_ratio);
    v.set(idx::MAX_SCRIPT_OBFUSCATION, c.max_script_obfuscation);
}

/// Overwrites the session slots.
pub fn write_session(v: &mut FeatureVector, s: &SessionFeatures) {
    v.set(idx::REDIRECT_CHAIN_LENGTH, s.redirect_chain_length as f64);
    v.set(idx::CROSS_ORIGIN_HOPS, s.cross_origin_hops as f64);
    v.set(idx::RAPID_REDIRECT_COUNT, s.rapid_redirect_count as f64);
    v.set(idx::THIRD_PARTY_REQUEST_RATIO, s.third_party_request_ratio);
    v.set(
        idx::UNIQUE_THIRD_PARTY_DOMAINS,
        s.unique_third_party_domains as f64,
    );
    v.set(idx::EXTERNAL_FORM_SUBMIT, flag(s.external_form_submit));
    v.set(
        idx::SENSITIVE_FIELD_FOCUS_COUNT,
        s.sensitive_field_focus_count as f64,
    );
    v.set(idx::HIDDEN_REDIRECT_FLAG, flag(s.hidden_redirect_flag));
}

/// URL features always; content features when `html` is given; domain
/// features from `provider`. Session slots stay 0.
pub fn extract(
    raw_url: &str,
    html: Option<&str>,
    provider: &dyn MetadataProvider,
    today: NaiveDate,
    features: &FeatureConfig,
    content: &ContentConfig,
) -> Result<Extracted, UrlError> {
    let url = parse_url(raw_url)?;
    let mut v = FeatureVector::zeros();
    write_lexical(
        &mut v,
        &lexical_features(&url, raw_url.trim(), &features.suspicious_tlds),
    );
    let lookup_host = if url.host_is_ip {
        &url.host
    } else {
        &url.registrable_domain
    };
    write_domain(
        &mut v,
        &domain_metadata(lookup_host, provider, today, features.young_days),
    );
    if let Some(html) = html {
        write_content(&mut v, &analyze_html(html, &url.host, content));
    }
    Ok(Extracted { url, vector: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{DomainRecord, FixtureProvider, NullProvider};
    use crate::manifest::N_FEATURES;

    fn today() -> NaiveDate {
        NaiveDate::from_ymd_opt(2026, 3, 1).unwrap()
    }

    #[test]
    fn url_only_leaves_content_and_session_zero() {
        let e = extract(
            "http://example.com/",
            None,
            &NullProvider,
            today(),
            &Default::default(),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(e.vector.len(), N_FEATURES);
        assert_eq!(e.vector.get(idx::URL_LENGTH), 19.0);
        assert_eq!(e.vector.get(idx::DOMAIN_RESOLVED), 0.0);
        assert!(e.vector.as_slice()[idx::CONTENT_PRESENT..]
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn domain_and_content_slots() {
        let mut p = FixtureProvider::default();
        p.insert(
            "evil.tk",
            DomainRecord {
                created_date: Some("2026-02-01".into()),
                cert_valid: Some(true),
                cert_expiry: Some("2026-03-11".into()),
            },
        );
        let html = r#"<form action="https://collect.example.net/x"><input type="password"></form>"#;
        let e = extract(
            "https://login.evil.tk/a",
            Some(html),
            &p,
            today(),
            &Default::default(),
            &Default::default(),
        )
        .unwrap();
        let v = &e.vector;
        assert_eq!(v.get(idx::SUSPICIOUS_TLD), 1.0);
        assert_eq!(v.get(idx::DOMAIN_AGE_DAYS), 28.0);
        assert_eq!(v.get(idx::DOMAIN_IS_YOUNG), 1.0);
        assert_eq!(v.get(idx::CERT_DAYS_REMAINING), 10.0);
        assert_eq!(v.get(idx::CONTENT_PRESENT), 1.0);
        assert_eq!(v.get(idx::PASSWORD_INPUT_COUNT), 1.0);
        assert_eq!(v.get(idx::EXTERNAL_FORM_ACTIONS), 1.0);
    }

    #[test]
    fn session_slots_overwrite() {
        let mut v = FeatureVector::zeros();
        let s = SessionFeatures {
            redirect_chain_length: 2,
            hidden_redirect_flag: true,
            ..Default::default()
        };
        write_session(&mut v, &s);
        assert_eq!(v.get(idx::REDIRECT_CHAIN_LENGTH), 2.0);
        assert_eq!(v.get(idx::HIDDEN_REDIRECT_FLAG), 1.0);
        write_session(&mut v, &SessionFeatures::default());
        assert!(v.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn malformed_url() {
        let err = extract(
            "notaurl",
            None,
            &NullProvider,
            today(),
            &Default::default(),
            &Default::default(),
        );
        assert_eq!(err.unwrap_err().code(), "malformed_url");
    }
}
