use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::url::UrlParts;

/// TLDs flagged when no config override is supplied.
pub const DEFAULT_SUSPICIOUS_TLDS: &[&str] = &[
    "tk", "ml", "ga", "cf", "gq", "xyz", "top", "zip", "mov", "work", "click", "country", "loan",
    "men", "kim", "icu", "buzz",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrlLexicalFeatures {
    pub url_length: u32,
    pub host_length: u32,
    pub digit_ratio: f64,
    pub char_entropy: f64,
    pub subdomain_count: u32,
    pub has_at_symbol: bool,
    pub has_punycode: bool,
    pub hyphen_count: u32,
    pub host_is_ip: bool,
    pub suspicious_tld: bool,
}

/// Shannon entropy in bits over the characters of `s`.
///
/// Counting is per Unicode scalar value, which is byte-wise for ASCII input.
pub fn shannon_entropy(s: &str) -> f64 {
    let mut counts: BTreeMap<char, usize> = BTreeMap::new();
    let mut n = 0usize;
    for c in s.chars() {
        *counts.entry(c).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // Single-symbol strings yield -0.0 otherwise.
    h.max(0.0)
}

/// Fraction of characters that are ASCII digits.
pub fn digit_ratio(s: &str) -> f64 {
    let total = s.chars().count();
    if total == 0 {
        return 0.0;
    }
    s.chars().filter(|c| c.is_ascii_digit()).count() as f64 / total as f64
}

pub fn lexical_features<S: AsRef<str>>(
    parts: &UrlParts,
    raw: &str,
    suspicious_tlds: &[S],
) -> UrlLexicalFeatures {
    let tld = if parts.host_is_ip {
        ""
    } else {
        parts.host.rsplit('.').next().unwrap_or("")
    };
    UrlLexicalFeatures {
        url_length: raw.chars().count() as u32,
        host_length: parts.host.chars().count() as u32,
        digit_ratio: digit_ratio(raw),
        char_entropy: shannon_entropy(raw),
        subdomain_count: parts.subdomain_count,
        has_at_symbol: raw.contains('@'),
        has_punycode: parts.host.split('.').any(|l| l.starts_with("xn--")),
        hyphen_count: parts.host.matches('-').count() as u32,
        host_is_ip: parts.host_is_ip,
        suspicious_tld: !tld.is_empty()
            && suspicious_tlds
                .iter()
                .any(|t| t.as_ref().eq_ignore_ascii_case(tld)),
    }
}
