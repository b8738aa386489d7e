use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

/// Domains younger than this many days count as young.
pub const DEFAULT_YOUNG_DAYS: i64 = 180;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainMetadata {
    pub age_days: Option<i64>,
    pub is_young: bool,
    pub cert_valid: Option<bool>,
    pub cert_days_remaining: Option<i64>,
    pub provider_resolved: bool,
}

impl DomainMetadata {
    pub fn unresolved() -> Self {
        DomainMetadata {
            age_days: None,
            is_young: false,
            cert_valid: None,
            cert_days_remaining: None,
            provider_resolved: false,
        }
    }
}

/// One fixture/provider record. Field names are part of the fixture file format.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cert_valid: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cert_expiry: Option<String>,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("metadata provider timed out")]
    Timeout,
    #[error("metadata provider failed: {0}")]
    Failed(String),
    #[error("cannot load fixture {path}: {reason}")]
    Fixture { path: String, reason: String },
}

/// Source of WHOIS-style registration dates and certificate status.
pub trait MetadataProvider: Send + Sync {
    fn lookup(&self, host: &str) -> Result<Option<DomainRecord>, ProviderError>;
}

/// Provider that knows nothing; every host resolves as unknown.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullProvider;

impl MetadataProvider for NullProvider {
    fn lookup(&self, _host: &str) -> Result<Option<DomainRecord>, ProviderError> {
        Ok(None)
    }
}

/// Table-backed provider loaded from a JSON object `host -> record`.
///
/// A host without its own entry falls back to its parent domains, so a record for
/// `example.com` also answers for `login.example.com`.
#[derive(Debug, Clone, Default)]
pub struct FixtureProvider {
    table: BTreeMap<String, DomainRecord>,
}

impl FixtureProvider {
    pub fn new(table: BTreeMap<String, DomainRecord>) -> Self {
        let table = table
            .into_iter()
            .map(|(k, v)| (k.trim_end_matches('.').to_ascii_lowercase(), v))
            .collect();
        FixtureProvider { table }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::new(serde_json::from_str(text)?))
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let fail = |reason: String| ProviderError::Fixture {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        Self::from_json(&text).map_err(|e| fail(e.to_string()))
    }

    pub fn insert(&mut self, host: &str, record: DomainRecord) {
        self.table.insert(host.to_ascii_lowercase(), record);
    }
}

impl MetadataProvider for FixtureProvider {
    fn lookup(&self, host: &str) -> Result<Option<DomainRecord>, ProviderError> {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let mut candidate = host.as_str();
        loop {
            if let Some(rec) = self.table.get(candidate) {
                return Ok(Some(rec.clone()));
            }
            match candidate.split_once('.') {
                Some((_, rest)) if rest.contains('.') => candidate = rest,
                _ => return Ok(None),
            }
        }
    }
}

/// Accepts `YYYY-MM-DD` or a full RFC 3339 timestamp.
fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.date_naive()))
}

/// Resolve age and certificate facts for `host` as of `today`.
///
/// Provider failures are logged and reported as `provider_resolved = false`.
pub fn domain_metadata(
    host: &str,
    provider: &dyn MetadataProvider,
    today: NaiveDate,
    young_days: i64,
) -> DomainMetadata {
    let record = match provider.lookup(host) {
        Ok(Some(r)) => r,
        Ok(None) => return DomainMetadata::unresolved(),
        Err(e) => {
            warn!(host, error = %e, "domain metadata lookup failed");
            return DomainMetadata::unresolved();
        }
    };

    let age_days = record
        .created_date
        .as_deref()
        .and_then(parse_iso_date)
        .map(|created| (today - created).num_days().max(0));
    let expiry = record.cert_expiry.as_deref().and_then(parse_iso_date);
    let cert_days_remaining = expiry.map(|e| (e - today).num_days());
    let cert_valid =
        record.cert_valid.unwrap_or(false) && cert_days_remaining.is_none_or(|d| d >= 0);

    DomainMetadata {
        age_days,
        is_young: age_days.is_some_and(|a| a < young_days),
        cert_valid: Some(cert_valid),
        cert_days_remaining,
        provider_resolved: true,
    }
}
