//! JSON request and response bodies for `/api/v1`. Field names are snake_case
//! and frozen within a major API version.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use sentinel_core::models::ModelOutputs;
use sentinel_core::scoring::{Contribution, Verdict};
use sentinel_core::session::{EventKind, FieldCounts, SessionEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeRequest {
    pub url: String,
    #[serde(default)]
    pub html: Option<String>,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub url: String,
    pub score: f64,
    pub verdict: Verdict,
    pub cached: bool,
    /// Set for danger verdicts.
    pub alert: bool,
    pub explanation: Vec<Contribution>,
    /// Absent for cache entries that did not come from the model pipeline.
    pub model_outputs: Option<ModelOutputs>,
    pub assessed_at: DateTime<Utc>,
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WireFieldCounts {
    pub field_count: u32,
    pub password_field_count: u32,
    pub sensitive_field_count: u32,
}

/// One session event. Only counts and hosts are accepted; any other key,
/// including anything resembling a field value, is a schema violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub kind: EventKind,
    pub timestamp_ms: i64,
    #[serde(default)]
    pub target_host: Option<String>,
    #[serde(default)]
    pub cross_origin: bool,
    #[serde(default)]
    pub metadata_flags: BTreeSet<String>,
    #[serde(default)]
    pub fields: WireFieldCounts,
}

impl From<EventRecord> for SessionEvent {
    fn from(r: EventRecord) -> Self {
        SessionEvent {
            kind: r.kind,
            timestamp_ms: r.timestamp_ms,
            target_host: r.target_host.map(|h| h.to_ascii_lowercase()),
            cross_origin: r.cross_origin,
            metadata_flags: r.metadata_flags,
            fields: FieldCounts {
                field_count: r.fields.field_count,
                password_field_count: r.fields.password_field_count,
                sensitive_field_count: r.fields.sensitive_field_count,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScore {
    pub session_id: String,
    pub url: String,
    pub score: f64,
    pub verdict: Verdict,
    pub alert: bool,
    pub explanation: Vec<Contribution>,
    pub model_outputs: Option<ModelOutputs>,
    pub event_count: usize,
    /// True when the last submitted event repeated an already recorded one.
    pub duplicate: bool,
    pub assessed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    /// `ok` with a bundle loaded, `degraded` without.
    pub status: String,
    pub bundle_loaded: bool,
    pub store_entries: usize,
    pub active_sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelsInfo {
    pub format_version: u32,
    pub manifest_size: usize,
    pub manifest: Vec<String>,
    pub training_seed: u64,
    pub weights: sentinel_core::models::AggregationWeights,
    pub anomaly_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}
