//! Per-session navigation, network and interaction evidence.
//!
//! Events carry counts and hosts only. There is no field anywhere in this module
//! that could hold a form value.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::registrable_domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Navigation,
    Redirect,
    Request,
    FormSubmit,
    FocusSensitiveField,
    Click,
    Hover,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Navigation => "navigation",
            EventKind::Redirect => "redirect",
            EventKind::Request => "request",
            EventKind::FormSubmit => "form_submit",
            EventKind::FocusSensitiveField => "focus_sensitive_field",
            EventKind::Click => "click",
            EventKind::Hover => "hover",
        }
    }
}

/// Field-type tallies for a submitted form.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldCounts {
    pub field_count: u32,
    pub password_field_count: u32,
    pub sensitive_field_count: u32,
}

impl FieldCounts {
    pub fn has_sensitive(&self) -> bool {
        self.password_field_count > 0 || self.sensitive_field_count > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub kind: EventKind,
    pub timestamp_ms: i64,
    pub target_host: Option<String>,
    pub cross_origin: bool,
    pub metadata_flags: BTreeSet<String>,
    /// Only meaningful for `form_submit`.
    pub fields: FieldCounts,
}

impl SessionEvent {
    pub fn new(kind: EventKind, timestamp_ms: i64) -> Self {
        SessionEvent {
            kind,
            timestamp_ms,
            target_host: None,
            cross_origin: false,
            metadata_flags: BTreeSet::new(),
            fields: FieldCounts::default(),
        }
    }

    pub fn to_host(mut self, host: &str) -> Self {
        self.target_host = Some(host.to_ascii_lowercase());
        self
    }

    pub fn cross_origin(mut self, yes: bool) -> Self {
        self.cross_origin = yes;
        self
    }

    pub fn with_fields(mut self, fields: FieldCounts) -> Self {
        self.fields = fields;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("session {0} is closed")]
    SessionClosed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub page_host: String,
    pub events: Vec<SessionEvent>,
    /// Epoch milliseconds.
    pub created_at: i64,
    pub finalized: bool,
}

impl SessionState {
    pub fn new(session_id: impl Into<String>, page_host: &str, created_at: i64) -> Self {
        SessionState {
            session_id: session_id.into(),
            page_host: page_host.to_ascii_lowercase(),
            events: Vec::new(),
            created_at,
            finalized: false,
        }
    }

    pub fn finalize(&mut self) {
        self.finalized = true;
    }

    /// Appends `event`, clamping its timestamp up to the last recorded one.
    pub fn record_event(&mut self, mut event: SessionEvent) -> Result<(), SessionError> {
        if self.finalized {
            return Err(SessionError::SessionClosed(self.session_id.clone()));
        }
        if let Some(last) = self.events.last() {
            event.timestamp_ms = event.timestamp_ms.max(last.timestamp_ms);
        }
        self.events.push(event);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// A redirect this close to the previous hop counts as rapid.
    pub rapid_redirect_ms: i64,
    /// A redirect without a click this far back is hidden.
    pub hidden_redirect_lookback_ms: i64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            rapid_redirect_ms: 500,
            hidden_redirect_lookback_ms: 2000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    pub redirect_chain_length: u32,
    pub cross_origin_hops: u32,
    pub rapid_redirect_count: u32,
    pub third_party_request_ratio: f64,
    pub unique_third_party_domains: u32,
    pub external_form_submit: bool,
    pub sensitive_field_focus_count: u32,
    pub hidden_redirect_flag: bool,
    /// An external form submission that carried password or sensitive fields.
    pub external_sensitive_submit: bool,
}

fn is_third_party(host: &str, page_site: &str) -> bool {
    registrable_domain(host) != page_site
}

/// Pure function of the recorded event list.
pub fn session_features(state: &SessionState, cfg: &SessionConfig) -> SessionFeatures {
    let page_site = registrable_domain(&state.page_host);
    let mut f = SessionFeatures::default();
    let mut last_hop: Option<i64> = None;
    let mut last_click: Option<i64> = None;
    let mut requests = 0u32;
    let mut third_party_requests = 0u32;
    let mut third_party_sites: HashSet<String> = HashSet::new();

    for ev in &state.events {
        let t = ev.timestamp_ms;
        match ev.kind {
            EventKind::Navigation => last_hop = Some(t),
            EventKind::Redirect => {
                f.redirect_chain_length += 1;
                if ev.cross_origin {
                    f.cross_origin_hops += 1;
                }
                if last_hop.is_some_and(|prev| t - prev < cfg.rapid_redirect_ms) {
                    f.rapid_redirect_count += 1;
                }
                let clicked = last_click.is_some_and(|c| t - c <= cfg.hidden_redirect_lookback_ms);
                if !clicked {
                    f.hidden_redirect_flag = true;
                }
                last_hop = Some(t);
            }
            EventKind::Click => last_click = Some(t),
            EventKind::Request => {
                requests += 1;
                if let Some(host) = ev.target_host.as_deref() {
                    if is_third_party(host, &page_site) {
                        third_party_requests += 1;
                        third_party_sites.insert(registrable_domain(host));
                    }
                }
            }
            EventKind::FormSubmit => {
                let external = ev.cross_origin
                    || ev
                        .target_host
                        .as_deref()
                        .is_some_and(|h| is_third_party(h, &page_site));
                if external {
                    f.external_form_submit = true;
                    if ev.fields.has_sensitive() {
                        f.external_sensitive_submit = true;
                    }
                }
            }
            EventKind::FocusSensitiveField => f.sensitive_field_focus_count += 1,
            EventKind::Hover => {}
        }
    }
    if requests > 0 {
        f.third_party_request_ratio = third_party_requests as f64 / requests as f64;
    }
    f.unique_third_party_domains = third_party_sites.len() as u32;
    f
}
