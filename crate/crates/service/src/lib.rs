//! HTTP API for the risk-scoring engine.
//!
//! `POST /api/v1/analyze` runs the cache-first workflow: canonicalize the URL,
//! consult the reputation store, and only on a miss extract features, run the
//! ensemble and record the verdict. Session events posted to
//! `/api/v1/sessions/{id}/events` rescore the page with a ratchet.

mod error;
pub mod wire;

use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use tracing::info;

use sentinel_core::config::EngineConfig;
use sentinel_core::features::{canonicalize, MetadataProvider};
use sentinel_core::manifest::{FeatureVector, FEATURE_NAMES};
use sentinel_core::models::{Ensemble, ModelOutputs};
use sentinel_core::pipeline::extract;
use sentinel_core::reputation::{ReputationEntry, ReputationStore, Source};
use sentinel_core::scoring::{assess, rescore_with_session, Contribution, RiskAssessment, Verdict};
use sentinel_core::session::{session_features, EventKind, SessionEvent, SessionState};

pub use error::ApiError;
use wire::{AnalyzeRequest, AnalyzeResponse, EventRecord, Health, ModelsInfo, SessionScore};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

/// Latest scored state of a session.
#[derive(Debug, Clone)]
struct Snapshot {
    score: f64,
    verdict: Verdict,
    model_outputs: Option<ModelOutputs>,
    explanation: Vec<Contribution>,
    assessed_at: DateTime<Utc>,
}

impl Snapshot {
    fn from_assessment(a: &RiskAssessment) -> Self {
        Snapshot {
            score: a.score,
            verdict: a.verdict,
            model_outputs: Some(a.model_outputs),
            explanation: a.explanation.clone(),
            assessed_at: a.assessed_at,
        }
    }

    fn from_entry(e: &ReputationEntry) -> Self {
        match &e.assessment {
            Some(a) => Snapshot {
                score: e.score,
                verdict: e.verdict,
                ..Snapshot::from_assessment(a)
            },
            None => Snapshot {
                score: e.score,
                verdict: e.verdict,
                model_outputs: None,
                explanation: Vec::new(),
                assessed_at: DateTime::from_timestamp(e.stored_at, 0).unwrap_or_default(),
            },
        }
    }

    /// Previous assessment as seen by the rescoring ratchet, which reads only
    /// the score.
    fn as_assessment(&self) -> RiskAssessment {
        RiskAssessment {
            score: self.score,
            verdict: self.verdict,
            model_outputs: self.model_outputs.unwrap_or(ModelOutputs {
                tree: 0.0,
                forest: 0.0,
                gbm: 0.0,
                svm: 0.0,
                mlp: 0.0,
                anomaly_score: 0.0,
                anomaly_flag: false,
            }),
            explanation: self.explanation.clone(),
            cached: false,
            assessed_at: self.assessed_at,
        }
    }
}

struct SessionEntry {
    canonical_url: String,
    state: SessionState,
    base_features: FeatureVector,
    seen: HashSet<(EventKind, i64)>,
    current: Snapshot,
}

pub struct AppState {
    config: EngineConfig,
    bundle: Option<Arc<Ensemble>>,
    store: Arc<ReputationStore>,
    provider: Arc<dyn MetadataProvider>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    evaluations: AtomicU64,
    clock: Clock,
}

/// Bundle layout must match the built-in feature manifest.
pub fn check_bundle(e: &Ensemble) -> Result<(), String> {
    if e.manifest
        .iter()
        .map(String::as_str)
        .ne(FEATURE_NAMES.iter().copied())
    {
        return Err(format!(
            "bundle manifest ({} features) does not match the built-in feature layout",
            e.manifest.len()
        ));
    }
    Ok(())
}

impl AppState {
    pub fn new(
        config: EngineConfig,
        bundle: Option<Ensemble>,
        store: Arc<ReputationStore>,
        provider: Arc<dyn MetadataProvider>,
    ) -> Result<Self, String> {
        if let Some(b) = &bundle {
            check_bundle(b)?;
        }
        Ok(AppState {
            config,
            bundle: bundle.map(Arc::new),
            store,
            provider,
            sessions: RwLock::new(HashMap::new()),
            evaluations: AtomicU64::new(0),
            clock: Arc::new(Utc::now),
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    /// Ensemble evaluations performed so far (analyses plus rescorings).
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::SeqCst)
    }

    pub fn store(&self) -> &ReputationStore {
        &self.store
    }

    fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    fn bundle(&self) -> Result<&Ensemble, ApiError> {
        self.bundle.as_deref().ok_or(ApiError::BundleNotLoaded)
    }

    fn top_n(&self, mut explanation: Vec<Contribution>) -> Vec<Contribution> {
        explanation.truncate(self.config.service.explanation_top_n);
        explanation
    }

    pub fn analyze(&self, req: AnalyzeRequest, force: bool) -> Result<AnalyzeResponse, ApiError> {
        let canonical = canonicalize(&req.url)?;
        let now = self.now();
        let cached = if force {
            None
        } else {
            self.store.lookup_canonical(&canonical, now.timestamp())
        };

        let (snapshot, was_cached, base) = match cached {
            Some(entry) => {
                let base = match &req.session_id {
                    Some(_) => Some(self.extract(&req, now)?),
                    None => None,
                };
                (Snapshot::from_entry(&entry), true, base)
            }
            None => {
                let bundle = self.bundle()?;
                let features = self.extract(&req, now)?;
                let assessment = assess(bundle, features.as_slice(), &self.config.scoring, now)?;
                self.evaluations.fetch_add(1, Ordering::SeqCst);
                self.store.upsert_assessment(
                    &canonical,
                    assessment.score,
                    assessment.verdict,
                    Source::MlPipeline,
                    now.timestamp(),
                    Some(assessment.clone()),
                )?;
                (
                    Snapshot::from_assessment(&assessment),
                    false,
                    Some(features),
                )
            }
        };

        if let (Some(id), Some(base)) = (&req.session_id, base) {
            self.open_session(id, &canonical, base, &snapshot, now);
        }

        Ok(AnalyzeResponse {
            url: canonical,
            score: snapshot.score,
            verdict: snapshot.verdict,
            cached: was_cached,
            alert: snapshot.verdict == Verdict::Danger,
            explanation: self.top_n(snapshot.explanation),
            model_outputs: snapshot.model_outputs,
            assessed_at: snapshot.assessed_at,
            session_id: req.session_id,
        })
    }

    fn extract(&self, req: &AnalyzeRequest, now: DateTime<Utc>) -> Result<FeatureVector, ApiError> {
        Ok(extract(
            &req.url,
            req.html.as_deref(),
            self.provider.as_ref(),
            now.date_naive(),
            &self.config.features,
            &self.config.content,
        )?
        .vector)
    }

    /// Starts a session, or keeps the existing one when it already tracks the
    /// same URL.
    fn open_session(
        &self,
        id: &str,
        canonical: &str,
        base: FeatureVector,
        snap: &Snapshot,
        now: DateTime<Utc>,
    ) {
        let mut sessions = self.sessions.write();
        if let Some(existing) = sessions.get(id) {
            if existing.lock().canonical_url == canonical {
                return;
            }
        }
        let host = sentinel_core::features::parse_url(canonical)
            .map(|p| p.host)
            .unwrap_or_default();
        let entry = SessionEntry {
            canonical_url: canonical.to_string(),
            state: SessionState::new(id, &host, now.timestamp_millis()),
            base_features: base,
            seen: HashSet::new(),
            current: snap.clone(),
        };
        sessions.insert(id.to_string(), Arc::new(Mutex::new(entry)));
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    pub fn record_event(&self, id: &str, record: EventRecord) -> Result<SessionScore, ApiError> {
        let handle = self.session(id)?;
        let bundle = self.bundle()?;
        let mut s = handle.lock();
        if !s.seen.insert((record.kind, record.timestamp_ms)) {
            return Ok(self.score_view(id, &s, true));
        }
        let event: SessionEvent = record.into();
        s.state
            .record_event(event)
            .map_err(|e| ApiError::Schema(e.to_string()))?;
        let features = session_features(&s.state, &self.config.session);
        let now = self.now();
        let prev = s.current.as_assessment();
        let next = rescore_with_session(
            &prev,
            s.base_features.as_slice(),
            &features,
            bundle,
            &self.config.scoring,
            now,
        )?;
        self.evaluations.fetch_add(1, Ordering::SeqCst);
        if next.verdict > prev.verdict {
            self.store.upsert_assessment(
                &s.canonical_url,
                next.score,
                next.verdict,
                Source::MlPipeline,
                now.timestamp(),
                Some(next.clone()),
            )?;
        }
        s.current = Snapshot::from_assessment(&next);
        Ok(self.score_view(id, &s, false))
    }

    pub fn session_score(&self, id: &str) -> Result<SessionScore, ApiError> {
        let handle = self.session(id)?;
        let s = handle.lock();
        Ok(self.score_view(id, &s, false))
    }

    fn score_view(&self, id: &str, s: &SessionEntry, duplicate: bool) -> SessionScore {
        SessionScore {
            session_id: id.to_string(),
            url: s.canonical_url.clone(),
            score: s.current.score,
            verdict: s.current.verdict,
            alert: s.current.verdict == Verdict::Danger,
            explanation: self.top_n(s.current.explanation.clone()),
            model_outputs: s.current.model_outputs,
            event_count: s.state.events.len(),
            duplicate,
            assessed_at: s.current.assessed_at,
        }
    }

    pub fn health(&self) -> Health {
        Health {
            status: if self.bundle.is_some() {
                "ok"
            } else {
                "degraded"
            }
            .to_string(),
            bundle_loaded: self.bundle.is_some(),
            store_entries: self.store.len(),
            active_sessions: self.sessions.read().len(),
        }
    }

    pub fn models_info(&self) -> Result<ModelsInfo, ApiError> {
        let b = self.bundle()?;
        Ok(ModelsInfo {
            format_version: b.format_version,
            manifest_size: b.manifest.len(),
            manifest: b.manifest.clone(),
            training_seed: b.training_seed,
            weights: b.weights,
            anomaly_threshold: b.autoencoder.anomaly_threshold,
        })
    }
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::Schema(e.to_string()))
}

fn force_flag(query: Option<&str>) -> bool {
    query
        .unwrap_or("")
        .split('&')
        .any(|kv| matches!(kv, "force=true" | "force=1"))
}

type Shared = Arc<AppState>;

async fn analyze_handler(
    State(state): State<Shared>,
    RawQuery(query): RawQuery,
    body: Bytes,
) -> Result<Json<AnalyzeResponse>, ApiError> {
    let req: AnalyzeRequest = parse_body(&body)?;
    let force = force_flag(query.as_deref());
    // Feature extraction and model evaluation are CPU-bound.
    tokio::task::spawn_blocking(move || state.analyze(req, force))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map(Json)
}

async fn event_handler(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionScore>, ApiError> {
    let record: EventRecord = parse_body(&body)?;
    tokio::task::spawn_blocking(move || state.record_event(&id, record))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map(Json)
}

async fn score_handler(
    State(state): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<SessionScore>, ApiError> {
    state.session_score(&id).map(Json)
}

async fn health_handler(State(state): State<Shared>) -> Json<Health> {
    Json(state.health())
}

async fn models_info_handler(State(state): State<Shared>) -> Result<Json<ModelsInfo>, ApiError> {
    state.models_info().map(Json)
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/v1/analyze", post(analyze_handler))
        .route("/api/v1/sessions/{id}/events", post(event_handler))
        .route("/api/v1/sessions/{id}/score", get(score_handler))
        .route("/api/v1/health", get(health_handler))
        .route("/api/v1/models/info", get(models_info_handler))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
