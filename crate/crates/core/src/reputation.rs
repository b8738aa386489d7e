//! TTL cache of canonical-URL verdicts with a line-oriented JSON journal.
//!
//! Journal lines are `{canonical_url, score, verdict, stored_at, ttl_seconds, source}`
//! with `stored_at` in epoch seconds. Replay is last-writer-wins.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::features::{canonicalize, UrlError};
use crate::scoring::{RiskAssessment, Verdict};

pub const DEFAULT_TTL_SECONDS: u64 = 24 * 60 * 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    MlPipeline,
    SeedList,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReputationEntry {
    pub canonical_url: String,
    pub score: f64,
    pub verdict: Verdict,
    pub stored_at: i64,
    pub ttl_seconds: u64,
    pub source: Source,
    /// Full assessment behind the entry; memory only, never journaled.
    #[serde(skip)]
    pub assessment: Option<RiskAssessment>,
}

impl ReputationEntry {
    pub fn is_expired(&self, now: i64) -> bool {
        now.saturating_sub(self.stored_at) > self.ttl_seconds.min(i64::MAX as u64) as i64
    }
}

/// Seed-list line: the journal schema without `stored_at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRecord {
    pub canonical_url: String,
    pub score: f64,
    pub verdict: Verdict,
    pub ttl_seconds: u64,
    #[serde(default = "seed_source")]
    pub source: Source,
}

fn seed_source() -> Source {
    Source::SeedList
}

#[derive(Debug, Error)]
pub enum ReputationError {
    #[error(transparent)]
    Url(#[from] UrlError),
    #[error("invalid score {0}: must be in [0, 100]")]
    InvalidScore(f64),
    #[error("invalid ttl: must be > 0 seconds")]
    InvalidTtl,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt journal {path} line {line}: {reason}")]
    CorruptJournal {
        path: String,
        line: usize,
        reason: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReputationError + '_ {
    move |source| ReputationError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub struct ReputationStore {
    entries: RwLock<HashMap<String, ReputationEntry>>,
    journal: Option<Mutex<(PathBuf, File)>>,
    default_ttl: u64,
}

impl ReputationStore {
    /// Memory-only store.
    pub fn new(default_ttl: u64) -> Self {
        ReputationStore {
            entries: RwLock::new(HashMap::new()),
            journal: None,
            default_ttl: default_ttl.max(1),
        }
    }

    /// Replays `path` if it exists, then appends every later upsert to it.
    /// Corrupt lines are skipped and returned.
    pub fn open(
        path: &Path,
        default_ttl: u64,
        now: i64,
    ) -> Result<(Self, Vec<ReputationError>), ReputationError> {
        let (mut store, corrupt) = if path.exists() {
            Self::restore(path, default_ttl, now)?
        } else {
            (Self::new(default_ttl), Vec::new())
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        store.journal = Some(Mutex::new((path.to_path_buf(), file)));
        Ok((store, corrupt))
    }

    pub fn default_ttl(&self) -> u64 {
        self.default_ttl
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unexpired entry for the canonical form of `raw_url`.
    pub fn lookup(&self, raw_url: &str, now: i64) -> Result<Option<ReputationEntry>, UrlError> {
        let key = canonicalize(raw_url)?;
        Ok(self.lookup_canonical(&key, now))
    }

    pub fn lookup_canonical(&self, canonical_url: &str, now: i64) -> Option<ReputationEntry> {
        self.entries
            .read()
            .get(canonical_url)
            .filter(|e| !e.is_expired(now))
            .cloned()
    }

    pub fn upsert(
        &self,
        raw_url: &str,
        score: f64,
        verdict: Verdict,
        source: Source,
        now: i64,
    ) -> Result<ReputationEntry, ReputationError> {
        self.upsert_assessment(raw_url, score, verdict, source, now, None)
    }

    /// Like [`upsert`](Self::upsert), keeping `assessment` alongside in memory.
    pub fn upsert_assessment(
        &self,
        raw_url: &str,
        score: f64,
        verdict: Verdict,
        source: Source,
        now: i64,
        assessment: Option<RiskAssessment>,
    ) -> Result<ReputationEntry, ReputationError> {
        if !(0.0..=100.0).contains(&score) {
            return Err(ReputationError::InvalidScore(score));
        }
        let entry = ReputationEntry {
            canonical_url: canonicalize(raw_url)?,
            score,
            verdict,
            stored_at: now,
            ttl_seconds: self.default_ttl,
            source,
            assessment,
        };
        self.put(entry.clone())?;
        Ok(entry)
    }

    /// Inserts a prepared entry, journaling it when a journal is attached.
    pub fn put(&self, entry: ReputationEntry) -> Result<(), ReputationError> {
        if entry.ttl_seconds == 0 {
            return Err(ReputationError::InvalidTtl);
        }
        if !(0.0..=100.0).contains(&entry.score) {
            return Err(ReputationError::InvalidScore(entry.score));
        }
        if let Some(j) = &self.journal {
            // Holding the journal lock across the map update keeps journal order
            // equal to in-memory last-writer order.
            let mut guard = j.lock();
            let (path, file) = &mut *guard;
            let line = serde_json::to_string(&entry).expect("entry serializes");
            writeln!(file, "{line}").map_err(io_err(path))?;
            self.entries
                .write()
                .insert(entry.canonical_url.clone(), entry);
        } else {
            self.entries
                .write()
                .insert(entry.canonical_url.clone(), entry);
        }
        Ok(())
    }

    pub fn prune_expired(&self, now: i64) -> usize {
        let mut map = self.entries.write();
        let before = map.len();
        map.retain(|_, e| !e.is_expired(now));
        before - map.len()
    }

    /// Writes every entry, one JSON object per line, replacing `path` atomically.
    pub fn persist(&self, path: &Path) -> Result<(), ReputationError> {
        let mut entries: Vec<ReputationEntry> = self.entries.read().values().cloned().collect();
        entries.sort_by(|a, b| a.canonical_url.cmp(&b.canonical_url));
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::io::BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
            for e in &entries {
                writeln!(f, "{}", serde_json::to_string(e).expect("entry serializes"))
                    .map_err(io_err(&tmp))?;
            }
            f.flush().map_err(io_err(&tmp))?;
        }
        std::fs::rename(&tmp, path).map_err(io_err(path))
    }

    /// Replays a journal. Expired entries are dropped; corrupt lines are logged,
    /// skipped and returned as `CorruptJournal` values.
    pub fn restore(
        path: &Path,
        default_ttl: u64,
        now: i64,
    ) -> Result<(Self, Vec<ReputationError>), ReputationError> {
        let file = File::open(path).map_err(io_err(path))?;
        let store = Self::new(default_ttl);
        let mut corrupt = Vec::new();
        {
            let mut map = store.entries.write();
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_err(path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<ReputationEntry>(&line)
                    .map_err(|e| e.to_string())
                    .and_then(validate_entry);
                match parsed {
                    Ok(e) => {
                        map.insert(e.canonical_url.clone(), e);
                    }
                    Err(reason) => {
                        let err = ReputationError::CorruptJournal {
                            path: path.display().to_string(),
                            line: i + 1,
                            reason,
                        };
                        warn!("{err}");
                        corrupt.push(err);
                    }
                }
            }
            map.retain(|_, e| !e.is_expired(now));
        }
        Ok((store, corrupt))
    }

    /// Loads seed records with `stored_at = now`. Seed entries are not journaled.
    pub fn load_seed_list(&self, path: &Path, now: i64) -> Result<usize, ReputationError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut n = 0;
        let mut map = self.entries.write();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let corrupt = |reason: String| ReputationError::CorruptJournal {
                path: path.display().to_string(),
                line: i + 1,
                reason,
            };
            let rec: SeedRecord = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            let entry = ReputationEntry {
                canonical_url: canonicalize(&rec.canonical_url)
                    .map_err(|e| corrupt(e.to_string()))?,
                score: rec.score,
                verdict: rec.verdict,
                stored_at: now,
                ttl_seconds: rec.ttl_seconds,
                source: rec.source,
                assessment: None,
            };
            let entry = validate_entry(entry).map_err(corrupt)?;
            map.insert(entry.canonical_url.clone(), entry);
            n += 1;
        }
        Ok(n)
    }
}

fn validate_entry(e: ReputationEntry) -> Result<ReputationEntry, String> {
    if !(0.0..=100.0).contains(&e.score) {
        return Err(format!("score {} outside [0, 100]", e.score));
    }
    if e.ttl_seconds == 0 {
        return Err("ttl_seconds must be > 0".into());
    }
    Ok(e)
}
