//! Session bookkeeping and response validation for the listening test.
//!
//! [`Collector`] owns one experiment plan and its store. It is synchronous
//! and single-writer: callers serialize `join` and `submit` (the HTTP layer
//! wraps it in a mutex). Session ids and timestamps are supplied by the
//! caller so simulated cohorts can be replayed byte for byte.

pub mod store;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expdesign::{
    next_group, page_order, ExperimentPlan, FamiliarizationItem, Page, TaskMode,
};
use crate::stimgen::TextItem;
use store::{Recovered, Store};

#[derive(Debug, Error)]
pub enum CollectorError {
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("out of order: requested page {requested}, next unanswered page is {expected}")]
    OutOfOrder { requested: usize, expected: usize },
    #[error("session finished")]
    Finished,
    #[error("validation error: {0}")]
    Validation(String),
    #[error("duplicate session id {0:?}")]
    DuplicateSession(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("store i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub experiment_id: String,
    pub group: usize,
    pub page_order: Vec<usize>,
    pub cursor: usize,
    pub created_at: DateTime<Utc>,
}

/// Fields a participant submits for one page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponsePayload {
    pub marks: Vec<bool>,
    pub score: u8,
    #[serde(default)]
    pub error_types: Vec<String>,
    #[serde(default)]
    pub other_text: String,
    pub replay_count: u8,
    pub elapsed_ms: u64,
}

/// One participant's judgment of one stimulus, as persisted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub session_id: String,
    /// Position in the participant's presentation order.
    pub page_index: usize,
    pub text_id: String,
    pub system_id: String,
    pub marks: Vec<bool>,
    pub score: u8,
    pub error_types: Vec<String>,
    pub other_text: String,
    pub replay_count: u8,
    pub elapsed_ms: u64,
    pub submitted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinInfo {
    pub session_id: String,
    pub group: usize,
    pub n_pages: usize,
}

/// A page as resolved on the server. `system_id` and `audio_ref` stay
/// server-side; the HTTP layer exposes only an opaque audio handle.
#[derive(Debug, Clone, Copy)]
pub struct PageView<'a> {
    pub index: usize,
    pub n_pages: usize,
    pub text: &'a TextItem,
    pub page: &'a Page,
    pub audio_ref: &'a str,
}

#[derive(Debug)]
pub struct Collector {
    plan: ExperimentPlan,
    store: Store,
    sessions: HashMap<String, Session>,
    joined: BTreeMap<usize, u64>,
    texts: HashMap<String, usize>,
}

impl Collector {
    /// Open the store under `dir`, replaying any sessions and responses
    /// already persisted there.
    pub fn open(plan: ExperimentPlan, dir: &Path) -> Result<Self, CollectorError> {
        plan.validate()
            .map_err(|e| CollectorError::Corrupt(format!("invalid plan: {e}")))?;
        let (store, recovered) = Store::open(dir)?;
        let texts = plan
            .texts
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();
        let mut collector = Self {
            joined: (0..plan.n_groups).map(|g| (g, 0)).collect(),
            plan,
            store,
            sessions: HashMap::new(),
            texts,
        };
        collector.replay(recovered)?;
        Ok(collector)
    }

    fn replay(&mut self, recovered: Recovered) -> Result<(), CollectorError> {
        for (i, line) in recovered.sessions.iter().enumerate() {
            let session: Session = serde_json::from_str(line)
                .map_err(|e| CollectorError::Corrupt(format!("sessions line {}: {e}", i + 1)))?;
            if session.experiment_id != self.plan.experiment_id {
                return Err(CollectorError::Corrupt(format!(
                    "sessions line {} belongs to experiment {:?}",
                    i + 1,
                    session.experiment_id
                )));
            }
            *self.joined.entry(session.group).or_default() += 1;
            self.sessions.insert(session.session_id.clone(), session);
        }
        for (i, line) in recovered.responses.iter().enumerate() {
            let record: ResponseRecord = serde_json::from_str(line)
                .map_err(|e| CollectorError::Corrupt(format!("responses line {}: {e}", i + 1)))?;
            let session = self.sessions.get_mut(&record.session_id).ok_or_else(|| {
                CollectorError::Corrupt(format!("responses line {} has no session", i + 1))
            })?;
            if record.page_index != session.cursor {
                return Err(CollectorError::Corrupt(format!(
                    "responses line {} answers page {} out of order",
                    i + 1,
                    record.page_index
                )));
            }
            session.cursor += 1;
        }
        Ok(())
    }

    pub fn plan(&self) -> &ExperimentPlan {
        &self.plan
    }

    pub fn experiment_id(&self) -> &str {
        &self.plan.experiment_id
    }

    pub fn check_experiment(&self, experiment_id: &str) -> Result<(), CollectorError> {
        if experiment_id == self.plan.experiment_id {
            Ok(())
        } else {
            Err(CollectorError::UnknownExperiment(experiment_id.to_string()))
        }
    }

    pub fn session(&self, session_id: &str) -> Result<&Session, CollectorError> {
        self.sessions
            .get(session_id)
            .ok_or_else(|| CollectorError::UnknownSession(session_id.to_string()))
    }

    pub fn joined_counts(&self) -> &BTreeMap<usize, u64> {
        &self.joined
    }

    pub fn familiarization(&self) -> &[FamiliarizationItem] {
        &self.plan.task.familiarization_items
    }

    /// Create a session in the least-loaded group. The session is persisted
    /// before this returns.
    pub fn join(
        &mut self,
        experiment_id: &str,
        session_id: String,
        now: DateTime<Utc>,
    ) -> Result<JoinInfo, CollectorError> {
        self.check_experiment(experiment_id)?;
        if self.sessions.contains_key(&session_id) {
            return Err(CollectorError::DuplicateSession(session_id));
        }
        let group = next_group(&self.plan, &self.joined);
        let order = page_order(&self.plan, group, &session_id)
            .map_err(|e| CollectorError::Corrupt(e.to_string()))?;
        let session = Session {
            session_id: session_id.clone(),
            experiment_id: self.plan.experiment_id.clone(),
            group,
            page_order: order,
            cursor: 0,
            created_at: now,
        };
        self.store.sessions.append(&session)?;
        let n_pages = session.page_order.len();
        *self.joined.entry(group).or_default() += 1;
        self.sessions.insert(session_id.clone(), session);
        Ok(JoinInfo {
            session_id,
            group,
            n_pages,
        })
    }

    /// The `n`-th page of the session's order; only the next unanswered page
    /// may be fetched.
    pub fn page(&self, session_id: &str, n: usize) -> Result<PageView<'_>, CollectorError> {
        let session = self.session(session_id)?;
        let n_pages = session.page_order.len();
        if session.cursor == n_pages {
            return Err(CollectorError::Finished);
        }
        if n != session.cursor {
            return Err(CollectorError::OutOfOrder {
                requested: n,
                expected: session.cursor,
            });
        }
        let page = &self.plan.group_pages[&session.group][session.page_order[n]];
        let text = &self.plan.texts[self.texts[&page.text_id]];
        let audio_ref = self
            .plan
            .rendition(&page.text_id, &page.system_id)
            .map(|r| r.audio_ref.as_str())
            .ok_or_else(|| CollectorError::Corrupt(format!("no rendition for {page:?}")))?;
        Ok(PageView {
            index: n,
            n_pages,
            text,
            page,
            audio_ref,
        })
    }

    /// Validate and durably append a response, then advance the cursor.
    pub fn submit(
        &mut self,
        session_id: &str,
        n: usize,
        payload: ResponsePayload,
        now: DateTime<Utc>,
    ) -> Result<ResponseRecord, CollectorError> {
        let session = self.session(session_id)?;
        if n != session.cursor {
            return Err(CollectorError::OutOfOrder {
                requested: n,
                expected: session.cursor,
            });
        }
        let page = &self.plan.group_pages[&session.group][session.page_order[n]];
        let text = &self.plan.texts[self.texts[&page.text_id]];
        validate_payload(&self.plan, text, &payload)?;
        let record = ResponseRecord {
            session_id: session_id.to_string(),
            page_index: n,
            text_id: page.text_id.clone(),
            system_id: page.system_id.clone(),
            marks: payload.marks,
            score: payload.score,
            error_types: payload.error_types,
            other_text: payload.other_text,
            replay_count: payload.replay_count,
            elapsed_ms: payload.elapsed_ms,
            submitted_at: now,
        };
        self.store.responses.append(&record)?;
        if let Some(s) = self.sessions.get_mut(session_id) {
            s.cursor += 1;
        }
        Ok(record)
    }

    /// Every persisted response line, in append order.
    pub fn export(&self, experiment_id: &str) -> Result<String, CollectorError> {
        self.check_experiment(experiment_id)?;
        Ok(self.store.read_responses()?)
    }
}

/// Check a payload against the page's token count and the task mode.
pub fn validate_payload(
    plan: &ExperimentPlan,
    text: &TextItem,
    payload: &ResponsePayload,
) -> Result<(), CollectorError> {
    let task = &plan.task;
    if payload.marks.len() != text.tokens.len() {
        return Err(CollectorError::Validation(format!(
            "marks length: expected {}, got {}",
            text.tokens.len(),
            payload.marks.len()
        )));
    }
    if !(1..=task.scale_points).contains(&payload.score) {
        return Err(CollectorError::Validation(format!(
            "score: {} is outside 1..={}",
            payload.score, task.scale_points
        )));
    }
    if payload.replay_count > task.max_replays {
        return Err(CollectorError::Validation(format!(
            "replay limit: {} exceeds {}",
            payload.replay_count, task.max_replays
        )));
    }
    match task.mode {
        TaskMode::MosOnly => {
            if payload.marks.iter().any(|&m| m) {
                return Err(CollectorError::Validation(
                    "marks: MOS_ONLY pages take no error marks".into(),
                ));
            }
            if !payload.error_types.is_empty() {
                return Err(CollectorError::Validation(
                    "error_types: MOS_ONLY pages take no error types".into(),
                ));
            }
        }
        TaskMode::Augmented => {
            for (i, t) in payload.error_types.iter().enumerate() {
                if !task.error_types.contains(t) {
                    return Err(CollectorError::Validation(format!(
                        "error_types: unknown type {t:?}"
                    )));
                }
                if payload.error_types[..i].contains(t) {
                    return Err(CollectorError::Validation(format!(
                        "error_types: {t:?} repeated"
                    )));
                }
            }
        }
    }
    Ok(())
}
