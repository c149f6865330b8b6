use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use parking_lot::{Mutex, RwLock};
use polyrec_core::datagen::{rng_from_seed, Manifest};
use polyrec_core::evalmetrics::{write_predictions, PredictionRow, PredictionSet};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::TrialError;
use crate::log_file::{repair_tail, replay, Appender, LogEvent};
use crate::selection::{select_stimuli, StimulusFilter};

pub const DEFAULT_EXPOSURES_MS: [u32; 3] = [100, 200, 750];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    /// Allowed exposure durations.
    pub exposures_ms: Vec<u32>,
    /// What the client shows after the flash.
    pub mask: String,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            exposures_ms: DEFAULT_EXPOSURES_MS.to_vec(),
            mask: "white".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub exposure_ms: u32,
    pub seed: u64,
    pub filter: StimulusFilter,
    /// Fixed at creation.
    pub order: Vec<String>,
    /// Index of the next unanswered stimulus.
    #[serde(default)]
    pub cursor: usize,
    /// Unix milliseconds.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResponse {
    pub session_id: String,
    pub image_id: String,
    pub chosen_label: u32,
    /// From stimulus offset to keypress, as measured by the client.
    pub response_ms: f64,
    /// When the stimulus was first handed out (unix ms).
    pub served_at: u64,
    pub recorded_at: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionRequest {
    pub exposure_ms: u32,
    pub filter: StimulusFilter,
    pub length: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSubmission {
    pub image_id: String,
    pub chosen_label: u32,
    pub response_ms: f64,
}

/// What the client needs to show one stimulus. Carries no label or path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusDescriptor {
    pub index: usize,
    pub total: usize,
    pub image_id: String,
    pub image_url: String,
    pub exposure_ms: u32,
    pub choices: Vec<u32>,
    pub mask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextStimulus {
    Stimulus(StimulusDescriptor),
    End { total: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub index: usize,
    pub remaining: usize,
}

/// Sessions whose responses to export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionFilter {
    All,
    Ids(Vec<String>),
}

#[derive(Debug)]
struct SessionState {
    session: Session,
    served_at: Option<u64>,
    answered: HashSet<String>,
    responses: Vec<TrialResponse>,
}

impl SessionState {
    fn new(session: Session) -> Self {
        Self {
            session,
            served_at: None,
            answered: HashSet::new(),
            responses: Vec::new(),
        }
    }

    fn apply(&mut self, response: TrialResponse) {
        self.answered.insert(response.image_id.clone());
        self.responses.push(response);
        self.session.cursor += 1;
        self.served_at = None;
    }
}

/// Sessions, their responses, and the log that makes them durable.
#[derive(Debug)]
pub struct TrialStore {
    manifest: Arc<Manifest>,
    config: TrialConfig,
    classes: Vec<u32>,
    log_path: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionState>>>>,
    appender: Mutex<Appender>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl TrialStore {
    /// Opens the store, replaying any existing log at `log_path`.
    pub fn open(manifest: Arc<Manifest>, config: TrialConfig, log_path: &Path) -> Result<Self, TrialError> {
        if config.exposures_ms.is_empty() {
            return Err(TrialError::Validation("no exposure durations configured".into()));
        }
        let events = replay(log_path)?;
        repair_tail(log_path)?;
        let mut sessions: HashMap<String, SessionState> = HashMap::new();
        for (i, event) in events.into_iter().enumerate() {
            match event {
                LogEvent::Session(mut s) => {
                    s.cursor = 0;
                    sessions.insert(s.session_id.clone(), SessionState::new(s));
                }
                LogEvent::Response(r) => {
                    let state = sessions.get_mut(&r.session_id).ok_or_else(|| TrialError::Log {
                        path: log_path.to_path_buf(),
                        line: i + 1,
                        message: format!("response for unknown session `{}`", r.session_id),
                    })?;
                    state.apply(r);
                }
            }
        }
        log::info!(
            "replayed {} session(s) from {}",
            sessions.len(),
            log_path.display()
        );
        Ok(Self {
            classes: manifest.class_set().into_iter().collect(),
            manifest,
            config,
            log_path: log_path.to_path_buf(),
            sessions: RwLock::new(
                sessions
                    .into_iter()
                    .map(|(k, v)| (k, Arc::new(Mutex::new(v))))
                    .collect(),
            ),
            appender: Mutex::new(Appender::open(log_path)?),
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    fn state(&self, session_id: &str) -> Result<Arc<Mutex<SessionState>>, TrialError> {
        self.sessions
            .read()
            .get(session_id)
            .cloned()
            .ok_or_else(|| TrialError::UnknownSession(session_id.to_string()))
    }

    pub fn create_session(&self, request: &SessionRequest) -> Result<Session, TrialError> {
        if !self.config.exposures_ms.contains(&request.exposure_ms) {
            return Err(TrialError::Validation(format!(
                "exposure_ms {} not in {:?}",
                request.exposure_ms, self.config.exposures_ms
            )));
        }
        let seed = request.seed.unwrap_or_else(|| rand::rng().random());
        let order = select_stimuli(
            &self.manifest,
            &request.filter,
            request.length,
            &mut rng_from_seed(seed),
        )?;
        let session = Session {
            session_id: format!("{:032x}", rand::rng().random::<u128>()),
            exposure_ms: request.exposure_ms,
            seed,
            filter: request.filter.clone(),
            order,
            cursor: 0,
            created_at: now_ms(),
        };
        self.appender.lock().append(&LogEvent::Session(session.clone()))?;
        self.sessions.write().insert(
            session.session_id.clone(),
            Arc::new(Mutex::new(SessionState::new(session.clone()))),
        );
        Ok(session)
    }

    pub fn session(&self, session_id: &str) -> Result<Session, TrialError> {
        Ok(self.state(session_id)?.lock().session.clone())
    }

    /// The current stimulus, unchanged until it is answered.
    pub fn next_stimulus(&self, session_id: &str) -> Result<NextStimulus, TrialError> {
        let state = self.state(session_id)?;
        let mut state = state.lock();
        let total = state.session.order.len();
        let index = state.session.cursor;
        let Some(image_id) = state.session.order.get(index).cloned() else {
            return Ok(NextStimulus::End { total });
        };
        state.served_at.get_or_insert_with(now_ms);
        Ok(NextStimulus::Stimulus(StimulusDescriptor {
            index,
            total,
            image_url: format!("/images/{image_id}"),
            image_id,
            exposure_ms: state.session.exposure_ms,
            choices: self.classes.clone(),
            mask: self.config.mask.clone(),
        }))
    }

    pub fn record_response(
        &self,
        session_id: &str,
        submission: &ResponseSubmission,
    ) -> Result<Ack, TrialError> {
        let state = self.state(session_id)?;
        let mut state = state.lock();
        if state.answered.contains(&submission.image_id) {
            return Err(TrialError::Conflict(format!(
                "`{}` already answered",
                submission.image_id
            )));
        }
        let current = state.session.order.get(state.session.cursor);
        if current != Some(&submission.image_id) {
            return Err(TrialError::Conflict(match current {
                Some(id) => format!("`{}` is not the current stimulus `{id}`", submission.image_id),
                None => "session is complete".to_string(),
            }));
        }
        let Some(served_at) = state.served_at else {
            return Err(TrialError::Conflict(format!(
                "`{}` has not been served",
                submission.image_id
            )));
        };
        if !self.classes.contains(&submission.chosen_label) {
            return Err(TrialError::Validation(format!(
                "label {} not in class set {:?}",
                submission.chosen_label, self.classes
            )));
        }
        if !submission.response_ms.is_finite() || submission.response_ms < 0.0 {
            return Err(TrialError::Validation(format!(
                "response_ms must be a non-negative number, got {}",
                submission.response_ms
            )));
        }
        let response = TrialResponse {
            session_id: session_id.to_string(),
            image_id: submission.image_id.clone(),
            chosen_label: submission.chosen_label,
            response_ms: submission.response_ms,
            served_at,
            recorded_at: now_ms(),
        };
        self.appender
            .lock()
            .append(&LogEvent::Response(response.clone()))?;
        state.apply(response);
        Ok(Ack {
            index: state.session.cursor - 1,
            remaining: state.session.order.len() - state.session.cursor,
        })
    }

    /// Responses of the selected sessions, oldest session first. Unknown ids
    /// are skipped.
    pub fn responses(&self, filter: &SessionFilter) -> Vec<TrialResponse> {
        let sessions = self.sessions.read();
        let mut chosen: Vec<&Arc<Mutex<SessionState>>> = match filter {
            SessionFilter::All => sessions.values().collect(),
            SessionFilter::Ids(ids) => {
                let ids: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
                ids.into_iter().filter_map(|id| sessions.get(id)).collect()
            }
        };
        let mut out: Vec<(u64, String, Vec<TrialResponse>)> = chosen
            .drain(..)
            .map(|s| {
                let s = s.lock();
                (
                    s.session.created_at,
                    s.session.session_id.clone(),
                    s.responses.clone(),
                )
            })
            .collect();
        out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        out.into_iter().flat_map(|(_, _, r)| r).collect()
    }

    pub fn human_predictions(&self, filter: &SessionFilter) -> PredictionSet {
        let rows: Vec<PredictionRow> = self
            .responses(filter)
            .into_iter()
            .map(|r| PredictionRow {
                image_id: r.image_id,
                ranked: vec![r.chosen_label],
                response_ms: Some(r.response_ms),
                source: Some(format!("human:{}", r.session_id)),
            })
            .collect();
        let source = match filter {
            SessionFilter::Ids(ids) if ids.len() == 1 => format!("human:{}", ids[0]),
            _ => "human".to_string(),
        };
        PredictionSet::new(source, rows)
    }

    /// Predictions CSV of the selected sessions' responses.
    pub fn export_human_predictions(&self, filter: &SessionFilter) -> String {
        let mut buf = Vec::new();
        write_predictions(&mut buf, &self.human_predictions(filter)).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
