//! Human recognition trials over a generated polygon dataset.
//!
//! A [`TrialStore`] owns the sessions and an append-only JSONL response log;
//! [`router`] exposes it over HTTP for the browser client. Responses leave
//! the service as an ordinary predictions CSV via
//! [`TrialStore::export_human_predictions`], so human and model results go
//! through the same evaluation code.

mod error;
mod log_file;
mod selection;
mod service;
mod store;

pub use error::TrialError;
pub use log_file::LogEvent;
pub use selection::{select_stimuli, StimulusFilter};
pub use service::{router, serve, AppState};
pub use store::{
    Ack, NextStimulus, ResponseSubmission, Session, SessionFilter, SessionRequest, StimulusDescriptor,
    TrialConfig, TrialResponse, TrialStore, DEFAULT_EXPOSURES_MS,
};
