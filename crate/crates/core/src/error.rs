use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("history already ends in pending action {0}")]
    PendingActionPresent(usize),

    #[error("history has no pending action")]
    MissingPendingAction,

    #[error("action {action} out of range for {count} actions")]
    ActionOutOfRange { action: usize, count: usize },

    #[error("percept {percept} out of range for {count} percepts")]
    PerceptOutOfRange { percept: usize, count: usize },

    #[error("semimeasure violation at {history}: {reason}")]
    SemimeasureViolation { history: String, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mixture members disagree on {0}")]
    IncompatibleMembers(String),

    #[error("history {history} does not extend the mixture's conditioning history {state}")]
    StateDesync { history: String, state: String },

    #[error("percept {percept} after action {action} has zero mixture probability at {history}")]
    ImpossibleObservation {
        action: usize,
        percept: usize,
        history: String,
    },

    #[error("degenerate posterior: member {0} has zero weight")]
    DegeneratePosterior(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether the error stems from user configuration rather than a failed run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter(_)
                | Error::SemimeasureViolation { .. }
                | Error::IncompatibleMembers(_)
        )
    }
}
