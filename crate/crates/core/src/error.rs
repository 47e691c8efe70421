use thiserror::Error;

use crate::norm::{TerminalClass, Time};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("contract already terminated ({class})")]
    TerminalState { class: TerminalClass },

    #[error("rules {rules:?} terminate with conflicting classes")]
    TerminateConflict { rules: Vec<String> },

    #[error("transition `{label}` is not enabled in state {state}")]
    NotEnabled { label: String, state: String },

    #[error("state bound {bound} exceeded with {frontier} states still on the frontier")]
    StateBoundExceeded { bound: usize, frontier: usize },

    #[error("no rule is guarded by {atom}")]
    UnknownObligation { atom: String },

    #[error("invalid contract: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("stale timestamp {at}: session clock is already at {clock}")]
    StaleTimestamp { at: Time, clock: Time },

    #[error("session is terminated ({class}); no further events are accepted")]
    Terminated { class: TerminalClass },

    #[error("unexpected event: {reason}")]
    UnexpectedEvent { reason: String },

    #[error("malformed event line {line}: {reason}")]
    MalformedEvent { line: usize, reason: String },

    #[error("replay diverged at record {index}: {reason}")]
    ReplayMismatch { index: usize, reason: String },

    #[error(transparent)]
    Engine(#[from] EngineError),
}
