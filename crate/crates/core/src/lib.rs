//! Legal contracts as processes.
//!
//! A contract is a transition system: each state is the set of norms
//! (obligations and powers) currently in force, and each transition is a
//! party's fulfilment, violation, or power exercise. Rules written in the
//! `.pact` language define the state space implicitly; this crate parses
//! them, builds and analyses the explicit graph, monitors live performance
//! against a clock, and explores hypothetical scenarios.

pub mod corpus;
pub mod error;
pub mod explorer;
pub mod gateway;
pub mod lang;
pub mod monitor;
pub mod norm;
pub mod space;
pub mod testkit;

pub use error::{EngineError, MonitorError};
pub use lang::{parse, pretty_print, validate, Diagnostic, Severity, SourceSpan};
pub use monitor::{Session, TransitionRecord};
pub use norm::*;
pub use space::{build_graph, StateGraph};
