//! The `.pact` contract language.
//!
//! ```text
//! contract pizza
//! agents s, p
//! proposition alpha "pizza delivered" by s attrs{size="large", qty="1"}
//! proposition beta "price paid" by p attrs{amount=13.95}
//! config frame=persist violation_axiom=on state_bound=500
//! initially O(s, alpha)
//! rule deliver: O(s, alpha) -[ s: alpha @before(30) ]-> O(p, beta)
//! rule breach:  O(s, alpha) -[ not s: alpha / nonconforming+late ]-> not O(p, beta), O(s, phi)
//! rule pay:     O(p, beta) -[ p: beta ]-> terminated happy
//! ```

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::norm::{ContractSpec, PropId};

mod events;
pub mod lexer;
mod parser;
mod printer;
mod validate;

pub(crate) use events::line_of;
pub use events::{parse_event_line, parse_events};
pub use parser::parse_with_map;
pub use printer::pretty_print;
pub use validate::{validate, validate_with_map};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl SourceSpan {
    pub fn new(line: usize, col_start: usize, col_end: usize) -> Self {
        SourceSpan {
            line,
            col_start,
            col_end: col_end.max(col_start),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.line, self.col_start, self.col_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    /// Always present for diagnostics produced from source text.
    pub span: Option<SourceSpan>,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: Option<SourceSpan>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }

    pub fn warning(message: impl Into<String>, span: Option<SourceSpan>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            message: message.into(),
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.span {
            Some(span) => write!(f, "{sev} at {span}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// Where each declaration came from, for attaching spans to semantic diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub contract: Option<SourceSpan>,
    pub initial: Option<SourceSpan>,
    pub config: Option<SourceSpan>,
    pub rules: Vec<SourceSpan>,
    pub propositions: HashMap<PropId, SourceSpan>,
}

/// Parse `.pact` source into a spec. Rules keep their source order.
pub fn parse(source: &str) -> Result<ContractSpec, Vec<Diagnostic>> {
    parse_with_map(source).map(|(spec, _)| spec)
}

/// Result of parsing and validating source text in one go.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub spec: Option<ContractSpec>,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    /// The spec, only when parsing and validation produced no errors.
    pub fn valid_spec(&self) -> Option<&ContractSpec> {
        if self.has_errors() {
            None
        } else {
            self.spec.as_ref()
        }
    }
}

/// Parse then validate, with every diagnostic carrying a source span.
pub fn check_source(source: &str) -> CheckReport {
    match parse_with_map(source) {
        Ok((spec, map)) => {
            let diagnostics = validate_with_map(&spec, &map);
            CheckReport {
                spec: Some(spec),
                diagnostics,
            }
        }
        Err(diagnostics) => CheckReport {
            spec: None,
            diagnostics,
        },
    }
}
