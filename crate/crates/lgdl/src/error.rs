//! Engine errors: parse failures with source locations, and the runtime
//! error family the validation pipeline keys on.
//!
//! Runtime errors carry a call trace (innermost first) so that feedback
//! prompts can show how the failing goal was reached. Parse errors carry the
//! verbatim offending line; the `Display` form is
//! `line:col: kind: message: <offending line>`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A half-open region of source text, 1-based lines and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: u32,
    pub col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl SourceSpan {
    pub fn point(line: u32, col: u32) -> SourceSpan {
        SourceSpan { line, col, end_line: line, end_col: col }
    }

    /// Placeholder span for clauses created by the host (dynamic facts).
    pub fn synthetic() -> SourceSpan {
        SourceSpan::point(0, 0)
    }
}

/// What went wrong.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    /// Malformed source text.
    Parse,
    /// A called predicate has no clauses and is not a builtin.
    Existence { name: String, arity: usize },
    /// An insufficiently instantiated goal: unbound comparison operand,
    /// unsafe negation, or a variable in call position.
    Instantiation,
    /// The derivation exceeded the configured depth limit.
    DepthLimit,
    /// A term of the wrong shape where a specific one was required.
    Type,
}

impl ErrorKind {
    pub fn label(&self) -> &'static str {
        match self {
            ErrorKind::Parse => "parse_error",
            ErrorKind::Existence { .. } => "existence_error",
            ErrorKind::Instantiation => "instantiation_error",
            ErrorKind::DepthLimit => "depth_limit",
            ErrorKind::Type => "type_error",
        }
    }
}

/// Where an error was detected: a source location with the verbatim line,
/// or a call trace for runtime errors (innermost call first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Location {
    Source { span: SourceSpan, line_text: String },
    Trace(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineError {
    pub kind: ErrorKind,
    pub message: String,
    pub location: Option<Location>,
}

impl EngineError {
    pub fn parse(message: impl Into<String>, span: SourceSpan, line_text: impl Into<String>) -> EngineError {
        EngineError {
            kind: ErrorKind::Parse,
            message: message.into(),
            location: Some(Location::Source { span, line_text: line_text.into() }),
        }
    }

    pub fn existence(name: impl Into<String>, arity: usize, trace: Vec<String>) -> EngineError {
        let name = name.into();
        EngineError {
            message: format!("unknown predicate {name}/{arity}"),
            kind: ErrorKind::Existence { name, arity },
            location: Some(Location::Trace(trace)),
        }
    }

    pub fn instantiation(message: impl Into<String>, trace: Vec<String>) -> EngineError {
        EngineError {
            kind: ErrorKind::Instantiation,
            message: message.into(),
            location: Some(Location::Trace(trace)),
        }
    }

    pub fn depth_limit(limit: usize, trace: Vec<String>) -> EngineError {
        EngineError {
            kind: ErrorKind::DepthLimit,
            message: format!("derivation exceeded depth limit {limit}"),
            location: Some(Location::Trace(trace)),
        }
    }

    pub fn type_error(message: impl Into<String>, trace: Vec<String>) -> EngineError {
        EngineError {
            kind: ErrorKind::Type,
            message: message.into(),
            location: Some(Location::Trace(trace)),
        }
    }

    /// The verbatim offending line, when the error has one.
    pub fn offending_line(&self) -> Option<&str> {
        match &self.location {
            Some(Location::Source { line_text, .. }) => Some(line_text),
            _ => None,
        }
    }

    pub fn span(&self) -> Option<SourceSpan> {
        match &self.location {
            Some(Location::Source { span, .. }) => Some(*span),
            _ => None,
        }
    }
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Some(Location::Source { span, line_text }) => {
                write!(f, "{}:{}: {}: {}: {}", span.line, span.col, self.kind.label(), self.message, line_text)
            }
            Some(Location::Trace(frames)) if !frames.is_empty() => {
                write!(f, "{}: {} (in {})", self.kind.label(), self.message, frames.join(" <- "))
            }
            _ => write!(f, "{}: {}", self.kind.label(), self.message),
        }
    }
}

impl std::error::Error for EngineError {}
