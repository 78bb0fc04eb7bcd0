use std::fmt;

use super::ast::Span;

/// Error category, stable across the parse/validate/evaluate pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DslErrorKind {
    ParseError,
    UnknownIdentifier,
    TypeError,
    DuplicateName,
    NonFiniteValue,
    DomainError,
    ClipBoundsError,
}

impl DslErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            DslErrorKind::ParseError => "parse error",
            DslErrorKind::UnknownIdentifier => "unknown identifier",
            DslErrorKind::TypeError => "type error",
            DslErrorKind::DuplicateName => "duplicate name",
            DslErrorKind::NonFiniteValue => "non-finite value",
            DslErrorKind::DomainError => "domain error",
            DslErrorKind::ClipBoundsError => "clip bounds error",
        }
    }
}

/// A single-line diagnostic with a source position.
///
/// The rendered form is fed verbatim back into repair prompts, so it must
/// stay one line and carry everything needed to fix the program.
#[derive(Debug, Clone, PartialEq)]
pub struct DslError {
    pub kind: DslErrorKind,
    pub message: String,
    pub span: Span,
}

impl DslError {
    pub fn new(kind: DslErrorKind, span: Span, message: impl Into<String>) -> Self {
        DslError {
            kind,
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind.name(), self.span, self.message)
    }
}

impl std::error::Error for DslError {}
