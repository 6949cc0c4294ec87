//! Interleaved ABC notation: parsing into the score IR, structural
//! validation, and canonical serialization.
//!
//! The supported subset is frozen and documented in `docs/abc-subset.md`.
//! Highlights: header fields `X T C R L M Q K V` plus `%%score` and
//! `%%MIDI program`; body notes with `^ _ =` accidentals and measure-scoped
//! propagation, chords, ties, rests (`z`/`x`/`Z`), tuplets `(p:q:r` for
//! p in 2..=9, voice overlay `&`, inline `[M:]` `[K:]` `[Q:]` changes at
//! measure starts, and `!dynamic!` markings.

mod parse;
mod serialize;
mod validate;

use thiserror::Error;

pub use parse::{parse_abc, parse_abc_with_warnings, AbcDocument, HeaderField, Parsed, VoiceDecl};
pub use serialize::serialize_abc;
pub use validate::{validate, validate_source, Issue, IssueCode, Severity, ValidationReport};

/// What went wrong structurally (as opposed to lexically).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    MissingKey,
    UndeclaredVoice,
    NoMusic,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}:{col}: {message}")]
    Lex { line: u32, col: u32, message: String },
    #[error("line {line}: {message}")]
    Structure { kind: StructureKind, line: u32, message: String },
    #[error("line {line}:{col}: {message}")]
    Range { line: u32, col: u32, message: String },
}

impl ParseError {
    pub fn line(&self) -> u32 {
        match self {
            ParseError::Lex { line, .. }
            | ParseError::Structure { line, .. }
            | ParseError::Range { line, .. } => *line,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SerializeError {
    #[error("score has no measures")]
    EmptyScore,
    #[error("duration {0} is not representable in the supported notation")]
    Unrepresentable(String),
}
