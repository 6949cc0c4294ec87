//! Structural validation: the file-validity check behind corpus "valid
//! files" percentages. A score is valid when every measure's written content
//! matches its time-signature capacity (allowing a short first or final
//! measure), all parts have equal measure counts, and every referenced voice
//! was declared.

use std::fmt;

use crate::score::Score;

use super::{parse_abc_with_warnings, ParseError, StructureKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueCode {
    MeasureOverfull,
    MeasureUnderfull,
    Anacrusis,
    FinalShortMeasure,
    PartLengthMismatch,
    UndeclaredVoice,
    MissingKey,
    NoMusic,
    SyntaxError,
    PitchOutOfRange,
    EmptyPart,
    MissingTempo,
    GraceNotesDropped,
    UnsupportedToken,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IssueCode::MeasureOverfull => "MEASURE_OVERFULL",
            IssueCode::MeasureUnderfull => "MEASURE_UNDERFULL",
            IssueCode::Anacrusis => "ANACRUSIS",
            IssueCode::FinalShortMeasure => "FINAL_SHORT_MEASURE",
            IssueCode::PartLengthMismatch => "PART_LENGTH_MISMATCH",
            IssueCode::UndeclaredVoice => "UNDECLARED_VOICE",
            IssueCode::MissingKey => "MISSING_KEY",
            IssueCode::NoMusic => "NO_MUSIC",
            IssueCode::SyntaxError => "SYNTAX_ERROR",
            IssueCode::PitchOutOfRange => "PITCH_OUT_OF_RANGE",
            IssueCode::EmptyPart => "EMPTY_PART",
            IssueCode::MissingTempo => "MISSING_TEMPO",
            IssueCode::GraceNotesDropped => "GRACE_NOTES_DROPPED",
            IssueCode::UnsupportedToken => "UNSUPPORTED_TOKEN",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub severity: Severity,
    pub code: IssueCode,
    pub measure_index: Option<usize>,
    pub part_id: Option<String>,
    pub message: String,
}

impl Issue {
    pub fn error(code: IssueCode, message: impl Into<String>) -> Self {
        Issue {
            severity: Severity::Error,
            code,
            measure_index: None,
            part_id: None,
            message: message.into(),
        }
    }

    pub fn warning(code: IssueCode, message: impl Into<String>) -> Self {
        Issue {
            severity: Severity::Warning,
            code,
            measure_index: None,
            part_id: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, part_id: &str, measure_index: usize) -> Self {
        self.part_id = Some(part_id.to_string());
        self.measure_index = Some(measure_index);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        !self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn has_code(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

/// Validate a parsed score. Always returns a report, never fails.
pub fn validate(score: &Score) -> ValidationReport {
    let mut report = ValidationReport::default();

    for part in &score.parts {
        let last = part.measures.len().saturating_sub(1);
        for measure in &part.measures {
            let content = measure.content_length();
            let capacity = measure.capacity();
            if content > capacity {
                report.issues.push(
                    Issue::error(
                        IssueCode::MeasureOverfull,
                        format!(
                            "measure {} of part {}: content {} quarter notes exceeds capacity {}",
                            measure.index, part.part_id, content, capacity
                        ),
                    )
                    .at(&part.part_id, measure.index),
                );
            } else if content < capacity {
                let (severity, code) = if measure.index == 0 {
                    (Severity::Warning, IssueCode::Anacrusis)
                } else if measure.index == last {
                    (Severity::Warning, IssueCode::FinalShortMeasure)
                } else {
                    (Severity::Error, IssueCode::MeasureUnderfull)
                };
                report.issues.push(Issue {
                    severity,
                    code,
                    measure_index: Some(measure.index),
                    part_id: Some(part.part_id.clone()),
                    message: format!(
                        "measure {} of part {}: content {} quarter notes under capacity {}",
                        measure.index, part.part_id, content, capacity
                    ),
                });
            }
        }
    }

    let counts: Vec<usize> = score.parts.iter().map(|p| p.measures.len()).collect();
    if counts.windows(2).any(|w| w[0] != w[1]) {
        let detail = score
            .parts
            .iter()
            .map(|p| format!("{}={}", p.part_id, p.measures.len()))
            .collect::<Vec<_>>()
            .join(", ");
        report.issues.push(Issue::error(
            IssueCode::PartLengthMismatch,
            format!("parts have unequal measure counts: {detail}"),
        ));
    }

    for part in &score.parts {
        if part.note_count() == 0 {
            report.issues.push(
                Issue::warning(
                    IssueCode::EmptyPart,
                    format!("part {} contains no notes", part.part_id),
                )
                .at(&part.part_id, 0),
            );
        }
    }

    if score.first_tempo().is_none() {
        report
            .issues
            .push(Issue::warning(IssueCode::MissingTempo, "score declares no tempo"));
    }

    report
}

/// Parse and validate in one step. Parse failures become error issues rather
/// than process failures; parse warnings are merged into the report.
pub fn validate_source(text: &str) -> (ValidationReport, Option<Score>) {
    match parse_abc_with_warnings(text) {
        Ok(parsed) => {
            let mut report = validate(&parsed.score);
            report.issues.extend(parsed.warnings);
            (report, Some(parsed.score))
        }
        Err(err) => {
            let code = match &err {
                ParseError::Lex { .. } => IssueCode::SyntaxError,
                ParseError::Structure { kind: StructureKind::MissingKey, .. } => {
                    IssueCode::MissingKey
                }
                ParseError::Structure { kind: StructureKind::UndeclaredVoice, .. } => {
                    IssueCode::UndeclaredVoice
                }
                ParseError::Structure { kind: StructureKind::NoMusic, .. } => IssueCode::NoMusic,
                ParseError::Range { .. } => IssueCode::PitchOutOfRange,
            };
            let report = ValidationReport {
                issues: vec![Issue::error(code, err.to_string())],
            };
            (report, None)
        }
    }
}
