//! Utilization metrics (coverage, active density) and plan-versus-score
//! matching for tempo, key, time signature, and instrumentation.

use std::collections::BTreeSet;

use crate::constraints::{ConstraintTable, Resolution};
use crate::plan::PlanDocument;
use crate::rational::{rat, rat_int, Rational};
use crate::score::{KeySignature, Part, Score, TimeSignature};

use super::{macro_average, pct};

// ── Utilization ───────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct PartUtilization {
    pub part_id: String,
    pub instrument: String,
    pub m_first: Option<usize>,
    pub m_last: Option<usize>,
    pub active_measure_count: usize,
    pub coverage_pct: Rational,
    pub density_pct: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationResult {
    pub per_part: Vec<PartUtilization>,
    pub mean_coverage_pct: Option<Rational>,
    pub mean_density_pct: Option<Rational>,
}

/// Span from the first to the last note-bearing measure over the total
/// measure count. Parts without notes score zero: the formula is undefined
/// there and a silent track is the failure this metric exists to catch.
pub fn coverage_ratio(part: &Part, m_total: usize) -> Rational {
    let first = part.measures.iter().position(|m| !m.notes.is_empty());
    let last = part.measures.iter().rposition(|m| !m.notes.is_empty());
    match (first, last, m_total) {
        (Some(f), Some(l), total) if total > 0 => pct((l - f + 1) as i64, total as i64),
        _ => rat_int(0),
    }
}

/// Fraction of measures containing at least one note event.
pub fn active_density(part: &Part, m_total: usize) -> Rational {
    if m_total == 0 {
        return rat_int(0);
    }
    let active = part.measures.iter().filter(|m| !m.notes.is_empty()).count();
    pct(active as i64, m_total as i64)
}

pub fn evaluate_utilization(score: &Score, table: &ConstraintTable) -> UtilizationResult {
    let m_total = score.measure_count;
    let per_part: Vec<PartUtilization> = score
        .parts
        .iter()
        .map(|part| {
            let (resolution, _) = table.resolve_part(&part.declared_name, part.midi_program);
            let first = part.measures.iter().position(|m| !m.notes.is_empty());
            let last = part.measures.iter().rposition(|m| !m.notes.is_empty());
            PartUtilization {
                part_id: part.part_id.clone(),
                instrument: resolution.canonical().to_string(),
                m_first: first,
                m_last: last,
                active_measure_count: part.measures.iter().filter(|m| !m.notes.is_empty()).count(),
                coverage_pct: coverage_ratio(part, m_total),
                density_pct: active_density(part, m_total),
            }
        })
        .collect();
    UtilizationResult {
        mean_coverage_pct: macro_average(per_part.iter().map(|p| p.coverage_pct)).ok(),
        mean_density_pct: macro_average(per_part.iter().map(|p| p.density_pct)).ok(),
        per_part,
    }
}

// ── Metadata matching ────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct TempoAdherence {
    pub plan_qpm: Rational,
    /// First tempo of the score in quarter-note BPM; `None` when the score
    /// declares no tempo (no match, reported as a warning).
    pub score_qpm: Option<Rational>,
    pub matched: bool,
    /// A factor-of-two beat-unit reinterpretation would have matched.
    pub near_miss: bool,
}

/// Compare the plan tempo to the score's first tempo, both in quarter-note
/// BPM, at a 2% relative tolerance.
pub fn tempo_match(plan_qpm: Rational, score: &Score) -> TempoAdherence {
    let score_qpm = score.first_tempo();
    let within = |candidate: Rational| -> bool {
        let diff = if candidate >= plan_qpm { candidate - plan_qpm } else { plan_qpm - candidate };
        diff * rat_int(50) <= plan_qpm // diff / plan <= 1/50
    };
    match score_qpm {
        None => TempoAdherence { plan_qpm, score_qpm: None, matched: false, near_miss: false },
        Some(actual) => {
            let matched = within(actual);
            let near_miss =
                !matched && (within(actual * rat_int(2)) || within(actual / rat_int(2)));
            TempoAdherence { plan_qpm, score_qpm: Some(actual), matched, near_miss }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyMatch {
    Exact,
    Relative,
    None,
}

impl KeyMatch {
    /// Matched at the accepting level: exact or relative major/minor.
    pub fn accepted(&self) -> bool {
        !matches!(self, KeyMatch::None)
    }
}

/// Exact on (tonic, mode); otherwise relative iff the signatures share a
/// fifths value (relative major/minor equivalents).
pub fn key_match(plan: &KeySignature, score: &KeySignature) -> KeyMatch {
    if plan.tonic_step == score.tonic_step
        && plan.tonic_alter == score.tonic_alter
        && plan.mode == score.mode
    {
        KeyMatch::Exact
    } else if plan.fifths == score.fifths {
        KeyMatch::Relative
    } else {
        KeyMatch::None
    }
}

/// Literal numerator/denominator equality: 6/8 and 3/4 do not match.
pub fn time_match(plan: &TimeSignature, score: &TimeSignature) -> bool {
    plan.numerator == score.numerator && plan.denominator == score.denominator
}

/// One name's resolution, recorded in the match trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameResolution {
    pub original: String,
    pub resolved: String,
    pub via_alias: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentMatch {
    /// Jaccard similarity of the canonical sets, as a percentage.
    pub pct: Rational,
    pub plan_trace: Vec<NameResolution>,
    pub score_trace: Vec<NameResolution>,
}

fn resolve_set(names: &BTreeSet<String>, table: &ConstraintTable) -> (BTreeSet<String>, Vec<NameResolution>) {
    let mut canon = BTreeSet::new();
    let mut trace = Vec::new();
    for name in names {
        let (resolution, _) = table.resolve_name(name);
        trace.push(NameResolution {
            original: name.clone(),
            resolved: resolution.canonical().to_string(),
            via_alias: matches!(resolution, Resolution::Alias { .. }),
        });
        canon.insert(resolution.canonical().to_string());
    }
    (canon, trace)
}

/// Jaccard similarity between two instrument-name sets after alias
/// normalization. Unresolvable names pass through in normalized form and
/// only match when string-equal.
pub fn instrument_match(
    plan_names: &BTreeSet<String>,
    score_names: &BTreeSet<String>,
    table: &ConstraintTable,
) -> InstrumentMatch {
    let (plan_canon, plan_trace) = resolve_set(plan_names, table);
    let (score_canon, score_trace) = resolve_set(score_names, table);
    let union = plan_canon.union(&score_canon).count() as i64;
    let intersection = plan_canon.intersection(&score_canon).count() as i64;
    let pct = if union == 0 { rat_int(100) } else { rat(100 * intersection, union) };
    InstrumentMatch { pct, plan_trace, score_trace }
}

/// Verdict interface for an out-of-process instrument-name judge. The
/// deterministic alias matcher below is the implementation shipped here;
/// a remote judge can be plugged in by implementing this trait.
pub trait InstrumentJudge {
    fn same_instrument(&self, a: &str, b: &str) -> bool;
}

pub struct AliasJudge<'a> {
    pub table: &'a ConstraintTable,
}

impl InstrumentJudge for AliasJudge<'_> {
    fn same_instrument(&self, a: &str, b: &str) -> bool {
        self.table.resolve_name(a).0.canonical() == self.table.resolve_name(b).0.canonical()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdherenceResult {
    pub tempo: Option<TempoAdherence>,
    pub key: Option<KeyMatch>,
    pub time: Option<bool>,
    pub instruments: InstrumentMatch,
}

/// Compare a plan's requested metadata against a score. Single requested
/// values are compared at the score's first measure; mid-piece changes are
/// not scored.
pub fn evaluate_adherence(
    plan: &PlanDocument,
    score: &Score,
    table: &ConstraintTable,
) -> AdherenceResult {
    let first_measure = score.parts.first().and_then(|p| p.measures.first());
    let plan_first = plan.measures.first();

    let tempo = plan_first.map(|m| tempo_match(m.tempo_qpm, score));
    let key = match (plan_first, first_measure) {
        (Some(p), Some(s)) => Some(key_match(&p.key_signature, &s.key_signature)),
        _ => None,
    };
    let time = match (plan_first, first_measure) {
        (Some(p), Some(s)) => Some(time_match(&p.time_signature, &s.time_signature)),
        _ => None,
    };

    let score_names: BTreeSet<String> = score
        .parts
        .iter()
        .map(|p| {
            table
                .resolve_part(&p.declared_name, p.midi_program)
                .0
                .canonical()
                .to_string()
        })
        .collect();
    let instruments = instrument_match(&plan.instrumentation, &score_names, table);

    AdherenceResult { tempo, key, time, instruments }
}
