//! Violation-based playability scores: pitch range, chord span, monophonic
//! correctness, and rhythmic overlap, macro-averaged across instruments.
//! 100% means perfect adherence to the instrument's physical constraints.

use std::collections::BTreeSet;

use crate::constraints::{ConstraintTable, InstrumentConstraints};
use crate::rational::{rat_int, Rational};
use crate::score::{NoteEvent, Part, Score};

use super::{macro_average, measure_starts, pct, NoApplicableMetrics};

#[derive(Debug, Clone, PartialEq)]
pub struct PartPlayability {
    pub part_id: String,
    pub instrument: String,
    /// True when no constraints entry matched and the permissive default
    /// applied; surfaced as a report warning.
    pub fallback_constraints: bool,
    pub pitch_range_pct: Option<Rational>,
    pub pitch_span_pct: Option<Rational>,
    pub monophonic_pct: Option<Rational>,
    pub overlap_pct: Option<Rational>,
}

impl PartPlayability {
    pub fn applicable(&self) -> impl Iterator<Item = Rational> + '_ {
        [self.pitch_range_pct, self.pitch_span_pct, self.monophonic_pct, self.overlap_pct]
            .into_iter()
            .flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayabilityResult {
    pub per_part: Vec<PartPlayability>,
    pub total_pct: Option<Rational>,
}

/// Ratio of pitches inside the instrument's MIDI range; chords contribute
/// one count per pitch. Not applicable for parts without pitches.
pub fn pitch_range_score(part: &Part, c: &InstrumentConstraints) -> Option<Rational> {
    let mut total = 0i64;
    let mut in_range = 0i64;
    for event in events(part) {
        for pitch in &event.pitches {
            total += 1;
            if c.in_range(pitch.midi()) {
                in_range += 1;
            }
        }
    }
    (total > 0).then(|| pct(in_range, total))
}

/// Ratio of chords whose semitone span stays within the instrument's hand
/// span. Single notes are not chords; unbounded spans always score 100.
pub fn pitch_span_score(part: &Part, c: &InstrumentConstraints) -> Option<Rational> {
    let mut chords = 0i64;
    let mut within = 0i64;
    for event in events(part) {
        if !event.is_chord() {
            continue;
        }
        chords += 1;
        let min = event.pitches.iter().map(|p| p.midi()).min().expect("chord is non-empty");
        let max = event.pitches.iter().map(|p| p.midi()).max().expect("chord is non-empty");
        let ok = match c.max_span.limit() {
            None => true,
            Some(limit) => max - min <= limit,
        };
        if ok {
            within += 1;
        }
    }
    (chords > 0).then(|| pct(within, chords))
}

/// Percentage of onset instants carrying a single sounding pitch. Applies to
/// monophonic instruments only.
pub fn monophonic_score(part: &Part, c: &InstrumentConstraints) -> Option<Rational> {
    if !c.monophonic {
        return None;
    }
    let timeline = absolute_events(part);
    if timeline.is_empty() {
        return None;
    }
    let onsets: BTreeSet<Rational> = timeline.iter().map(|(onset, _, _)| *onset).collect();
    let mut single = 0i64;
    for &instant in &onsets {
        let sounding: usize = timeline
            .iter()
            .filter(|(onset, offset, _)| *onset <= instant && instant < *offset)
            .map(|(_, _, pitches)| pitches)
            .sum();
        if sounding == 1 {
            single += 1;
        }
    }
    Some(pct(single, onsets.len() as i64))
}

/// Percentage of adjacent note pairs without unintentional overlap: a note
/// may not start before the preceding note's offset. Exact adjacency is not
/// a violation, and tied pairs are merged first. Monophonic instruments only.
pub fn rhythmic_overlap_score(part: &Part, c: &InstrumentConstraints) -> Option<Rational> {
    if !c.monophonic {
        return None;
    }
    let merged = merge_ties(part);
    if merged.is_empty() {
        return None;
    }
    if merged.len() == 1 {
        return Some(rat_int(100));
    }
    let pairs = (merged.len() - 1) as i64;
    let violations = merged
        .windows(2)
        .filter(|w| w[1].0 < w[0].1) // onset strictly before preceding offset
        .count() as i64;
    Some(pct(pairs - violations, pairs))
}

/// Macro-average over every applicable (instrument, constituent) score.
pub fn total_playability(parts: &[PartPlayability]) -> Result<Rational, NoApplicableMetrics> {
    macro_average(parts.iter().flat_map(|p| p.applicable()))
}

pub fn evaluate_playability(score: &Score, table: &ConstraintTable) -> PlayabilityResult {
    let per_part: Vec<PartPlayability> = score
        .parts
        .iter()
        .map(|part| {
            let (resolution, c) = table.resolve_part(&part.declared_name, part.midi_program);
            PartPlayability {
                part_id: part.part_id.clone(),
                instrument: resolution.canonical().to_string(),
                fallback_constraints: resolution.is_fallback(),
                pitch_range_pct: pitch_range_score(part, c),
                pitch_span_pct: pitch_span_score(part, c),
                monophonic_pct: monophonic_score(part, c),
                overlap_pct: rhythmic_overlap_score(part, c),
            }
        })
        .collect();
    let total_pct = total_playability(&per_part).ok();
    PlayabilityResult { per_part, total_pct }
}

fn events(part: &Part) -> impl Iterator<Item = &NoteEvent> {
    part.measures.iter().flat_map(|m| m.notes.iter())
}

/// (absolute onset, absolute offset, pitch count) per event, sorted by onset.
fn absolute_events(part: &Part) -> Vec<(Rational, Rational, usize)> {
    let starts = measure_starts(part);
    let mut events: Vec<(Rational, Rational, usize)> = part
        .measures
        .iter()
        .zip(&starts)
        .flat_map(|(m, start)| {
            m.notes
                .iter()
                .map(move |e| (*start + e.onset, *start + e.offset(), e.pitches.len()))
        })
        .collect();
    events.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    events
}

/// Events in absolute time with tie chains merged into single notes:
/// a forward tie meeting a backward tie on a shared pitch at the exact
/// offset is one sustained note.
fn merge_ties(part: &Part) -> Vec<(Rational, Rational)> {
    let starts = measure_starts(part);
    let mut raw: Vec<(Rational, Rational, &NoteEvent)> = part
        .measures
        .iter()
        .zip(&starts)
        .flat_map(|(m, start)| {
            m.notes
                .iter()
                .map(move |e| (*start + e.onset, *start + e.offset(), e))
        })
        .collect();
    raw.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(raw.len());
    let mut pending_tie: Option<(&NoteEvent, Rational)> = None;
    for (onset, offset, event) in raw {
        let absorbed = match &pending_tie {
            Some((prev, prev_offset)) => {
                prev.tie_forward
                    && event.tie_backward
                    && onset == *prev_offset
                    && prev
                        .pitches
                        .iter()
                        .any(|p| event.pitches.iter().any(|q| q.midi() == p.midi()))
            }
            None => false,
        };
        if absorbed {
            let last = merged.last_mut().expect("pending tie implies a merged note");
            last.1 = offset;
        } else {
            merged.push((onset, offset));
        }
        pending_tie = Some((event, offset));
    }
    merged
}
