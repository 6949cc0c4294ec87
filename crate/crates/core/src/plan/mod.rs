//! Measure-wise structural plans: extraction from a score, sparse pivot
//! selection, and the JSON interchange format (`docs/plan-schema.md`).

mod json;
mod pivots;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::constraints::ConstraintTable;
use crate::rational::{rat, rat_int, Rational};
use crate::score::{pitch_class_set, KeySignature, Score, TimeSignature};

pub use json::{read_plan, write_plan, SchemaError};
pub(crate) use json::{decimal_to_rational, rational_to_number};
pub use pivots::{
    change_scores, select_pivots, weight_profiles, PivotSelection, WeightProfile,
};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot extract a plan from an empty score")]
pub struct EmptyScoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Density {
    Low,
    Medium,
    High,
}

impl Density {
    pub fn as_str(&self) -> &'static str {
        match self {
            Density::Low => "low",
            Density::Medium => "medium",
            Density::High => "high",
        }
    }

    pub fn level(&self) -> i64 {
        match self {
            Density::Low => 0,
            Density::Medium => 1,
            Density::High => 2,
        }
    }

    pub fn from_name(s: &str) -> Option<Density> {
        match s {
            "low" => Some(Density::Low),
            "medium" => Some(Density::Medium),
            "high" => Some(Density::High),
            _ => None,
        }
    }
}

/// Density thresholds in note events per quarter note of measure capacity.
/// Chords count once. Below `medium_from` is low; above `high_above` is high.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityThresholds {
    pub medium_from: Rational,
    pub high_above: Rational,
}

impl Default for DensityThresholds {
    fn default() -> Self {
        DensityThresholds { medium_from: rat_int(1), high_above: rat(5, 2) }
    }
}

impl DensityThresholds {
    pub fn classify(&self, notes_per_quarter: Rational) -> Density {
        if notes_per_quarter < self.medium_from {
            Density::Low
        } else if notes_per_quarter <= self.high_above {
            Density::Medium
        } else {
            Density::High
        }
    }
}

/// Per-measure structural descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurePlan {
    pub index: usize,
    pub instruments: BTreeSet<String>,
    pub pitch_range: Option<(u8, u8)>,
    pub density: Density,
    pub tempo_qpm: Rational,
    pub time_signature: TimeSignature,
    pub key_signature: KeySignature,
    pub chord_pcs: BTreeSet<u8>,
    pub dynamics: Option<String>,
}

/// A whole-piece plan. Dense plans carry one entry per measure; sparse plans
/// carry a strictly increasing subset of measure indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanDocument {
    pub n_measures: usize,
    pub genre: Option<String>,
    pub instrumentation: BTreeSet<String>,
    pub measures: Vec<MeasurePlan>,
}

impl PlanDocument {
    pub fn is_dense(&self) -> bool {
        self.measures.len() == self.n_measures
            && self.measures.iter().enumerate().all(|(i, m)| m.index == i)
    }

    /// Restrict a dense plan to the given measure indices.
    pub fn sparse_subset(&self, indices: &[usize]) -> PlanDocument {
        let measures = self
            .measures
            .iter()
            .filter(|m| indices.contains(&m.index))
            .cloned()
            .collect();
        PlanDocument {
            n_measures: self.n_measures,
            genre: self.genre.clone(),
            instrumentation: self.instrumentation.clone(),
            measures,
        }
    }
}

/// Derive the dense measure-wise plan from a score. Instrument names are
/// resolved to canonical form through the constraint table.
pub fn extract_plan(
    score: &Score,
    table: &ConstraintTable,
) -> Result<PlanDocument, EmptyScoreError> {
    extract_plan_with(score, table, DensityThresholds::default())
}

pub fn extract_plan_with(
    score: &Score,
    table: &ConstraintTable,
    thresholds: DensityThresholds,
) -> Result<PlanDocument, EmptyScoreError> {
    if score.parts.is_empty() || score.measure_count == 0 {
        return Err(EmptyScoreError);
    }

    let canonical: Vec<String> = score
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

    let mut measures = Vec::with_capacity(score.measure_count);
    for index in 0..score.measure_count {
        let mut instruments = BTreeSet::new();
        let mut min_midi: Option<u8> = None;
        let mut max_midi: Option<u8> = None;
        let mut event_count: i64 = 0;
        let mut chord_pcs = BTreeSet::new();
        let mut dynamics: Option<(Rational, String)> = None;
        let mut signature: Option<(TimeSignature, KeySignature)> = None;

        for (pi, part) in score.parts.iter().enumerate() {
            let Some(measure) = part.measures.get(index) else { continue };
            if signature.is_none() {
                signature = Some((measure.time_signature, measure.key_signature));
            }
            if !measure.notes.is_empty() {
                instruments.insert(canonical[pi].clone());
            }
            event_count += measure.notes.len() as i64;
            chord_pcs.extend(pitch_class_set(measure));
            for event in &measure.notes {
                for pitch in &event.pitches {
                    let midi = pitch.midi();
                    min_midi = Some(min_midi.map_or(midi, |m| m.min(midi)));
                    max_midi = Some(max_midi.map_or(midi, |m| m.max(midi)));
                }
                if let Some(d) = &event.dynamic {
                    let replace = dynamics.as_ref().is_none_or(|(at, _)| event.onset > *at);
                    if replace {
                        dynamics = Some((event.onset, d.clone()));
                    }
                }
            }
        }

        let (time_signature, key_signature) =
            signature.unwrap_or((TimeSignature::common_time(), KeySignature::c_major()));
        let capacity = time_signature.capacity();
        let notes_per_quarter = if capacity > rat_int(0) {
            rat_int(event_count) / capacity
        } else {
            rat_int(0)
        };

        measures.push(MeasurePlan {
            index,
            instruments,
            pitch_range: min_midi.zip(max_midi),
            density: thresholds.classify(notes_per_quarter),
            tempo_qpm: score.prevailing_tempo(index),
            time_signature,
            key_signature,
            chord_pcs,
            dynamics: dynamics.map(|(_, d)| d),
        });
    }

    let instrumentation = measures
        .iter()
        .flat_map(|m| m.instruments.iter().cloned())
        .collect();

    Ok(PlanDocument {
        n_measures: score.measure_count,
        genre: score.genre.clone(),
        instrumentation,
        measures,
    })
}
