//! Engraving-clarity scores: rhythmic jitter against the 64th-note grid,
//! tie density, diatonic accidental consistency, and enharmonic spelling
//! direction.

use crate::constraints::ConstraintTable;
use crate::rational::{rat, rat_int, Rational};
use crate::score::{diatonic_pitch_classes, key_direction, KeyDirection, Part, Score};

use super::{macro_average, pct, NoApplicableMetrics};

#[derive(Debug, Clone, PartialEq)]
pub struct PartReadability {
    pub part_id: String,
    pub instrument: String,
    pub jitter_pct: Option<Rational>,
    pub tie_complexity_pct: Option<Rational>,
    pub accidental_consistency_pct: Option<Rational>,
    pub enharmonic_pct: Option<Rational>,
}

impl PartReadability {
    pub fn applicable(&self) -> impl Iterator<Item = Rational> + '_ {
        [
            self.jitter_pct,
            self.tie_complexity_pct,
            self.accidental_consistency_pct,
            self.enharmonic_pct,
        ]
        .into_iter()
        .flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadabilityResult {
    pub per_part: Vec<PartReadability>,
    pub total_pct: Option<Rational>,
}

/// 64th-note threshold: 1/16 of a quarter note.
fn grid_unit() -> Rational {
    rat(1, 16)
}

/// A note is jitter-flagged when its duration is a 64th or shorter, or its
/// onset misses the 64th-note grid from the measure start. Notes in an
/// explicitly notated tuplet check against the tuplet-scaled grid instead,
/// unless `strict` disables that exemption.
pub fn rhythmic_jitter_score(part: &Part, strict: bool) -> Option<Rational> {
    let mut total = 0i64;
    let mut clean = 0i64;
    for measure in &part.measures {
        for event in &measure.notes {
            total += 1;
            let grid = match event.tuplet {
                Some(ratio) if !strict => grid_unit() * ratio.scale(),
                _ => grid_unit(),
            };
            let short = event.duration <= grid;
            let off_grid = !(event.onset / grid).is_integer();
            if !short && !off_grid {
                clean += 1;
            }
        }
    }
    (total > 0).then(|| pct(clean, total))
}

/// 100 minus the percentage of tied notes; both halves of a tie count.
pub fn tie_complexity_score(part: &Part) -> Option<Rational> {
    let mut total = 0i64;
    let mut tied = 0i64;
    for measure in &part.measures {
        for event in &measure.notes {
            total += 1;
            if event.tie_forward || event.tie_backward {
                tied += 1;
            }
        }
    }
    (total > 0).then(|| pct(total - tied, total).max(rat_int(0)))
}

/// Percentage of pitches inside the diatonic collection of the prevailing
/// key signature. Minor keys use the natural minor scale.
pub fn accidental_consistency_score(part: &Part) -> Option<Rational> {
    let mut total = 0i64;
    let mut diatonic = 0i64;
    for measure in &part.measures {
        let scale = diatonic_pitch_classes(&measure.key_signature);
        for event in &measure.notes {
            for pitch in &event.pitches {
                total += 1;
                if scale.contains(&pitch.pitch_class()) {
                    diatonic += 1;
                }
            }
        }
    }
    (total > 0).then(|| pct(diatonic, total))
}

/// Share of explicit accidentals spelled with the key's direction: flats in
/// a sharp key (and sharps in a flat key) are violations; naturals never
/// are, and neutral keys have no violations. Scores 100 when the part has
/// notes but no explicit accidentals.
pub fn enharmonic_directionality_score(part: &Part) -> Option<Rational> {
    let mut pitches = 0i64;
    let mut explicit = 0i64;
    let mut violations = 0i64;
    for measure in &part.measures {
        let direction = key_direction(&measure.key_signature);
        for event in &measure.notes {
            for (pitch, &is_explicit) in event.pitches.iter().zip(&event.explicit_accidental) {
                pitches += 1;
                if !is_explicit {
                    continue;
                }
                explicit += 1;
                let violating = match direction {
                    KeyDirection::Sharp => pitch.alter < 0,
                    KeyDirection::Flat => pitch.alter > 0,
                    KeyDirection::Neutral => false,
                };
                if violating {
                    violations += 1;
                }
            }
        }
    }
    if pitches == 0 {
        None
    } else if explicit == 0 {
        Some(rat_int(100))
    } else {
        Some(pct(explicit - violations, explicit))
    }
}

pub fn total_readability(parts: &[PartReadability]) -> Result<Rational, NoApplicableMetrics> {
    macro_average(parts.iter().flat_map(|p| p.applicable()))
}

pub fn evaluate_readability(
    score: &Score,
    table: &ConstraintTable,
    jitter_strict: bool,
) -> ReadabilityResult {
    let per_part: Vec<PartReadability> = score
        .parts
        .iter()
        .map(|part| {
            let (resolution, _) = table.resolve_part(&part.declared_name, part.midi_program);
            PartReadability {
                part_id: part.part_id.clone(),
                instrument: resolution.canonical().to_string(),
                jitter_pct: rhythmic_jitter_score(part, jitter_strict),
                tie_complexity_pct: tie_complexity_score(part),
                accidental_consistency_pct: accidental_consistency_score(part),
                enharmonic_pct: enharmonic_directionality_score(part),
            }
        })
        .collect();
    let total_pct = total_readability(&per_part).ok();
    ReadabilityResult { per_part, total_pct }
}
