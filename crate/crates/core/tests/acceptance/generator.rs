//! Randomized score generation for round-trip and oracle testing.
//! Everything is seeded; a fixed seed reproduces the exact corpus.

use rand::rngs::StdRng;
use rand::Rng;

use scorelint_core::rational::{rat, rat_int, Rational};
use scorelint_core::score::{
    KeySignature, Measure, Mode, NoteEvent, Part, Score, SpelledPitch, Step, TimeSignature,
    TupletRatio,
};

pub struct GenConfig {
    pub max_parts: usize,
    pub max_measures: usize,
    pub allow_tuplets: bool,
    pub allow_layers: bool,
    pub allow_anacrusis: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_parts: 4,
            max_measures: 16,
            allow_tuplets: false,
            allow_layers: true,
            allow_anacrusis: true,
        }
    }
}

const INSTRUMENTS: &[(&str, u8, u8, bool)] = &[
    ("Violin", 55, 96, true),
    ("Flute", 60, 96, false),
    ("Cello", 36, 76, true),
    ("Piano", 36, 96, true),
    ("Oboe", 58, 91, false),
    ("Clarinet", 50, 94, false),
    ("Viola", 48, 88, true),
    ("Trumpet", 55, 82, false),
];

fn random_time_signature(rng: &mut StdRng) -> TimeSignature {
    let (n, d) = *[(4u32, 4u32), (3, 4), (2, 4), (6, 8)]
        .get(rng.random_range(0..4))
        .unwrap();
    TimeSignature::new(n, d).unwrap()
}

fn random_key(rng: &mut StdRng) -> KeySignature {
    let fifths = rng.random_range(-5i8..=5);
    let mode = if rng.random_bool(0.3) { Mode::Minor } else { Mode::Major };
    KeySignature::from_fifths(fifths, mode).unwrap()
}

/// Spell a MIDI value with a random enharmonic choice of |alter| <= 1.
pub fn spell_midi(rng: &mut StdRng, midi: u8) -> SpelledPitch {
    let pc = midi % 12;
    let options: &[(Step, i8)] = match pc {
        0 => &[(Step::C, 0), (Step::B, 1)],
        1 => &[(Step::C, 1), (Step::D, -1)],
        2 => &[(Step::D, 0)],
        3 => &[(Step::D, 1), (Step::E, -1)],
        4 => &[(Step::E, 0), (Step::F, -1)],
        5 => &[(Step::F, 0), (Step::E, 1)],
        6 => &[(Step::F, 1), (Step::G, -1)],
        7 => &[(Step::G, 0)],
        8 => &[(Step::G, 1), (Step::A, -1)],
        9 => &[(Step::A, 0)],
        10 => &[(Step::A, 1), (Step::B, -1)],
        _ => &[(Step::B, 0), (Step::C, -1)],
    };
    let (step, alter) = options[rng.random_range(0..options.len())];
    let octave = ((midi as i32 - step.pitch_class() as i32 - alter as i32) / 12 - 1) as i8;
    SpelledPitch::new(step, alter, octave).expect("spelling preserves the midi value")
}

fn note_event(
    rng: &mut StdRng,
    onset: Rational,
    duration: Rational,
    lo: u8,
    hi: u8,
    chords: bool,
    tuplet: Option<TupletRatio>,
) -> NoteEvent {
    let n_pitches = if chords && rng.random_bool(0.15) { rng.random_range(2..=3) } else { 1 };
    let mut midis = Vec::new();
    let base = rng.random_range(lo..=hi.saturating_sub(12).max(lo));
    midis.push(base);
    for _ in 1..n_pitches {
        let candidate = base + rng.random_range(1..=12);
        if candidate <= hi && !midis.contains(&candidate) {
            midis.push(candidate);
        }
    }
    let pitches: Vec<SpelledPitch> = midis.iter().map(|&m| spell_midi(rng, m)).collect();
    let n = pitches.len();
    let dynamic = if rng.random_bool(0.08) {
        Some(["p", "pp", "mp", "mf", "f", "ff"][rng.random_range(0..6)].to_string())
    } else {
        None
    };
    NoteEvent {
        onset,
        duration,
        pitches,
        explicit_accidental: vec![false; n],
        tie_forward: false,
        tie_backward: false,
        dynamic,
        tuplet,
    }
}

/// Fill `span` quarter notes with grid-quantized events and rests.
/// Returns the events plus whether a second overlapping layer was added.
fn fill_measure(
    rng: &mut StdRng,
    span: Rational,
    lo: u8,
    hi: u8,
    chords: bool,
    cfg: &GenConfig,
) -> (Vec<NoteEvent>, bool) {
    let menu = [rat(1, 4), rat(1, 2), rat(3, 4), rat_int(1), rat(3, 2), rat_int(2)];
    let mut events = Vec::new();
    let mut clock = rat_int(0);
    while clock < span {
        let remaining = span - clock;
        let choices: Vec<Rational> = menu.iter().copied().filter(|d| *d <= remaining).collect();
        let duration = choices[rng.random_range(0..choices.len())];
        if cfg.allow_tuplets && rng.random_bool(0.1) && remaining >= rat_int(1) {
            // triplet filling one quarter note
            let ratio = TupletRatio { notes: 3, in_time_of: 2 };
            for k in 0..3 {
                let onset = clock + rat(k, 3);
                events.push(note_event(rng, onset, rat(1, 3), lo, hi, false, Some(ratio)));
            }
            clock += rat_int(1);
            continue;
        }
        if rng.random_bool(0.18) {
            clock += duration; // rest
            continue;
        }
        events.push(note_event(rng, clock, duration, lo, hi, chords, None));
        clock += duration;
    }

    let mut layered = false;
    if cfg.allow_layers && rng.random_bool(0.1) {
        layered = true;
        let mut layer_clock = rat_int(0);
        while layer_clock < span {
            let remaining = span - layer_clock;
            let choices: Vec<Rational> =
                menu.iter().copied().filter(|d| *d <= remaining).collect();
            let duration = choices[rng.random_range(0..choices.len())];
            if rng.random_bool(0.4) {
                events.push(note_event(rng, layer_clock, duration, lo, hi, false, None));
            }
            layer_clock += duration;
        }
        events.sort_by_key(|a| a.onset);
    }
    (events, layered)
}

pub fn random_score(rng: &mut StdRng, cfg: &GenConfig) -> Score {
    let n_parts = rng.random_range(1..=cfg.max_parts);
    let n_measures = rng.random_range(1..=cfg.max_measures);
    let base_ts = random_time_signature(rng);
    let base_key = random_key(rng);
    let tempo: Option<Rational> =
        rng.random_bool(0.8).then(|| rat_int(rng.random_range(40..=208)));

    // Optional single mid-piece signature change, shared by all parts.
    let change_at = (n_measures > 2 && rng.random_bool(0.2))
        .then(|| rng.random_range(1..n_measures));
    let changed_ts = random_time_signature(rng);
    let changed_key = random_key(rng);

    let anacrusis = cfg.allow_anacrusis && rng.random_bool(0.15) && n_measures > 1;

    let mut parts = Vec::new();
    for pi in 0..n_parts {
        let (name, lo, hi, chords) = INSTRUMENTS[rng.random_range(0..INSTRUMENTS.len())];
        let mut measures = Vec::new();
        let mut layered_flags = Vec::new();
        for mi in 0..n_measures {
            let (ts, key) = match change_at {
                Some(at) if mi >= at => (changed_ts, changed_key),
                _ => (base_ts, base_key),
            };
            let capacity = ts.capacity();
            let span = if anacrusis && mi == 0 { capacity / rat_int(2) } else { capacity };
            let (notes, layered) = fill_measure(rng, span, lo, hi, chords, cfg);
            layered_flags.push(layered);
            measures.push(Measure {
                index: mi,
                time_signature: ts,
                key_signature: key,
                tempo_qpm: None,
                notes,
                span,
            });
        }
        // Sparse extra tempo events on the first part.
        if pi == 0 {
            if let Some(t) = tempo {
                measures[0].tempo_qpm = Some(t);
            }
            if n_measures > 3 && rng.random_bool(0.25) {
                let at = rng.random_range(1..n_measures);
                measures[at].tempo_qpm = Some(rat_int(rng.random_range(40..=208)));
            }
        }

        add_ties(rng, &mut measures, &layered_flags);

        parts.push(Part {
            part_id: format!("{}", pi + 1),
            declared_name: name.to_string(),
            midi_program: None,
            measures,
        });
    }

    Score {
        title: rng.random_bool(0.5).then(|| "Generated".to_string()),
        genre: rng.random_bool(0.3).then(|| "test".to_string()),
        parts,
        measure_count: n_measures,
    }
}

/// Tie adjacent equal-pitch events, only in single-layer measures so the
/// pair stays adjacent in serialized token order.
fn add_ties(rng: &mut StdRng, measures: &mut [Measure], layered: &[bool]) {
    for mi in 0..measures.len() {
        if layered[mi] {
            continue;
        }
        // within the measure
        for ei in 0..measures[mi].notes.len().saturating_sub(1) {
            let (a, b) = {
                let (left, right) = measures[mi].notes.split_at_mut(ei + 1);
                (&mut left[ei], &mut right[0])
            };
            if a.offset() == b.onset && !a.tuplet.is_some() && !b.tuplet.is_some() {
                let shared = a.pitches.iter().any(|p| b.pitches.iter().any(|q| q.midi() == p.midi()));
                if shared && rng.random_bool(0.2) {
                    a.tie_forward = true;
                    b.tie_backward = true;
                }
            }
        }
        // across the barline into the next single-layer measure
        if mi + 1 < measures.len() && !layered[mi + 1] {
            let span = measures[mi].span;
            let last_ok = measures[mi]
                .notes
                .last()
                .is_some_and(|e| e.offset() == span && e.tuplet.is_none());
            let first_ok = measures[mi + 1]
                .notes
                .first()
                .is_some_and(|e| e.onset == rat_int(0) && e.tuplet.is_none());
            if last_ok && first_ok {
                let last_midis: Vec<u8> = measures[mi]
                    .notes
                    .last()
                    .unwrap()
                    .pitches
                    .iter()
                    .map(|p| p.midi())
                    .collect();
                let first = measures[mi + 1].notes.first_mut().unwrap();
                let shared = first.pitches.iter().any(|p| last_midis.contains(&p.midi()));
                if shared && rng.random_bool(0.2) {
                    first.tie_backward = true;
                    measures[mi].notes.last_mut().unwrap().tie_forward = true;
                }
            }
        }
    }
}

/// The round-trip comparison tuple: per part, per measure, the signatures
/// and (midi, onset, duration, tie) event rows, plus the per-measure
/// prevailing tempo timeline.
#[derive(Debug, PartialEq, Eq)]
pub struct Signature {
    parts: Vec<Vec<MeasureSig>>,
    tempo_timeline: Vec<Rational>,
}

#[derive(Debug, PartialEq, Eq)]
struct MeasureSig {
    time: (u32, u32),
    key: (i8, bool),
    events: Vec<(Rational, Rational, Vec<u8>, bool, bool)>,
}

pub fn signature(score: &Score) -> Signature {
    let parts = score
        .parts
        .iter()
        .map(|part| {
            part.measures
                .iter()
                .map(|m| {
                    let mut events: Vec<(Rational, Rational, Vec<u8>, bool, bool)> = m
                        .notes
                        .iter()
                        .map(|e| {
                            let mut midis: Vec<u8> = e.pitches.iter().map(|p| p.midi()).collect();
                            midis.sort_unstable();
                            (e.onset, e.duration, midis, e.tie_forward, e.tie_backward)
                        })
                        .collect();
                    events.sort();
                    MeasureSig {
                        time: (m.time_signature.numerator, m.time_signature.denominator),
                        key: (m.key_signature.fifths, m.key_signature.mode == Mode::Minor),
                        events,
                    }
                })
                .collect()
        })
        .collect();
    let tempo_timeline =
        (0..score.measure_count).map(|i| score.prevailing_tempo(i)).collect();
    Signature { parts, tempo_timeline }
}

/// A deliberately messy part for metric-oracle fuzzing: off-grid onsets,
/// overfull measures, overlapping events, chords, ties, and tuplets.
pub fn messy_part(rng: &mut StdRng, name: &str, lo: u8, hi: u8) -> Part {
    let n_measures = rng.random_range(1..=8);
    let mut measures = Vec::new();
    for mi in 0..n_measures {
        let ts = random_time_signature(rng);
        let key = random_key(rng);
        let mut notes = Vec::new();
        let n_events = rng.random_range(0..=10);
        let mut clock = rat_int(0);
        for _ in 0..n_events {
            let duration = *[
                rat(1, 32),
                rat(1, 16),
                rat(1, 8),
                rat(1, 4),
                rat(1, 3),
                rat(1, 2),
                rat(2, 3),
                rat_int(1),
                rat_int(2),
            ]
            .get(rng.random_range(0..9))
            .unwrap();
            // Random gaps, sometimes negative (overlap), sometimes off-grid.
            let jump = *[rat(-1, 2), rat(0, 1), rat(1, 7), rat(1, 4), rat(1, 2), rat_int(1)]
                .get(rng.random_range(0..6))
                .unwrap();
            clock = (clock + jump).max(rat_int(0));
            let tuplet = rng
                .random_bool(0.1)
                .then_some(TupletRatio { notes: 3, in_time_of: 2 });
            let mut e = note_event(rng, clock, duration, lo, hi, true, tuplet);
            if rng.random_bool(0.15) {
                e.tie_forward = true;
            }
            if rng.random_bool(0.15) {
                e.tie_backward = true;
            }
            for flag in e.explicit_accidental.iter_mut() {
                *flag = rng.random_bool(0.3);
            }
            clock = e.offset();
            notes.push(e);
        }
        notes.sort_by_key(|a| a.onset);
        let span = notes.iter().map(|e: &NoteEvent| e.offset()).max().unwrap_or_else(|| rat_int(0));
        measures.push(Measure {
            index: mi,
            time_signature: ts,
            key_signature: key,
            tempo_qpm: None,
            notes,
            span,
        });
    }
    Part {
        part_id: "1".into(),
        declared_name: name.to_string(),
        midi_program: None,
        measures,
    }
}
