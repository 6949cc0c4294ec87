//! Core intermediate representation of a multi-part score, plus the pitch and
//! key theory shared by every metric.
//!
//! Onsets and durations are exact rationals in quarter-note units, measured
//! from the start of the containing measure. Pitches are spelled (step +
//! alteration + octave) so enharmonic direction survives parsing.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::rational::{rat, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TheoryError {
    #[error("alteration {0} outside supported range -2..=2")]
    AlterOutOfRange(i8),
    #[error("pitch maps to MIDI {0}, outside 0..=127")]
    MidiOutOfRange(i32),
    #[error("key of {0} fifths is outside the circle-of-fifths range -7..=7")]
    FifthsOutOfRange(i32),
    #[error("time signature denominator {0} is not a power of two")]
    BadDenominator(u32),
    #[error("time signature numerator must be positive")]
    ZeroNumerator,
}

/// Letter name of a pitch, independent of alteration and octave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    C,
    D,
    E,
    F,
    G,
    A,
    B,
}

impl Step {
    pub const ALL: [Step; 7] = [Step::C, Step::D, Step::E, Step::F, Step::G, Step::A, Step::B];

    /// Pitch class of the natural letter (C = 0 .. B = 11).
    pub fn pitch_class(self) -> u8 {
        match self {
            Step::C => 0,
            Step::D => 2,
            Step::E => 4,
            Step::F => 5,
            Step::G => 7,
            Step::A => 9,
            Step::B => 11,
        }
    }

    /// Position on the circle of fifths for the natural letter (F = -1, C = 0,
    /// G = 1, D = 2, A = 3, E = 4, B = 5).
    pub fn fifths_base(self) -> i32 {
        match self {
            Step::F => -1,
            Step::C => 0,
            Step::G => 1,
            Step::D => 2,
            Step::A => 3,
            Step::E => 4,
            Step::B => 5,
        }
    }

    pub fn from_char(c: char) -> Option<Step> {
        match c.to_ascii_uppercase() {
            'C' => Some(Step::C),
            'D' => Some(Step::D),
            'E' => Some(Step::E),
            'F' => Some(Step::F),
            'G' => Some(Step::G),
            'A' => Some(Step::A),
            'B' => Some(Step::B),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Step::C => 'C',
            Step::D => 'D',
            Step::E => 'E',
            Step::F => 'F',
            Step::G => 'G',
            Step::A => 'A',
            Step::B => 'B',
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A spelled pitch in scientific notation. `midi` is always derivable as
/// `12 * (octave + 1) + pitch_class(step) + alter`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpelledPitch {
    pub step: Step,
    pub alter: i8,
    pub octave: i8,
}

impl SpelledPitch {
    pub fn new(step: Step, alter: i8, octave: i8) -> Result<Self, TheoryError> {
        if !(-2..=2).contains(&alter) {
            return Err(TheoryError::AlterOutOfRange(alter));
        }
        let p = SpelledPitch { step, alter, octave };
        let midi = p.midi_unchecked();
        if !(0..=127).contains(&midi) {
            return Err(TheoryError::MidiOutOfRange(midi));
        }
        Ok(p)
    }

    fn midi_unchecked(&self) -> i32 {
        12 * (self.octave as i32 + 1) + self.step.pitch_class() as i32 + self.alter as i32
    }

    pub fn midi(&self) -> u8 {
        self.midi_unchecked() as u8
    }

    pub fn pitch_class(&self) -> u8 {
        self.midi() % 12
    }
}

impl fmt::Display for SpelledPitch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let accidental = match self.alter {
            -2 => "bb",
            -1 => "b",
            0 => "",
            1 => "#",
            2 => "##",
            _ => "?",
        };
        write!(f, "{}{}{}", self.step, accidental, self.octave)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Major,
    Minor,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Major => write!(f, "major"),
            Mode::Minor => write!(f, "minor"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyDirection {
    Sharp,
    Flat,
    Neutral,
}

/// A traditional key signature. `fifths` is always consistent with
/// `(tonic, mode)` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeySignature {
    pub tonic_step: Step,
    pub tonic_alter: i8,
    pub mode: Mode,
    pub fifths: i8,
}

impl KeySignature {
    pub fn new(tonic_step: Step, tonic_alter: i8, mode: Mode) -> Result<Self, TheoryError> {
        let fifths = tonic_step.fifths_base() + 7 * tonic_alter as i32
            - match mode {
                Mode::Major => 0,
                Mode::Minor => 3,
            };
        if !(-7..=7).contains(&fifths) {
            return Err(TheoryError::FifthsOutOfRange(fifths));
        }
        Ok(KeySignature { tonic_step, tonic_alter, mode, fifths: fifths as i8 })
    }

    /// Key with the given signature: `fifths` sharps (positive) or flats.
    pub fn from_fifths(fifths: i8, mode: Mode) -> Result<Self, TheoryError> {
        if !(-7..=7).contains(&fifths) {
            return Err(TheoryError::FifthsOutOfRange(fifths as i32));
        }
        let target = fifths as i32
            + match mode {
                Mode::Major => 0,
                Mode::Minor => 3,
            };
        // Choose the letter whose circle position matches modulo 7; the
        // remainder becomes the tonic alteration.
        let base = (target + 1).rem_euclid(7) - 1;
        let step = Step::ALL
            .into_iter()
            .find(|s| s.fifths_base() == base)
            .expect("base is in -1..=5");
        let alter = (target - base) / 7;
        Ok(KeySignature { tonic_step: step, tonic_alter: alter as i8, mode, fifths })
    }

    pub fn c_major() -> Self {
        KeySignature { tonic_step: Step::C, tonic_alter: 0, mode: Mode::Major, fifths: 0 }
    }

    /// The relative major/minor partner sharing this signature.
    pub fn relative(&self) -> Self {
        let mode = match self.mode {
            Mode::Major => Mode::Minor,
            Mode::Minor => Mode::Major,
        };
        Self::from_fifths(self.fifths, mode).expect("fifths already in range")
    }

    pub fn tonic_pitch_class(&self) -> u8 {
        ((self.tonic_step.pitch_class() as i32 + self.tonic_alter as i32).rem_euclid(12)) as u8
    }

    /// Signature alteration for each letter: +1 for each sharped letter in a
    /// sharp key, -1 for flats. Letters enter in circle-of-fifths order.
    pub fn letter_alterations(&self) -> [(Step, i8); 7] {
        const SHARP_ORDER: [Step; 7] =
            [Step::F, Step::C, Step::G, Step::D, Step::A, Step::E, Step::B];
        let mut out = [(Step::C, 0i8); 7];
        for (i, step) in SHARP_ORDER.into_iter().enumerate() {
            let alter = if self.fifths > 0 && (i as i8) < self.fifths {
                1
            } else if self.fifths < 0 && (i as i8) >= 7 + self.fifths {
                -1
            } else {
                0
            };
            out[i] = (step, alter);
        }
        out
    }

    pub fn alter_for_letter(&self, step: Step) -> i8 {
        self.letter_alterations()
            .into_iter()
            .find(|(s, _)| *s == step)
            .map(|(_, a)| a)
            .unwrap_or(0)
    }

    /// Spelled tonic, e.g. "C", "F#", "Bb".
    pub fn tonic_name(&self) -> String {
        let accidental = match self.tonic_alter {
            -2 => "bb",
            -1 => "b",
            0 => "",
            1 => "#",
            2 => "##",
            _ => "?",
        };
        format!("{}{}", self.tonic_step, accidental)
    }
}

impl fmt::Display for KeySignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.tonic_name(), self.mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeSignature {
    pub numerator: u32,
    pub denominator: u32,
}

impl TimeSignature {
    pub fn new(numerator: u32, denominator: u32) -> Result<Self, TheoryError> {
        if numerator == 0 {
            return Err(TheoryError::ZeroNumerator);
        }
        if denominator == 0 || !denominator.is_power_of_two() {
            return Err(TheoryError::BadDenominator(denominator));
        }
        Ok(TimeSignature { numerator, denominator })
    }

    pub fn common_time() -> Self {
        TimeSignature { numerator: 4, denominator: 4 }
    }

    /// Measure capacity in quarter notes: `4 * numerator / denominator`.
    pub fn capacity(&self) -> Rational {
        rat(4 * self.numerator as i64, self.denominator as i64)
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Tuplet marking on a note: `notes` written in the time of `in_time_of`.
/// The sounding duration is the written one scaled by `in_time_of / notes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TupletRatio {
    pub notes: u32,
    pub in_time_of: u32,
}

impl TupletRatio {
    pub fn scale(&self) -> Rational {
        rat(self.in_time_of as i64, self.notes as i64)
    }
}

/// A sounding event: one note or, when `pitches.len() > 1`, a chord.
/// `explicit_accidental` is per-pitch and parallel to `pitches`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoteEvent {
    pub onset: Rational,
    pub duration: Rational,
    pub pitches: Vec<SpelledPitch>,
    pub explicit_accidental: Vec<bool>,
    pub tie_forward: bool,
    pub tie_backward: bool,
    pub dynamic: Option<String>,
    pub tuplet: Option<TupletRatio>,
}

impl NoteEvent {
    pub fn offset(&self) -> Rational {
        self.onset + self.duration
    }

    pub fn is_chord(&self) -> bool {
        self.pitches.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    pub index: usize,
    pub time_signature: TimeSignature,
    pub key_signature: KeySignature,
    pub tempo_qpm: Option<Rational>,
    pub notes: Vec<NoteEvent>,
    /// Total written duration including trailing rests. A measure holding a
    /// single quarter rest in 4/4 has no events but a span of 1.
    pub span: Rational,
}

impl Measure {
    pub fn rests_only(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn capacity(&self) -> Rational {
        self.time_signature.capacity()
    }

    /// Written length of the measure: the larger of the recorded span and the
    /// last event offset.
    pub fn content_length(&self) -> Rational {
        self.notes
            .iter()
            .map(NoteEvent::offset)
            .max()
            .unwrap_or_else(|| rat(0, 1))
            .max(self.span)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub part_id: String,
    pub declared_name: String,
    pub midi_program: Option<u8>,
    pub measures: Vec<Measure>,
}

impl Part {
    pub fn note_count(&self) -> usize {
        self.measures.iter().map(|m| m.notes.len()).sum()
    }

    pub fn pitch_count(&self) -> usize {
        self.measures
            .iter()
            .flat_map(|m| m.notes.iter())
            .map(|n| n.pitches.len())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub title: Option<String>,
    pub genre: Option<String>,
    pub parts: Vec<Part>,
    pub measure_count: usize,
}

impl Score {
    /// Absolute onset (quarter notes from piece start) of the start of
    /// `measure_index`, following the first part's signature timeline.
    pub fn measure_start(&self, measure_index: usize) -> Rational {
        let mut acc = rat(0, 1);
        if let Some(part) = self.parts.first() {
            for m in part.measures.iter().take(measure_index) {
                acc += m.capacity();
            }
        }
        acc
    }

    /// Prevailing tempo at `measure_index`: the last tempo event at or before
    /// it in any part, defaulting to 120 quarter-note BPM.
    pub fn prevailing_tempo(&self, measure_index: usize) -> Rational {
        let mut tempo = rat(120, 1);
        for i in 0..=measure_index.min(self.measure_count.saturating_sub(1)) {
            for part in &self.parts {
                if let Some(m) = part.measures.get(i) {
                    if let Some(t) = m.tempo_qpm {
                        tempo = t;
                    }
                }
            }
        }
        tempo
    }

    /// First tempo event anywhere in the score, in quarter-note BPM.
    pub fn first_tempo(&self) -> Option<Rational> {
        for i in 0..self.measure_count {
            for part in &self.parts {
                if let Some(t) = part.measures.get(i).and_then(|m| m.tempo_qpm) {
                    return Some(t);
                }
            }
        }
        None
    }
}

/// Set of sounding pitch classes in one measure; empty for rest-only measures.
pub fn pitch_class_set(measure: &Measure) -> BTreeSet<u8> {
    measure
        .notes
        .iter()
        .flat_map(|n| n.pitches.iter())
        .map(SpelledPitch::pitch_class)
        .collect()
}

/// The seven pitch classes of the key's diatonic scale. Minor keys use the
/// natural minor collection, so relative keys share one set.
pub fn diatonic_pitch_classes(key: &KeySignature) -> BTreeSet<u8> {
    let pattern: [u8; 7] = match key.mode {
        Mode::Major => [0, 2, 4, 5, 7, 9, 11],
        Mode::Minor => [0, 2, 3, 5, 7, 8, 10],
    };
    let tonic = key.tonic_pitch_class();
    pattern.iter().map(|step| (tonic + step) % 12).collect()
}

/// Whether the signature is sharp-based, flat-based, or neutral.
pub fn key_direction(key: &KeySignature) -> KeyDirection {
    match key.fifths {
        f if f > 0 => KeyDirection::Sharp,
        f if f < 0 => KeyDirection::Flat,
        _ => KeyDirection::Neutral,
    }
}
