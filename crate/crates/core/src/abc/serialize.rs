//! Score IR to canonical interleaved ABC.
//!
//! The canonical form uses `L:1/8`, one measure per body line with every
//! voice's segment on it, explicit `n/m` length fractions, tuplets emitted as
//! full `(p:q:r` groups, and rests reconstructed from inter-event gaps.

use std::collections::HashMap;

use crate::rational::{rat, rat_int, Rational};
use crate::score::{KeySignature, Measure, Mode, NoteEvent, Score, SpelledPitch, Step};

use super::SerializeError;

const UNIT: fn() -> Rational = || rat(1, 2); // L:1/8 in quarter notes
const MAX_DENOM: i64 = 1024;

pub fn serialize_abc(score: &Score) -> Result<String, SerializeError> {
    if score.parts.is_empty() || score.measure_count == 0 {
        return Err(SerializeError::EmptyScore);
    }
    let lead = &score.parts[0];
    if lead.measures.is_empty() {
        return Err(SerializeError::EmptyScore);
    }

    let mut out = String::new();
    out.push_str("X:1\n");
    if let Some(title) = &score.title {
        out.push_str(&format!("T:{title}\n"));
    }
    if let Some(genre) = &score.genre {
        out.push_str(&format!("R:{genre}\n"));
    }
    out.push_str("L:1/8\n");
    out.push_str(&format!("M:{}\n", lead.measures[0].time_signature));
    if let Some(tempo) = lead.measures[0].tempo_qpm {
        out.push_str(&format!("Q:{}\n", tempo_text(tempo)?));
    }
    out.push_str(&format!("K:{}\n", key_text(&lead.measures[0].key_signature)));

    let multi_voice = score.parts.len() > 1;
    let declare = multi_voice
        || score
            .parts
            .iter()
            .any(|p| !p.declared_name.is_empty() || p.midi_program.is_some());
    if declare {
        for part in &score.parts {
            if part.declared_name.is_empty() {
                out.push_str(&format!("V:{}\n", part.part_id));
            } else {
                out.push_str(&format!("V:{} name=\"{}\"\n", part.part_id, part.declared_name));
            }
            if let Some(program) = part.midi_program {
                out.push_str(&format!("%%MIDI program {} {}\n", part.part_id, program));
            }
        }
    }

    for index in 0..score.measure_count {
        let mut line = String::new();
        for (pi, part) in score.parts.iter().enumerate() {
            let Some(measure) = part.measures.get(index) else { continue };
            if multi_voice {
                line.push_str(&format!("[V:{}]", part.part_id));
            }
            // Signature changes ride on the lead part's timeline; the parser
            // stamps them score-wide.
            if pi == 0 && index > 0 {
                let prev = &part.measures[index - 1];
                if measure.time_signature != prev.time_signature {
                    line.push_str(&format!("[M:{}]", measure.time_signature));
                }
                if measure.key_signature != prev.key_signature {
                    line.push_str(&format!("[K:{}]", key_text(&measure.key_signature)));
                }
            }
            if let Some(tempo) = measure.tempo_qpm {
                if !(pi == 0 && index == 0) {
                    line.push_str(&format!("[Q:{}]", tempo_text(tempo)?));
                }
            }
            line.push_str(&measure_text(measure)?);
            if index + 1 == score.measure_count && pi + 1 == score.parts.len() {
                line.push_str("|]");
            } else {
                line.push('|');
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

fn tempo_text(qpm: Rational) -> Result<String, SerializeError> {
    if qpm <= rat_int(0) {
        return Err(SerializeError::Unrepresentable(format!("tempo {qpm}")));
    }
    if qpm.is_integer() {
        Ok(format!("1/4={}", qpm.to_integer()))
    } else {
        Ok(format!("1/{}={}", 4 * qpm.denom(), qpm.numer()))
    }
}

fn key_text(key: &KeySignature) -> String {
    match key.mode {
        Mode::Major => key.tonic_name(),
        Mode::Minor => format!("{}m", key.tonic_name()),
    }
}

/// Assign events to overlay streams: each stream is a non-overlapping run.
/// A tie continuation prefers the stream whose last event carries the tie so
/// the pair stays adjacent in token order.
fn split_streams(measure: &Measure) -> Vec<Vec<&NoteEvent>> {
    let mut streams: Vec<Vec<&NoteEvent>> = Vec::new();
    for event in &measure.notes {
        let mut chosen = None;
        if event.tie_backward {
            chosen = streams.iter().position(|s| {
                s.last().is_some_and(|last| {
                    last.tie_forward
                        && last.offset() == event.onset
                        && last.pitches.iter().any(|p| {
                            event.pitches.iter().any(|q| q.midi() == p.midi())
                        })
                })
            });
        }
        let slot = chosen.or_else(|| {
            streams
                .iter()
                .position(|s| s.last().is_some_and(|last| last.offset() <= event.onset))
        });
        match slot {
            Some(i) => streams[i].push(event),
            None => streams.push(vec![event]),
        }
    }
    streams
}

/// State for in-measure accidental emission: the signature plus overrides
/// introduced by earlier explicit accidentals, in token order.
struct AccidentalState {
    key: KeySignature,
    overrides: HashMap<(Step, i8), i8>,
}

impl AccidentalState {
    fn new(key: KeySignature) -> Self {
        AccidentalState { key, overrides: HashMap::new() }
    }

    fn implied(&self, step: Step, octave: i8) -> i8 {
        self.overrides
            .get(&(step, octave))
            .copied()
            .unwrap_or_else(|| self.key.alter_for_letter(step))
    }

    /// Accidental text for this pitch, updating the running state.
    fn emit(&mut self, pitch: &SpelledPitch, explicit: bool) -> &'static str {
        let needed = self.implied(pitch.step, pitch.octave) != pitch.alter;
        if !needed && !explicit {
            return "";
        }
        self.overrides.insert((pitch.step, pitch.octave), pitch.alter);
        match pitch.alter {
            -2 => "__",
            -1 => "_",
            0 => "=",
            1 => "^",
            2 => "^^",
            _ => "", // unreachable: SpelledPitch bounds alter
        }
    }
}

fn measure_text(measure: &Measure) -> Result<String, SerializeError> {
    let fill_to = measure.content_length();
    if fill_to == rat_int(0) {
        return Err(SerializeError::Unrepresentable(format!(
            "measure {} has no written content",
            measure.index
        )));
    }
    let streams = split_streams(measure);
    let mut state = AccidentalState::new(measure.key_signature);
    let mut parts = Vec::new();

    if streams.is_empty() {
        return Ok(format!("z{}", length_text(fill_to / UNIT())?));
    }

    for (si, stream) in streams.iter().enumerate() {
        let mut text = String::new();
        let mut cursor = rat_int(0);
        let mut i = 0;
        while i < stream.len() {
            let event = stream[i];
            match event.tuplet {
                None => {
                    let gap = event.onset - cursor;
                    if gap > rat_int(0) {
                        text.push_str(&format!("z{}", length_text(gap / UNIT())?));
                    }
                    text.push_str(&event_text(event, rat_int(1), &mut state)?);
                    cursor = event.offset();
                    i += 1;
                }
                Some(ratio) => {
                    // Collect the maximal run sharing this ratio, counting
                    // interior gap rests as group members.
                    let gap = event.onset - cursor;
                    if gap > rat_int(0) {
                        text.push_str(&format!("z{}", length_text(gap / UNIT())?));
                        cursor = event.onset;
                    }
                    let mut members: Vec<(Option<&NoteEvent>, Rational)> = Vec::new();
                    let mut j = i;
                    while j < stream.len() && stream[j].tuplet == Some(ratio) {
                        let inner_gap = stream[j].onset - cursor;
                        if inner_gap > rat_int(0) {
                            members.push((None, inner_gap));
                        }
                        members.push((Some(stream[j]), stream[j].duration));
                        cursor = stream[j].offset();
                        j += 1;
                    }
                    let written_scale = rat(ratio.notes as i64, ratio.in_time_of as i64);
                    text.push_str(&format!(
                        "({}:{}:{}",
                        ratio.notes,
                        ratio.in_time_of,
                        members.len()
                    ));
                    for (member, duration) in &members {
                        match member {
                            Some(e) => text.push_str(&event_text(e, written_scale, &mut state)?),
                            None => text.push_str(&format!(
                                "z{}",
                                length_text(*duration * written_scale / UNIT())?
                            )),
                        }
                    }
                    i = j;
                }
            }
        }
        if si == 0 && cursor < fill_to {
            text.push_str(&format!("z{}", length_text((fill_to - cursor) / UNIT())?));
        }
        parts.push(text);
    }
    Ok(parts.join("&"))
}

fn event_text(
    event: &NoteEvent,
    written_scale: Rational,
    state: &mut AccidentalState,
) -> Result<String, SerializeError> {
    let mut text = String::new();
    if let Some(dynamic) = &event.dynamic {
        text.push_str(&format!("!{dynamic}!"));
    }
    let length = length_text(event.duration * written_scale / UNIT())?;
    if event.pitches.len() == 1 {
        text.push_str(state.emit(&event.pitches[0], event.explicit_accidental[0]));
        text.push_str(&pitch_text(&event.pitches[0]));
    } else {
        text.push('[');
        for (i, pitch) in event.pitches.iter().enumerate() {
            let explicit = event.explicit_accidental.get(i).copied().unwrap_or(false);
            text.push_str(state.emit(pitch, explicit));
            text.push_str(&pitch_text(pitch));
        }
        text.push(']');
    }
    text.push_str(&length);
    if event.tie_forward {
        text.push('-');
    }
    Ok(text)
}

fn pitch_text(pitch: &SpelledPitch) -> String {
    let mut text = String::new();
    if pitch.octave >= 5 {
        text.push(pitch.step.letter().to_ascii_lowercase());
        for _ in 5..pitch.octave {
            text.push('\'');
        }
    } else {
        text.push(pitch.step.letter());
        for _ in pitch.octave..4 {
            text.push(',');
        }
    }
    text
}

/// Written length multiplier relative to the L:1/8 unit.
fn length_text(multiplier: Rational) -> Result<String, SerializeError> {
    if multiplier <= rat_int(0) || *multiplier.denom() > MAX_DENOM {
        return Err(SerializeError::Unrepresentable(format!(
            "length multiplier {multiplier}"
        )));
    }
    Ok(if multiplier == rat_int(1) {
        String::new()
    } else if multiplier.is_integer() {
        multiplier.to_integer().to_string()
    } else if *multiplier.numer() == 1 {
        format!("/{}", multiplier.denom())
    } else {
        format!("{}/{}", multiplier.numer(), multiplier.denom())
    })
}
