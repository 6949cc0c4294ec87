//! Brute-force recounts of every metric, written independently of the
//! library implementations: plain loops over raw event lists, no shared
//! helpers. These are the ground truth the metric suite is checked against.

use scorelint_core::constraints::InstrumentConstraints;
use scorelint_core::rational::{rat, rat_int, Rational};
use scorelint_core::score::{KeySignature, Mode, Part};

fn percentage(hits: i64, total: i64) -> Rational {
    rat(100 * hits, total)
}

pub fn pitch_range(part: &Part, c: &InstrumentConstraints) -> Option<Rational> {
    let mut total = 0;
    let mut ok = 0;
    for m in &part.measures {
        for e in &m.notes {
            for p in &e.pitches {
                total += 1;
                if p.midi() >= c.midi_low && p.midi() <= c.midi_high {
                    ok += 1;
                }
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(percentage(ok, total))
    }
}

pub fn pitch_span(part: &Part, c: &InstrumentConstraints) -> Option<Rational> {
    let mut chords = 0;
    let mut ok = 0;
    for m in &part.measures {
        for e in &m.notes {
            if e.pitches.len() < 2 {
                continue;
            }
            chords += 1;
            let mut lo = 127u8;
            let mut hi = 0u8;
            for p in &e.pitches {
                lo = lo.min(p.midi());
                hi = hi.max(p.midi());
            }
            match c.max_span.limit() {
                None => ok += 1,
                Some(s) if hi - lo <= s => ok += 1,
                Some(_) => {}
            }
        }
    }
    if chords == 0 {
        None
    } else {
        Some(percentage(ok, chords))
    }
}

/// (absolute onset, absolute offset, pitch count, tie fwd, tie back, midis).
type EventRow = (Rational, Rational, usize, bool, bool, Vec<u8>);

/// Rows built by directly accumulating measure capacities.
fn flat_events(part: &Part) -> Vec<EventRow> {
    let mut rows = Vec::new();
    let mut base = rat_int(0);
    for m in &part.measures {
        for e in &m.notes {
            rows.push((
                base + e.onset,
                base + e.onset + e.duration,
                e.pitches.len(),
                e.tie_forward,
                e.tie_backward,
                e.pitches.iter().map(|p| p.midi()).collect(),
            ));
        }
        base += rat(4 * m.time_signature.numerator as i64, m.time_signature.denominator as i64);
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    rows
}

pub fn monophonic(part: &Part, c: &InstrumentConstraints) -> Option<Rational> {
    if !c.monophonic {
        return None;
    }
    let rows = flat_events(part);
    if rows.is_empty() {
        return None;
    }
    let mut onsets: Vec<Rational> = rows.iter().map(|r| r.0).collect();
    onsets.sort();
    onsets.dedup();
    let mut single = 0;
    for &t in &onsets {
        let mut sounding = 0usize;
        for row in &rows {
            if row.0 <= t && t < row.1 {
                sounding += row.2;
            }
        }
        if sounding == 1 {
            single += 1;
        }
    }
    Some(percentage(single, onsets.len() as i64))
}

pub fn rhythmic_overlap(part: &Part, c: &InstrumentConstraints) -> Option<Rational> {
    if !c.monophonic {
        return None;
    }
    let rows = flat_events(part);
    if rows.is_empty() {
        return None;
    }
    // merge tie chains: forward tie into a backward tie at the same instant
    // on a shared pitch extends the note
    let mut merged: Vec<(Rational, Rational)> = Vec::new();
    let mut prev: Option<&EventRow> = None;
    for row in &rows {
        let extend = match prev {
            Some(p) => {
                p.3 && row.4 && row.0 == p.1 && row.5.iter().any(|m| p.5.contains(m))
            }
            None => false,
        };
        if extend {
            merged.last_mut().unwrap().1 = row.1;
        } else {
            merged.push((row.0, row.1));
        }
        prev = Some(row);
    }
    if merged.len() == 1 {
        return Some(rat_int(100));
    }
    let mut violations = 0;
    for i in 1..merged.len() {
        if merged[i].0 < merged[i - 1].1 {
            violations += 1;
        }
    }
    let pairs = (merged.len() - 1) as i64;
    Some(percentage(pairs - violations, pairs))
}

pub fn rhythmic_jitter(part: &Part, strict: bool) -> Option<Rational> {
    let mut total = 0;
    let mut clean = 0;
    for m in &part.measures {
        for e in &m.notes {
            total += 1;
            let grid = match e.tuplet {
                Some(t) if !strict => {
                    rat(1, 16) * rat(t.in_time_of as i64, t.notes as i64)
                }
                _ => rat(1, 16),
            };
            let short = e.duration <= grid;
            let quotient = e.onset / grid;
            let off = *quotient.denom() != 1;
            if !short && !off {
                clean += 1;
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(percentage(clean, total))
    }
}

pub fn tie_complexity(part: &Part) -> Option<Rational> {
    let mut total = 0;
    let mut tied = 0;
    for m in &part.measures {
        for e in &m.notes {
            total += 1;
            if e.tie_forward || e.tie_backward {
                tied += 1;
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(percentage(total - tied, total))
    }
}

/// Major scale steps from the tonic, derived by walking whole/half steps;
/// natural minor starts the same pattern from its sixth degree.
fn diatonic_set(key: &KeySignature) -> [bool; 12] {
    let tonic = ((key.tonic_step.pitch_class() as i32 + key.tonic_alter as i32).rem_euclid(12))
        as usize;
    let steps: [usize; 7] = match key.mode {
        Mode::Major => [2, 2, 1, 2, 2, 2, 1],
        Mode::Minor => [2, 1, 2, 2, 1, 2, 2],
    };
    let mut set = [false; 12];
    let mut pc = tonic;
    for step in steps {
        set[pc] = true;
        pc = (pc + step) % 12;
    }
    set
}

pub fn accidental_consistency(part: &Part) -> Option<Rational> {
    let mut total = 0;
    let mut diatonic = 0;
    for m in &part.measures {
        let set = diatonic_set(&m.key_signature);
        for e in &m.notes {
            for p in &e.pitches {
                total += 1;
                if set[(p.midi() % 12) as usize] {
                    diatonic += 1;
                }
            }
        }
    }
    if total == 0 {
        None
    } else {
        Some(percentage(diatonic, total))
    }
}

pub fn enharmonic_directionality(part: &Part) -> Option<Rational> {
    let mut pitches = 0;
    let mut explicit = 0;
    let mut violations = 0;
    for m in &part.measures {
        for e in &m.notes {
            for (i, p) in e.pitches.iter().enumerate() {
                pitches += 1;
                if !e.explicit_accidental.get(i).copied().unwrap_or(false) {
                    continue;
                }
                explicit += 1;
                if m.key_signature.fifths > 0 && p.alter < 0 {
                    violations += 1;
                }
                if m.key_signature.fifths < 0 && p.alter > 0 {
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
        Some(percentage(explicit - violations, explicit))
    }
}

pub fn coverage(part: &Part, m_total: usize) -> Rational {
    let mut first = None;
    let mut last = None;
    for (i, m) in part.measures.iter().enumerate() {
        if !m.notes.is_empty() {
            if first.is_none() {
                first = Some(i);
            }
            last = Some(i);
        }
    }
    match (first, last) {
        (Some(f), Some(l)) if m_total > 0 => percentage((l - f + 1) as i64, m_total as i64),
        _ => rat_int(0),
    }
}

pub fn density(part: &Part, m_total: usize) -> Rational {
    if m_total == 0 {
        return rat_int(0);
    }
    let active = part.measures.iter().filter(|m| !m.notes.is_empty()).count() as i64;
    percentage(active, m_total as i64)
}
