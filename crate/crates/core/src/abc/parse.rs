//! ABC text to score IR.
//!
//! Parsing runs in two phases: a document split (header fields, voice
//! declarations, body lines) followed by measure assembly. Voices accumulate
//! measures independently; interleaved `[V:id]` segments and standalone `V:`
//! switch lines both land in the same IR. Measures never span line breaks.

use std::collections::HashMap;

use crate::rational::{rat, rat_int, Rational};
use crate::score::{
    KeySignature, Measure, Mode, NoteEvent, Part, Score, SpelledPitch, Step, TimeSignature,
    TupletRatio,
};

use super::validate::{Issue, IssueCode};
use super::{ParseError, StructureKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderField {
    pub tag: String,
    pub value: String,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoiceDecl {
    pub id: String,
    pub name: Option<String>,
    pub line: u32,
}

/// Split form of an ABC tune: ordered header fields (including `%%`
/// directives), voice declarations seen in the header, and raw body lines.
/// Exactly one `K:` field terminates the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbcDocument {
    pub header_fields: Vec<HeaderField>,
    pub voice_decls: Vec<VoiceDecl>,
    pub body_lines: Vec<(String, u32)>,
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub score: Score,
    pub warnings: Vec<Issue>,
}

pub fn parse_abc(text: &str) -> Result<Score, ParseError> {
    parse_abc_with_warnings(text).map(|p| p.score)
}

pub fn parse_abc_with_warnings(text: &str) -> Result<Parsed, ParseError> {
    let doc = AbcDocument::parse(text)?;
    build_score(&doc)
}

impl AbcDocument {
    pub fn parse(text: &str) -> Result<AbcDocument, ParseError> {
        let mut header_fields = Vec::new();
        let mut voice_decls = Vec::new();
        let mut body_lines = Vec::new();
        let mut in_header = true;
        let mut line_no: u32 = 0;

        for raw in text.lines() {
            line_no += 1;
            let line = strip_comment(raw.trim_end_matches('\r'));
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }

            if in_header {
                if let Some(directive) = trimmed.strip_prefix("%%") {
                    header_fields.push(HeaderField {
                        tag: format!("%%{}", directive.split_whitespace().next().unwrap_or("")),
                        value: directive.to_string(),
                        line: line_no,
                    });
                    continue;
                }
                let (tag, value) = match split_field(trimmed) {
                    Some(f) => f,
                    None => {
                        return Err(ParseError::Structure {
                            kind: StructureKind::MissingKey,
                            line: line_no,
                            message: format!(
                                "music before the K: field that ends the header: {trimmed:?}"
                            ),
                        });
                    }
                };
                if tag == 'V' {
                    let (id, name) = parse_voice_props(value);
                    voice_decls.push(VoiceDecl { id, name, line: line_no });
                }
                header_fields.push(HeaderField {
                    tag: tag.to_string(),
                    value: value.to_string(),
                    line: line_no,
                });
                if tag == 'K' {
                    in_header = false;
                }
            } else {
                body_lines.push((line.to_string(), line_no));
            }
        }

        if in_header {
            return Err(ParseError::Structure {
                kind: StructureKind::MissingKey,
                line: line_no,
                message: "no K: field found; the header never ends".into(),
            });
        }
        Ok(AbcDocument { header_fields, voice_decls, body_lines })
    }
}

/// Strip a `%` comment, honoring double quotes; `%%` directives survive.
fn strip_comment(line: &str) -> &str {
    if line.starts_with("%%") {
        return line;
    }
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '%' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_field(line: &str) -> Option<(char, &str)> {
    let mut chars = line.chars();
    let tag = chars.next()?;
    if !tag.is_ascii_alphabetic() || chars.next()? != ':' {
        return None;
    }
    Some((tag, line[2..].trim()))
}

/// Parse a `V:` field value: the voice id, then `name="..."` if present.
/// Other properties (clef, subname, stems) are accepted and ignored.
fn parse_voice_props(value: &str) -> (String, Option<String>) {
    let mut rest = value.trim();
    let id: String = rest.chars().take_while(|c| !c.is_whitespace()).collect();
    rest = rest[id.len()..].trim_start();
    let mut name = None;
    while !rest.is_empty() {
        let Some(eq) = rest.find('=') else { break };
        let key = rest[..eq].trim().to_ascii_lowercase();
        rest = rest[eq + 1..].trim_start();
        let value;
        if rest.starts_with('"') {
            match rest[1..].find('"') {
                Some(end) => {
                    value = rest[1..1 + end].to_string();
                    rest = rest[end + 2..].trim_start();
                }
                None => {
                    value = rest[1..].to_string();
                    rest = "";
                }
            }
        } else {
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            value = rest[..end].to_string();
            rest = rest[end..].trim_start();
        }
        if key == "name" || key == "nm" {
            name = Some(value);
        }
    }
    (id, name)
}

// ───────────────────────────────────────────────────────────────────────
// Measure assembly
// ───────────────────────────────────────────────────────────────────────

struct OpenMeasure {
    time_signature: TimeSignature,
    key_signature: KeySignature,
    tempo_qpm: Option<Rational>,
    events: Vec<NoteEvent>,
    clock: Rational,
    /// Max clock over overlay streams already closed with `&`.
    span_acc: Rational,
    accidentals: HashMap<(Step, i8), i8>,
}

struct VoiceState {
    id: String,
    name: String,
    midi_program: Option<u8>,
    measures: Vec<Measure>,
    open: Option<OpenMeasure>,
    pending_tempo: Option<Rational>,
    pending_dynamic: Option<String>,
    tie_pending: bool,
    prev_midis: Vec<u8>,
    tuplet: Option<(TupletRatio, u32)>,
}

impl VoiceState {
    fn new(id: &str) -> Self {
        VoiceState {
            id: id.to_string(),
            name: String::new(),
            midi_program: None,
            measures: Vec::new(),
            open: None,
            pending_tempo: None,
            pending_dynamic: None,
            tie_pending: false,
            prev_midis: Vec::new(),
            tuplet: None,
        }
    }
}

struct Builder {
    unit: Option<Rational>,
    meter: TimeSignature,
    key: KeySignature,
    voices: Vec<VoiceState>,
    voice_index: HashMap<String, usize>,
    current: usize,
    any_declared: bool,
    title: Option<String>,
    genre: Option<String>,
    header_tempo: Option<Rational>,
    warnings: Vec<Issue>,
}

fn lex(line: u32, col: usize, message: impl Into<String>) -> ParseError {
    ParseError::Lex { line, col: col as u32 + 1, message: message.into() }
}

impl Builder {
    fn new() -> Self {
        Builder {
            unit: None,
            meter: TimeSignature::common_time(),
            key: KeySignature::c_major(),
            voices: Vec::new(),
            voice_index: HashMap::new(),
            current: 0,
            any_declared: false,
            title: None,
            genre: None,
            header_tempo: None,
            warnings: Vec::new(),
        }
    }

    /// Quarter notes per unit note length, defaulting per the ABC rule:
    /// meters of 3/4 and above default to 1/8, shorter meters to 1/16.
    fn unit(&self) -> Rational {
        self.unit.unwrap_or_else(|| {
            if self.meter.capacity() >= rat(3, 1) {
                rat(1, 2)
            } else {
                rat(1, 4)
            }
        })
    }

    fn declare_voice(&mut self, id: &str, name: Option<String>) -> usize {
        let idx = match self.voice_index.get(id) {
            Some(&i) => i,
            None => {
                let i = self.voices.len();
                self.voices.push(VoiceState::new(id));
                self.voice_index.insert(id.to_string(), i);
                i
            }
        };
        if let Some(n) = name {
            self.voices[idx].name = n;
        }
        self.any_declared = true;
        idx
    }

    fn ensure_implicit_voice(&mut self) {
        if self.voices.is_empty() {
            self.voices.push(VoiceState::new("1"));
            self.voice_index.insert("1".to_string(), 0);
            self.current = 0;
        }
    }

    fn lookup_voice(&self, id: &str, line: u32) -> Result<usize, ParseError> {
        self.voice_index.get(id).copied().ok_or_else(|| ParseError::Structure {
            kind: StructureKind::UndeclaredVoice,
            line,
            message: format!("voice {id:?} is used but never declared"),
        })
    }

    fn header_field(&mut self, field: &HeaderField) -> Result<(), ParseError> {
        let line = field.line;
        let value = field.value.as_str();
        match field.tag.as_str() {
            "X" | "C" => {}
            "T" => {
                if self.title.is_none() {
                    self.title = Some(value.to_string());
                }
            }
            "R" => self.genre = Some(value.to_string()),
            "L" => {
                self.unit = Some(parse_unit_length(value).map_err(|m| lex(line, 0, m))?);
            }
            "M" => {
                self.meter = parse_meter(value).map_err(|m| lex(line, 0, m))?;
            }
            "Q" => {
                self.header_tempo = Some(parse_tempo(value).map_err(|m| lex(line, 0, m))?);
            }
            "K" => {
                self.key = parse_key(value).map_err(|m| lex(line, 0, m))?;
            }
            "V" => {
                let (id, name) = parse_voice_props(value);
                let idx = self.declare_voice(&id, name);
                self.current = idx;
            }
            tag if tag.starts_with("%%") => self.directive(value, line)?,
            tag => {
                self.warnings.push(Issue::warning(
                    IssueCode::UnsupportedToken,
                    format!("line {line}: header field {tag}: ignored"),
                ));
            }
        }
        Ok(())
    }

    fn directive(&mut self, value: &str, line: u32) -> Result<(), ParseError> {
        let mut words = value.split_whitespace();
        match words.next() {
            Some("MIDI")
                if words.next() == Some("program") => {
                    let args: Vec<&str> = words.collect();
                    let (voice, program) = match args.as_slice() {
                        [p] => (None, p),
                        [v, p] => (Some(*v), p),
                        _ => return Err(lex(line, 0, "%%MIDI program expects 1 or 2 arguments")),
                    };
                    let program: u8 = program
                        .parse()
                        .map_err(|_| lex(line, 0, "%%MIDI program number must be 0-127"))?;
                    if program > 127 {
                        return Err(lex(line, 0, "%%MIDI program number must be 0-127"));
                    }
                    let idx = match voice {
                        Some(v) => self.lookup_voice(v, line)?,
                        None => {
                            self.ensure_implicit_voice();
                            self.current
                        }
                    };
                    self.voices[idx].midi_program = Some(program);
                }
                // Other %%MIDI subcommands carry no pitch/rhythm semantics.
            _ => {} // %%score and layout directives are kept in the document only.
        }
        Ok(())
    }

    fn body_line(&mut self, text: &str, line: u32) -> Result<(), ParseError> {
        let trimmed = text.trim();
        if let Some(directive) = trimmed.strip_prefix("%%") {
            return self.directive(directive, line);
        }
        if let Some((tag, value)) = split_field(trimmed) {
            // Full-line fields in the body: V: switches (and declares) a
            // voice; lyric lines are dropped; other fields are unsupported.
            match tag {
                'V' => {
                    let (id, name) = parse_voice_props(value);
                    let idx = self.declare_voice(&id, name);
                    self.current = idx;
                    return Ok(());
                }
                'w' | 'W' => {
                    self.warnings.push(Issue::warning(
                        IssueCode::UnsupportedToken,
                        format!("line {line}: lyrics are not supported; line dropped"),
                    ));
                    return Ok(());
                }
                'K' | 'M' | 'Q' | 'L' => {
                    return Err(lex(
                        line,
                        0,
                        format!("mid-tune {tag}: lines are not supported; use the inline [{tag}:...] form"),
                    ));
                }
                _ => {
                    self.warnings.push(Issue::warning(
                        IssueCode::UnsupportedToken,
                        format!("line {line}: body field {tag}: ignored"),
                    ));
                    return Ok(());
                }
            }
        }
        self.music_line(text, line)
    }

    fn music_line(&mut self, text: &str, line: u32) -> Result<(), ParseError> {
        // Split on inline [V:id] markers; text before the first marker goes
        // to the current voice.
        let mut segments: Vec<(usize, &str, usize)> = Vec::new();
        let mut rest = text;
        let mut base = 0usize;
        loop {
            match rest.find("[V:") {
                None => {
                    if !rest.trim().is_empty() {
                        self.ensure_implicit_voice();
                        segments.push((self.current, rest, base));
                    }
                    break;
                }
                Some(pos) => {
                    let before = &rest[..pos];
                    if !before.trim().is_empty() {
                        self.ensure_implicit_voice();
                        segments.push((self.current, before, base));
                    }
                    let after = &rest[pos + 3..];
                    let close = after.find(']').ok_or_else(|| {
                        lex(line, base + pos, "unterminated [V: voice marker")
                    })?;
                    let id = after[..close].trim();
                    let idx = self.lookup_voice(id, line)?;
                    self.current = idx;
                    rest = &after[close + 1..];
                    base = base + pos + 3 + close + 1;
                    if rest.trim().is_empty() {
                        break;
                    }
                    // Segment continues to the next marker or end of line.
                    let seg_end = rest.find("[V:").unwrap_or(rest.len());
                    segments.push((idx, &rest[..seg_end], base));
                    rest = &rest[seg_end..];
                    base += seg_end;
                }
            }
        }

        for (voice, seg, col) in segments {
            self.segment(voice, seg, line, col)?;
            // Measures do not span line breaks: close any started measure.
            self.close_measure(voice, line, col)?;
        }
        Ok(())
    }

    fn ensure_open(&mut self, voice: usize) {
        let meter = self.meter;
        let key = self.key;
        let v = &mut self.voices[voice];
        if v.open.is_none() {
            v.open = Some(OpenMeasure {
                time_signature: meter,
                key_signature: key,
                tempo_qpm: v.pending_tempo.take(),
                events: Vec::new(),
                clock: rat(0, 1),
                span_acc: rat(0, 1),
                accidentals: HashMap::new(),
            });
        }
    }

    fn close_measure(&mut self, voice: usize, line: u32, col: usize) -> Result<(), ParseError> {
        let v = &mut self.voices[voice];
        if v.tuplet.is_some() {
            return Err(lex(line, col, "tuplet group crosses a barline"));
        }
        if let Some(open) = v.open.take() {
            let span = open.span_acc.max(open.clock);
            let mut events = open.events;
            events.sort_by_key(|e| e.onset);
            v.measures.push(Measure {
                index: v.measures.len(),
                time_signature: open.time_signature,
                key_signature: open.key_signature,
                tempo_qpm: open.tempo_qpm,
                notes: events,
                span,
            });
        }
        Ok(())
    }

    fn segment(
        &mut self,
        voice: usize,
        seg: &str,
        line: u32,
        col_base: usize,
    ) -> Result<(), ParseError> {
        let bytes = seg.as_bytes();
        let mut i = 0usize;
        let at = |i: usize| col_base + i;

        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '`' | '.' | '~' | ')' => i += 1,
                '|' | ':' | '[' if is_barline_start(bytes, i) => {
                    i += consume_barline(bytes, i, line, at(i))?;
                    self.close_measure(voice, line, at(i))?;
                    if i < bytes.len() && bytes[i].is_ascii_digit() {
                        return Err(lex(line, at(i), "repeat endings |1 |2 are not supported"));
                    }
                }
                '[' => {
                    // Inline field or chord.
                    if bytes.len() > i + 2 && bytes[i + 2] == b':' {
                        let tag = bytes[i + 1] as char;
                        let close = seg[i..]
                            .find(']')
                            .ok_or_else(|| lex(line, at(i), "unterminated inline field"))?;
                        let value = &seg[i + 3..i + close];
                        self.inline_field(voice, tag, value, line, at(i))?;
                        i += close + 1;
                    } else if bytes.len() > i + 1 && bytes[i + 1].is_ascii_digit() {
                        return Err(lex(line, at(i), "repeat endings [1 [2 are not supported"));
                    } else {
                        i = self.chord(voice, seg, i, line, col_base)?;
                    }
                }
                '(' => {
                    if bytes.len() > i + 1 && bytes[i + 1].is_ascii_digit() {
                        i = self.tuplet_spec(voice, seg, i, line, col_base)?;
                    } else {
                        i += 1; // slur start; slurs carry no metric content
                    }
                }
                '!' => {
                    let close = seg[i + 1..]
                        .find('!')
                        .ok_or_else(|| lex(line, at(i), "unterminated ! decoration"))?;
                    let name = &seg[i + 1..i + 1 + close];
                    if is_dynamic(name) {
                        self.voices[voice].pending_dynamic = Some(name.to_string());
                    } else {
                        self.warnings.push(Issue::warning(
                            IssueCode::UnsupportedToken,
                            format!("line {line}: decoration !{name}! ignored"),
                        ));
                    }
                    i += close + 2;
                }
                '{' => {
                    let close = seg[i..]
                        .find('}')
                        .ok_or_else(|| lex(line, at(i), "unterminated grace note group"))?;
                    self.warnings.push(Issue::warning(
                        IssueCode::GraceNotesDropped,
                        format!("line {line}: grace notes do not contribute to the score"),
                    ));
                    i += close + 1;
                }
                '"' => {
                    let close = seg[i + 1..]
                        .find('"')
                        .ok_or_else(|| lex(line, at(i), "unterminated annotation"))?;
                    self.warnings.push(Issue::warning(
                        IssueCode::UnsupportedToken,
                        format!("line {line}: text annotation ignored"),
                    ));
                    i += close + 2;
                }
                '&' => {
                    self.ensure_open(voice);
                    let v = &mut self.voices[voice];
                    let open = v.open.as_mut().expect("just opened");
                    open.span_acc = open.span_acc.max(open.clock);
                    open.clock = rat(0, 1);
                    v.tie_pending = false;
                    v.prev_midis.clear();
                    i += 1;
                }
                'z' | 'x' => {
                    let (len, used) = parse_length(bytes, i + 1, line, at(i + 1))?;
                    self.rest(voice, len)?;
                    i += 1 + used;
                }
                'Z' => {
                    let (count, used) = parse_int(bytes, i + 1);
                    let count = count.unwrap_or(1).max(1);
                    if self.voices[voice].open.is_some() {
                        return Err(lex(
                            line,
                            at(i),
                            "multi-measure rest Z must start its own measure",
                        ));
                    }
                    for _ in 0..count {
                        self.ensure_open(voice);
                        let v = &mut self.voices[voice];
                        let open = v.open.as_mut().expect("just opened");
                        open.clock = open.time_signature.capacity();
                        self.close_measure(voice, line, at(i))?;
                    }
                    i += 1 + used;
                }
                '<' | '>' => {
                    return Err(lex(line, at(i), "broken rhythm < > is not supported"));
                }
                '^' | '_' | '=' | 'A'..='G' | 'a'..='g' => {
                    i = self.note(voice, seg, i, line, col_base)?;
                }
                other => {
                    return Err(lex(line, at(i), format!("unexpected character {other:?}")));
                }
            }
        }
        Ok(())
    }

    fn inline_field(
        &mut self,
        voice: usize,
        tag: char,
        value: &str,
        line: u32,
        col: usize,
    ) -> Result<(), ParseError> {
        if self.voices.get(voice).is_some_and(|v| v.open.is_some()) {
            return Err(lex(line, col, format!("inline [{tag}:] must appear at a measure start")));
        }
        match tag {
            'M' => self.meter = parse_meter(value).map_err(|m| lex(line, col, m))?,
            'K' => self.key = parse_key(value).map_err(|m| lex(line, col, m))?,
            'Q' => {
                let qpm = parse_tempo(value).map_err(|m| lex(line, col, m))?;
                self.voices[voice].pending_tempo = Some(qpm);
            }
            other => {
                return Err(lex(line, col, format!("inline field [{other}:] is not supported")));
            }
        }
        Ok(())
    }

    /// Consume one tuplet slot if a group is active, returning the duration
    /// scale and the marking for note events.
    fn take_tuplet_slot(&mut self, voice: usize) -> (Rational, Option<TupletRatio>) {
        let v = &mut self.voices[voice];
        match v.tuplet.take() {
            None => (rat_int(1), None),
            Some((ratio, remaining)) => {
                if remaining > 1 {
                    v.tuplet = Some((ratio, remaining - 1));
                }
                (ratio.scale(), Some(ratio))
            }
        }
    }

    fn rest(&mut self, voice: usize, len: Rational) -> Result<(), ParseError> {
        self.ensure_open(voice);
        let unit = self.unit();
        let (scale, _) = self.take_tuplet_slot(voice);
        let v = &mut self.voices[voice];
        let open = v.open.as_mut().expect("ensured open");
        open.clock += unit * len * scale;
        v.tie_pending = false;
        v.prev_midis.clear();
        Ok(())
    }

    fn tuplet_spec(
        &mut self,
        voice: usize,
        seg: &str,
        start: usize,
        line: u32,
        col_base: usize,
    ) -> Result<usize, ParseError> {
        let bytes = seg.as_bytes();
        let mut i = start + 1;
        let (p, used) = parse_int(bytes, i);
        i += used;
        let p = p.ok_or_else(|| lex(line, col_base + i, "expected tuplet size"))? as u32;
        if !(2..=9).contains(&p) {
            return Err(lex(line, col_base + start, "tuplet size must be 2-9"));
        }
        let mut q: Option<u32> = None;
        let mut r: Option<u32> = None;
        if i < bytes.len() && bytes[i] == b':' {
            i += 1;
            let (qv, used) = parse_int(bytes, i);
            i += used;
            q = qv.map(|v| v as u32);
            if i < bytes.len() && bytes[i] == b':' {
                i += 1;
                let (rv, used) = parse_int(bytes, i);
                i += used;
                r = rv.map(|v| v as u32);
            }
        }
        let q = q.unwrap_or_else(|| default_tuplet_time(p, self.meter));
        let r = r.unwrap_or(p);
        if q == 0 || r == 0 {
            return Err(lex(line, col_base + start, "tuplet values must be positive"));
        }
        let v = &mut self.voices[voice];
        if v.tuplet.is_some() {
            return Err(lex(line, col_base + start, "nested tuplets are not supported"));
        }
        v.tuplet = Some((TupletRatio { notes: p, in_time_of: q }, r));
        Ok(i)
    }

    /// Parse a pitch at `i`: accidental prefix, letter, octave marks.
    fn pitch(
        &mut self,
        voice: usize,
        seg: &str,
        i: usize,
        line: u32,
        col_base: usize,
    ) -> Result<(SpelledPitch, bool, usize), ParseError> {
        let bytes = seg.as_bytes();
        let mut i = i;
        let accidental: Option<i8> = match bytes.get(i).map(|&b| b as char) {
            Some('^') => {
                if bytes.get(i + 1) == Some(&b'^') {
                    i += 2;
                    Some(2)
                } else {
                    i += 1;
                    Some(1)
                }
            }
            Some('_') => {
                if bytes.get(i + 1) == Some(&b'_') {
                    i += 2;
                    Some(-2)
                } else {
                    i += 1;
                    Some(-1)
                }
            }
            Some('=') => {
                i += 1;
                Some(0)
            }
            _ => None,
        };
        let letter = bytes
            .get(i)
            .map(|&b| b as char)
            .filter(|c| c.is_ascii_alphabetic() && matches!(c.to_ascii_uppercase(), 'A'..='G'))
            .ok_or_else(|| lex(line, col_base + i, "expected a note letter A-G"))?;
        let step = Step::from_char(letter).expect("checked A-G");
        let mut octave: i8 = if letter.is_ascii_uppercase() { 4 } else { 5 };
        i += 1;
        while let Some(&b) = bytes.get(i) {
            match b {
                b'\'' => {
                    octave += 1;
                    i += 1;
                }
                b',' => {
                    octave -= 1;
                    i += 1;
                }
                _ => break,
            }
        }

        self.ensure_open(voice);
        let open = self.voices[voice].open.as_mut().expect("ensured open");
        let (alter, explicit) = match accidental {
            Some(a) => {
                open.accidentals.insert((step, octave), a);
                (a, true)
            }
            None => {
                let a = open
                    .accidentals
                    .get(&(step, octave))
                    .copied()
                    .unwrap_or_else(|| open.key_signature.alter_for_letter(step));
                (a, false)
            }
        };
        let pitch = SpelledPitch::new(step, alter, octave).map_err(|e| ParseError::Range {
            line,
            col: col_base as u32 + 1,
            message: e.to_string(),
        })?;
        Ok((pitch, explicit, i))
    }

    fn note(
        &mut self,
        voice: usize,
        seg: &str,
        start: usize,
        line: u32,
        col_base: usize,
    ) -> Result<usize, ParseError> {
        let bytes = seg.as_bytes();
        let (pitch, explicit, mut i) = self.pitch(voice, seg, start, line, col_base)?;
        let (len, used) = parse_length(bytes, i, line, col_base + i)?;
        i += used;
        let tie = bytes.get(i) == Some(&b'-');
        if tie {
            i += 1;
        }
        self.push_event(voice, vec![pitch], vec![explicit], len, tie);
        Ok(i)
    }

    fn chord(
        &mut self,
        voice: usize,
        seg: &str,
        start: usize,
        line: u32,
        col_base: usize,
    ) -> Result<usize, ParseError> {
        let bytes = seg.as_bytes();
        let mut i = start + 1;
        let mut pitches = Vec::new();
        let mut explicits = Vec::new();
        let mut inner_len: Option<Rational> = None;
        loop {
            match bytes.get(i).map(|&b| b as char) {
                None => return Err(lex(line, col_base + start, "unterminated chord")),
                Some(']') => {
                    i += 1;
                    break;
                }
                Some(' ') => i += 1,
                Some(_) => {
                    let (pitch, explicit, next) = self.pitch(voice, seg, i, line, col_base)?;
                    i = next;
                    let (len, used) = parse_length(bytes, i, line, col_base + i)?;
                    i += used;
                    if inner_len.is_none() && used > 0 {
                        inner_len = Some(len);
                    }
                    pitches.push(pitch);
                    explicits.push(explicit);
                }
            }
        }
        if pitches.is_empty() {
            return Err(lex(line, col_base + start, "chord contains no notes"));
        }
        let (outer, used) = parse_length(bytes, i, line, col_base + i)?;
        i += used;
        let tie = bytes.get(i) == Some(&b'-');
        if tie {
            i += 1;
        }
        let len = inner_len.unwrap_or_else(|| rat_int(1)) * outer;
        self.push_event(voice, pitches, explicits, len, tie);
        Ok(i)
    }

    fn push_event(
        &mut self,
        voice: usize,
        pitches: Vec<SpelledPitch>,
        explicit: Vec<bool>,
        len: Rational,
        tie_forward: bool,
    ) {
        let unit = self.unit();
        let (scale, tuplet) = self.take_tuplet_slot(voice);
        let v = &mut self.voices[voice];
        let open = v.open.as_mut().expect("measure opened during pitch parse");
        let midis: Vec<u8> = pitches.iter().map(|p| p.midi()).collect();
        let tie_backward =
            v.tie_pending && midis.iter().any(|m| v.prev_midis.contains(m));
        let duration = unit * len * scale;
        open.events.push(NoteEvent {
            onset: open.clock,
            duration,
            pitches,
            explicit_accidental: explicit,
            tie_forward,
            tie_backward,
            dynamic: v.pending_dynamic.take(),
            tuplet,
        });
        open.clock += duration;
        v.tie_pending = tie_forward;
        v.prev_midis = midis;
    }
}

fn is_barline_start(bytes: &[u8], i: usize) -> bool {
    match bytes[i] {
        b'|' => true,
        b':' => matches!(bytes.get(i + 1), Some(b'|') | Some(b':')),
        b'[' => bytes.get(i + 1) == Some(&b'|'),
        _ => false,
    }
}

fn consume_barline(bytes: &[u8], start: usize, _line: u32, _col: usize) -> Result<usize, ParseError> {
    let mut i = start;
    if bytes[i] == b'[' {
        i += 1;
    }
    while i < bytes.len() && matches!(bytes[i], b'|' | b':' | b']') {
        i += 1;
    }
    Ok(i - start)
}

fn default_tuplet_time(p: u32, meter: TimeSignature) -> u32 {
    match p {
        2 | 4 | 8 => 3,
        3 | 6 => 2,
        _ => {
            // 5, 7, 9 fit into a beat of the prevailing meter: 3 in compound
            // meters, 2 otherwise.
            if meter.numerator.is_multiple_of(3) && meter.numerator > 3 {
                3
            } else {
                2
            }
        }
    }
}

fn is_dynamic(name: &str) -> bool {
    matches!(
        name,
        "pppp" | "ppp" | "pp" | "p" | "mp" | "mf" | "f" | "ff" | "fff" | "ffff" | "sfz" | "fp"
            | "sf"
    )
}

fn parse_int(bytes: &[u8], start: usize) -> (Option<i64>, usize) {
    let mut i = start;
    while i < bytes.len() && bytes[i].is_ascii_digit() && i - start < 7 {
        i += 1;
    }
    if i == start {
        (None, 0)
    } else {
        let text = std::str::from_utf8(&bytes[start..i]).expect("digits are ascii");
        (text.parse().ok(), i - start)
    }
}

/// Note-length suffix: `2`, `3/2`, `/2`, `/`, `//`, `3/`.
fn parse_length(
    bytes: &[u8],
    start: usize,
    line: u32,
    col: usize,
) -> Result<(Rational, usize), ParseError> {
    let mut i = start;
    let (num, used) = parse_int(bytes, i);
    i += used;
    let mut value = rat_int(num.unwrap_or(1));
    if value == rat_int(0) {
        return Err(lex(line, col, "note length must be positive"));
    }
    while i < bytes.len() && bytes[i] == b'/' {
        i += 1;
        let (den, used) = parse_int(bytes, i);
        i += used;
        let den = den.unwrap_or(2);
        if den == 0 {
            return Err(lex(line, col, "note length denominator must be positive"));
        }
        value /= rat_int(den);
    }
    Ok((value, i - start))
}

fn parse_unit_length(value: &str) -> Result<Rational, String> {
    let (a, b) = value
        .trim()
        .split_once('/')
        .ok_or_else(|| format!("L: field must be a fraction like 1/8, got {value:?}"))?;
    let a: i64 = a.trim().parse().map_err(|_| "bad L: numerator".to_string())?;
    let b: i64 = b.trim().parse().map_err(|_| "bad L: denominator".to_string())?;
    if a <= 0 || b <= 0 {
        return Err("L: must be a positive fraction".into());
    }
    // a/b of a whole note, in quarter notes.
    Ok(rat(4 * a, b))
}

fn parse_meter(value: &str) -> Result<TimeSignature, String> {
    let value = value.trim();
    match value {
        "C" => return Ok(TimeSignature::common_time()),
        "C|" => return TimeSignature::new(2, 2).map_err(|e| e.to_string()),
        _ => {}
    }
    let (n, d) = value
        .split_once('/')
        .ok_or_else(|| format!("M: field must be N/D, C, or C|, got {value:?}"))?;
    let n: u32 = n.trim().parse().map_err(|_| "bad meter numerator".to_string())?;
    let d: u32 = d.trim().parse().map_err(|_| "bad meter denominator".to_string())?;
    TimeSignature::new(n, d).map_err(|e| e.to_string())
}

/// `Q:1/4=120` or the bare legacy `Q:120` (read as quarter-note BPM),
/// normalized to quarter notes per minute.
fn parse_tempo(value: &str) -> Result<Rational, String> {
    let value = value.trim();
    match value.split_once('=') {
        None => {
            let n: i64 = value
                .parse()
                .map_err(|_| format!("Q: field must be N or a/b=N, got {value:?}"))?;
            if n <= 0 {
                return Err("tempo must be positive".into());
            }
            Ok(rat_int(n))
        }
        Some((unit, bpm)) => {
            let (a, b) = unit
                .trim()
                .split_once('/')
                .ok_or_else(|| format!("Q: beat unit must be a fraction, got {unit:?}"))?;
            let a: i64 = a.trim().parse().map_err(|_| "bad Q: unit numerator".to_string())?;
            let b: i64 = b.trim().parse().map_err(|_| "bad Q: unit denominator".to_string())?;
            let n: i64 = bpm.trim().parse().map_err(|_| "bad Q: BPM".to_string())?;
            if a <= 0 || b <= 0 || n <= 0 {
                return Err("Q: values must be positive".into());
            }
            // n beats of a/b whole notes per minute -> quarter BPM.
            Ok(rat_int(n) * rat(4 * a, b))
        }
    }
}

/// `K:` value: tonic letter with optional # or b, then an optional mode word.
/// Modal keys map onto the equivalent signature with major mode. Trailing
/// `clef=` style properties are ignored.
fn parse_key(value: &str) -> Result<KeySignature, String> {
    let value = value.trim();
    let mut chars = value.chars().peekable();
    let letter = chars.next().ok_or_else(|| "empty K: field".to_string())?;
    let step = Step::from_char(letter).ok_or_else(|| format!("bad key tonic {letter:?}"))?;
    if !letter.is_ascii_uppercase() {
        return Err(format!("key tonic must be uppercase, got {letter:?}"));
    }
    let mut alter: i8 = 0;
    if let Some(&c) = chars.peek() {
        if c == '#' {
            alter = 1;
            chars.next();
        } else if c == 'b' {
            alter = -1;
            chars.next();
        }
    }
    let rest: String = chars.collect();
    let mut words = rest.split_whitespace().peekable();

    let mut mode_word = String::new();
    if let Some(&w) = words.peek() {
        if !w.contains('=') {
            mode_word = w.to_string();
            words.next();
        }
    }
    // The mode may also be glued to the tonic: K:Am, K:Ador.
    if mode_word.is_empty() && !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
        let glued: String = rest.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
        if !glued.is_empty() {
            mode_word = glued;
        }
    }

    for prop in words {
        let lower = prop.to_ascii_lowercase();
        if lower.starts_with("transpose=") {
            return Err("K: transpose is not supported".into());
        }
        if !lower.contains('=') {
            return Err(format!("unexpected K: token {prop:?}"));
        }
        // clef=, middle=, stafflines= and friends carry no pitch semantics.
    }

    let lower = mode_word.to_ascii_lowercase();
    let modal_offset = |fifths_shift: i32| -> Result<KeySignature, String> {
        let fifths = step.fifths_base() + 7 * alter as i32 + fifths_shift;
        if !(-7..=7).contains(&fifths) {
            return Err(format!("key {value:?} is outside the circle of fifths"));
        }
        KeySignature::from_fifths(fifths as i8, Mode::Major).map_err(|e| e.to_string())
    };
    if lower.is_empty() || lower.starts_with("maj") || lower.starts_with("ion") {
        KeySignature::new(step, alter, Mode::Major).map_err(|e| e.to_string())
    } else if lower == "m" || lower.starts_with("min") || lower.starts_with("aeo") {
        KeySignature::new(step, alter, Mode::Minor).map_err(|e| e.to_string())
    } else if lower.starts_with("dor") {
        modal_offset(-2)
    } else if lower.starts_with("phr") {
        modal_offset(-4)
    } else if lower.starts_with("lyd") {
        modal_offset(1)
    } else if lower.starts_with("mix") {
        modal_offset(-1)
    } else if lower.starts_with("loc") {
        modal_offset(-5)
    } else {
        Err(format!("unrecognized mode {mode_word:?}"))
    }
}

fn build_score(doc: &AbcDocument) -> Result<Parsed, ParseError> {
    let mut builder = Builder::new();
    for field in &doc.header_fields {
        builder.header_field(field)?;
    }
    for (text, line) in &doc.body_lines {
        builder.body_line(text, *line)?;
    }

    // Close any measure left open at end of input.
    for voice in 0..builder.voices.len() {
        let last_line = doc.body_lines.last().map(|(_, l)| *l).unwrap_or(0);
        builder.close_measure(voice, last_line, 0)?;
    }

    let Builder { voices, header_tempo, title, genre, warnings, .. } = builder;
    let mut parts: Vec<Part> = voices
        .into_iter()
        .map(|v| Part {
            part_id: v.id,
            declared_name: v.name,
            midi_program: v.midi_program,
            measures: v.measures,
        })
        .collect();

    if parts.iter().all(|p| p.measures.is_empty()) {
        return Err(ParseError::Structure {
            kind: StructureKind::NoMusic,
            line: doc.body_lines.first().map(|(_, l)| *l).unwrap_or(1),
            message: "tune body contains no measures".into(),
        });
    }
    parts.retain(|p| !p.measures.is_empty() || !p.declared_name.is_empty());

    if let Some(tempo) = header_tempo {
        if let Some(m) = parts.get_mut(0).and_then(|p| p.measures.get_mut(0)) {
            m.tempo_qpm = Some(tempo);
        }
    }

    let measure_count = parts.iter().map(|p| p.measures.len()).max().unwrap_or(0);
    let score = Score { title, genre, parts, measure_count };
    Ok(Parsed { score, warnings })
}
