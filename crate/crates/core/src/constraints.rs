//! Instrument constraint table: playable MIDI range, chord span limit,
//! monophonic class, and name aliases.
//!
//! The built-in table covers ~30 standard orchestral and jazz instruments
//! with ranges taken from common orchestration references. It is explicitly
//! overridable through the config file (see `docs/constraints-format.md`);
//! unknown names fall back to a permissive default and are flagged.

use std::collections::BTreeMap;

/// Chord span limit in semitones; serialized as a number or the string "inf".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanLimit {
    Semitones(u8),
    Unbounded,
}

impl SpanLimit {
    pub const INF: SpanLimit = SpanLimit::Unbounded;

    pub fn limit(&self) -> Option<u8> {
        match self {
            SpanLimit::Semitones(s) => Some(*s),
            SpanLimit::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentConstraints {
    pub canonical_name: String,
    pub aliases: Vec<String>,
    pub midi_low: u8,
    pub midi_high: u8,
    pub max_span: SpanLimit,
    pub monophonic: bool,
}

impl InstrumentConstraints {
    fn entry(
        canonical: &str,
        aliases: &[&str],
        low: u8,
        high: u8,
        max_span: SpanLimit,
        monophonic: bool,
    ) -> Self {
        let mut all = vec![canonical.to_string()];
        all.extend(aliases.iter().map(|a| a.to_string()));
        InstrumentConstraints {
            canonical_name: canonical.to_string(),
            aliases: all,
            midi_low: low,
            midi_high: high,
            max_span,
            monophonic,
        }
    }

    pub fn in_range(&self, midi: u8) -> bool {
        self.midi_low <= midi && midi <= self.midi_high
    }
}

/// How a part name was resolved to a constraints entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// Matched an alias of a known instrument.
    Alias { canonical: String },
    /// Matched via General MIDI program number.
    MidiProgram { program: u8, canonical: String },
    /// No entry; the permissive default applies and the name passes through.
    Fallback { normalized: String },
}

impl Resolution {
    pub fn canonical(&self) -> &str {
        match self {
            Resolution::Alias { canonical } => canonical,
            Resolution::MidiProgram { canonical, .. } => canonical,
            Resolution::Fallback { normalized } => normalized,
        }
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, Resolution::Fallback { .. })
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintTable {
    entries: Vec<InstrumentConstraints>,
    alias_index: BTreeMap<String, usize>,
    gm_programs: BTreeMap<u8, usize>,
    default_entry: InstrumentConstraints,
}

impl ConstraintTable {
    pub fn new(entries: Vec<InstrumentConstraints>) -> Self {
        let mut alias_index = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            for alias in &e.aliases {
                alias_index.entry(normalize_name(alias)).or_insert(i);
            }
        }
        let mut gm_programs = BTreeMap::new();
        for (program, canonical) in GM_PROGRAM_MAP {
            if let Some(&i) = alias_index.get(&normalize_name(canonical)) {
                gm_programs.insert(*program, i);
            }
        }
        ConstraintTable {
            entries,
            alias_index,
            gm_programs,
            default_entry: InstrumentConstraints::entry(
                "Unknown",
                &[],
                0,
                127,
                SpanLimit::INF,
                false,
            ),
        }
    }

    pub fn builtin() -> Self {
        Self::new(builtin_entries())
    }

    pub fn entries(&self) -> &[InstrumentConstraints] {
        &self.entries
    }

    /// Resolve an instrument name (case-insensitive, ordinal suffixes like
    /// "Violin II" stripped) to its constraints entry.
    pub fn resolve_name(&self, name: &str) -> (Resolution, &InstrumentConstraints) {
        let normalized = normalize_name(name);
        if let Some(&i) = self.alias_index.get(&normalized) {
            let entry = &self.entries[i];
            return (Resolution::Alias { canonical: entry.canonical_name.clone() }, entry);
        }
        (Resolution::Fallback { normalized }, &self.default_entry)
    }

    /// Resolve by General MIDI program number (0-based).
    pub fn resolve_program(&self, program: u8) -> Option<(Resolution, &InstrumentConstraints)> {
        self.gm_programs.get(&program).map(|&i| {
            let entry = &self.entries[i];
            (
                Resolution::MidiProgram { program, canonical: entry.canonical_name.clone() },
                entry,
            )
        })
    }

    /// Resolve a part: explicit MIDI program wins, then the declared name.
    pub fn resolve_part(
        &self,
        declared_name: &str,
        midi_program: Option<u8>,
    ) -> (Resolution, &InstrumentConstraints) {
        if let Some(p) = midi_program {
            if let Some(hit) = self.resolve_program(p) {
                return hit;
            }
        }
        self.resolve_name(declared_name)
    }
}

impl Default for ConstraintTable {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Case-fold, collapse whitespace, and strip one trailing ordinal token
/// ("Violin II" -> "violin", "Flute 2" -> "flute", "1st Trumpet" -> "trumpet").
pub fn normalize_name(name: &str) -> String {
    let lowered = name.trim().to_lowercase();
    let mut tokens: Vec<&str> = lowered.split_whitespace().collect();
    if tokens.len() > 1 {
        if is_ordinal(tokens[tokens.len() - 1]) {
            tokens.pop();
        } else if is_ordinal(tokens[0]) {
            tokens.remove(0);
        }
    }
    tokens.join(" ")
}

fn is_ordinal(token: &str) -> bool {
    matches!(
        token,
        "i" | "ii" | "iii" | "iv" | "v" | "vi" | "1st" | "2nd" | "3rd" | "4th" | "5th" | "6th"
    ) || (!token.is_empty() && token.chars().all(|c| c.is_ascii_digit()))
}

/// General MIDI program (0-based) to canonical instrument name, for the
/// programs the built-in table knows about.
const GM_PROGRAM_MAP: &[(u8, &str)] = &[
    (0, "Piano"),
    (1, "Piano"),
    (2, "Piano"),
    (3, "Piano"),
    (4, "Electric Piano"),
    (5, "Electric Piano"),
    (6, "Harpsichord"),
    (8, "Celesta"),
    (9, "Glockenspiel"),
    (11, "Vibraphone"),
    (12, "Marimba"),
    (13, "Xylophone"),
    (16, "Organ"),
    (17, "Organ"),
    (18, "Organ"),
    (19, "Organ"),
    (20, "Organ"),
    (21, "Accordion"),
    (24, "Guitar"),
    (25, "Guitar"),
    (26, "Guitar"),
    (27, "Guitar"),
    (32, "Double Bass"),
    (33, "Electric Bass"),
    (34, "Electric Bass"),
    (35, "Electric Bass"),
    (40, "Violin"),
    (41, "Viola"),
    (42, "Cello"),
    (43, "Double Bass"),
    (46, "Harp"),
    (47, "Timpani"),
    (56, "Trumpet"),
    (57, "Trombone"),
    (58, "Tuba"),
    (60, "French Horn"),
    (64, "Soprano Saxophone"),
    (65, "Alto Saxophone"),
    (66, "Tenor Saxophone"),
    (67, "Baritone Saxophone"),
    (68, "Oboe"),
    (69, "English Horn"),
    (70, "Bassoon"),
    (71, "Clarinet"),
    (72, "Piccolo"),
    (73, "Flute"),
    (74, "Recorder"),
];

fn builtin_entries() -> Vec<InstrumentConstraints> {
    use InstrumentConstraints as E;
    let inf = SpanLimit::INF;
    vec![
        // Woodwinds
        E::entry("Piccolo", &["picc", "flauto piccolo"], 74, 102, inf, true),
        E::entry("Flute", &["fl", "flauto", "flöte", "traverso"], 60, 96, inf, true),
        E::entry("Recorder", &["blockflöte", "descant recorder"], 72, 98, inf, true),
        E::entry("Oboe", &["ob", "hautbois"], 58, 91, inf, true),
        E::entry("English Horn", &["cor anglais", "englischhorn"], 52, 81, inf, true),
        E::entry("Clarinet", &["cl", "clarinet in bb", "clarinet in a", "klarinette"], 50, 94, inf, true),
        E::entry("Bass Clarinet", &["bass clarinet in bb"], 38, 77, inf, true),
        E::entry("Bassoon", &["bsn", "fagott", "fagotto", "basson"], 34, 75, inf, true),
        E::entry("Contrabassoon", &["double bassoon", "kontrafagott"], 22, 57, inf, true),
        E::entry("Soprano Saxophone", &["soprano sax"], 56, 88, inf, true),
        E::entry("Alto Saxophone", &["alto sax"], 49, 81, inf, true),
        E::entry("Tenor Saxophone", &["tenor sax"], 44, 76, inf, true),
        E::entry("Baritone Saxophone", &["baritone sax", "bari sax"], 37, 69, inf, true),
        // Brass
        E::entry("French Horn", &["horn", "horn in f", "corno"], 34, 77, inf, true),
        E::entry("Trumpet", &["tpt", "trumpet in bb", "trumpet in c", "tromba"], 55, 82, inf, true),
        E::entry("Trombone", &["tbn", "posaune"], 40, 72, inf, true),
        E::entry("Bass Trombone", &[], 34, 67, inf, true),
        E::entry("Tuba", &["bass tuba"], 26, 58, inf, true),
        // Keyboards and plucked
        E::entry("Piano", &["pianoforte", "pno", "klavier", "grand piano", "acoustic grand piano"], 21, 108, SpanLimit::Semitones(15), false),
        E::entry("Electric Piano", &["rhodes", "e-piano"], 21, 108, SpanLimit::Semitones(15), false),
        E::entry("Harpsichord", &["cembalo", "clavecin"], 29, 89, SpanLimit::Semitones(15), false),
        E::entry("Organ", &["pipe organ", "church organ", "orgel"], 21, 108, SpanLimit::Semitones(15), false),
        E::entry("Celesta", &["celeste"], 60, 108, SpanLimit::Semitones(15), false),
        E::entry("Accordion", &["akkordeon"], 41, 105, SpanLimit::Semitones(15), false),
        E::entry("Harp", &["hp", "arpa", "harpe"], 24, 103, inf, false),
        E::entry("Guitar", &["acoustic guitar", "classical guitar", "electric guitar", "gtr"], 40, 83, SpanLimit::Semitones(24), false),
        E::entry("Banjo", &[], 48, 88, SpanLimit::Semitones(24), false),
        E::entry("Mandolin", &[], 55, 88, SpanLimit::Semitones(24), false),
        E::entry("Electric Bass", &["bass guitar", "e-bass"], 28, 67, SpanLimit::Semitones(24), false),
        // Strings
        E::entry("Violin", &["vln", "violino", "geige", "fiddle"], 55, 103, SpanLimit::Semitones(24), false),
        E::entry("Viola", &["vla", "bratsche"], 48, 93, SpanLimit::Semitones(24), false),
        E::entry("Cello", &["violoncello", "vc", "vcl", "violoncelle"], 36, 84, SpanLimit::Semitones(24), false),
        E::entry("Double Bass", &["contrabass", "bass", "upright bass", "string bass", "kontrabass"], 28, 67, SpanLimit::Semitones(24), false),
        // Pitched percussion
        E::entry("Timpani", &["kettle drums", "pauken"], 40, 55, inf, false),
        E::entry("Xylophone", &[], 65, 108, SpanLimit::Semitones(15), false),
        E::entry("Marimba", &[], 45, 96, SpanLimit::Semitones(15), false),
        E::entry("Vibraphone", &["vibes"], 53, 89, SpanLimit::Semitones(15), false),
        E::entry("Glockenspiel", &["orchestra bells"], 79, 108, SpanLimit::Semitones(15), false),
        // Voices
        E::entry("Soprano", &["soprano voice", "cantus"], 60, 84, inf, true),
        E::entry("Alto", &["alto voice", "altus", "contralto"], 53, 77, inf, true),
        E::entry("Tenor", &["tenor voice"], 48, 72, inf, true),
        E::entry("Bass Voice", &["basso", "bassus"], 40, 64, inf, true),
    ]
}
