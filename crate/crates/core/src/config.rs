//! Evaluation configuration: the instrument constraint table, density
//! thresholds, and metric flags, with a stable fingerprint so reports from
//! different configurations are never silently aggregated together.
//!
//! Precedence: built-in defaults, then a config file, then CLI flags; the
//! fingerprint covers the merged result. File format in
//! `docs/constraints-format.md`.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraints::{ConstraintTable, InstrumentConstraints, SpanLimit};
use crate::plan::DensityThresholds;
use crate::rational::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("config error at {pointer}: {message}")]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { pointer: pointer.into(), message: message.into() }
    }
}

#[derive(Debug, Clone)]
#[derive(Default)]
pub struct EvalConfig {
    pub constraints: ConstraintTable,
    pub density_thresholds: DensityThresholds,
    pub jitter_strict: bool,
    pub per_part_structure: bool,
}


impl EvalConfig {
    /// Merge a config file into this configuration. Instrument entries
    /// override same-named built-ins or add new ones.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| ConfigError::new("", format!("not valid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| ConfigError::new("", "expected an object"))?;
        for key in obj.keys() {
            if !matches!(
                key.as_str(),
                "density_thresholds" | "jitter_strict" | "per_part_structure" | "instruments"
                    | "replace_instruments"
            ) {
                return Err(ConfigError::new(format!("/{key}"), "unknown field"));
            }
        }

        if let Some(v) = obj.get("jitter_strict") {
            self.jitter_strict = v
                .as_bool()
                .ok_or_else(|| ConfigError::new("/jitter_strict", "expected a boolean"))?;
        }
        if let Some(v) = obj.get("per_part_structure") {
            self.per_part_structure = v
                .as_bool()
                .ok_or_else(|| ConfigError::new("/per_part_structure", "expected a boolean"))?;
        }
        if let Some(v) = obj.get("density_thresholds") {
            let t = v
                .as_object()
                .ok_or_else(|| ConfigError::new("/density_thresholds", "expected an object"))?;
            let medium = read_rational(t, "medium_from", "/density_thresholds")?;
            let high = read_rational(t, "high_above", "/density_thresholds")?;
            if let Some(m) = medium {
                self.density_thresholds.medium_from = m;
            }
            if let Some(h) = high {
                self.density_thresholds.high_above = h;
            }
            if self.density_thresholds.medium_from > self.density_thresholds.high_above {
                return Err(ConfigError::new(
                    "/density_thresholds",
                    "medium_from must not exceed high_above",
                ));
            }
        }

        if let Some(v) = obj.get("instruments") {
            let list = v
                .as_array()
                .ok_or_else(|| ConfigError::new("/instruments", "expected an array"))?;
            let replace = obj
                .get("replace_instruments")
                .map(|r| {
                    r.as_bool().ok_or_else(|| {
                        ConfigError::new("/replace_instruments", "expected a boolean")
                    })
                })
                .transpose()?
                .unwrap_or(false);
            let mut entries: Vec<InstrumentConstraints> =
                if replace { Vec::new() } else { self.constraints.entries().to_vec() };
            for (i, item) in list.iter().enumerate() {
                let entry = read_instrument(item, &format!("/instruments/{i}"))?;
                match entries.iter_mut().find(|e| e.canonical_name == entry.canonical_name) {
                    Some(existing) => *existing = entry,
                    None => entries.push(entry),
                }
            }
            self.constraints = ConstraintTable::new(entries);
        }
        Ok(())
    }

    /// Canonical JSON of the merged configuration; the fingerprint hashes it.
    pub fn canonical_json(&self) -> Value {
        let instruments: Vec<Value> = self
            .constraints
            .entries()
            .iter()
            .map(|e| {
                json!({
                    "canonical": e.canonical_name,
                    "aliases": e.aliases,
                    "midi_range": [e.midi_low, e.midi_high],
                    "max_span": match e.max_span.limit() {
                        Some(s) => json!(s),
                        None => json!("inf"),
                    },
                    "monophonic": e.monophonic,
                })
            })
            .collect();
        json!({
            "schema_version": "1",
            "density_thresholds": {
                "medium_from": crate::plan::rational_to_number(self.density_thresholds.medium_from),
                "high_above": crate::plan::rational_to_number(self.density_thresholds.high_above),
            },
            "jitter_strict": self.jitter_strict,
            "per_part_structure": self.per_part_structure,
            "instruments": instruments,
        })
    }

    /// Hex SHA-256 of the canonical configuration JSON.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(&self.canonical_json()).expect("config is valid JSON");
        let digest = Sha256::digest(text.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

fn read_rational(
    obj: &Map<String, Value>,
    key: &str,
    ptr: &str,
) -> Result<Option<Rational>, ConfigError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => {
            let number = v
                .as_number()
                .ok_or_else(|| ConfigError::new(format!("{ptr}/{key}"), "expected a number"))?;
            crate::plan::decimal_to_rational(number.as_str())
                .map(Some)
                .ok_or_else(|| ConfigError::new(format!("{ptr}/{key}"), "number out of range"))
        }
    }
}

fn read_instrument(value: &Value, ptr: &str) -> Result<InstrumentConstraints, ConfigError> {
    let obj = value
        .as_object()
        .ok_or_else(|| ConfigError::new(ptr, "expected an object"))?;
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "canonical" | "aliases" | "midi_range" | "max_span" | "monophonic"
        ) {
            return Err(ConfigError::new(format!("{ptr}/{key}"), "unknown field"));
        }
    }
    let canonical = obj
        .get("canonical")
        .and_then(Value::as_str)
        .ok_or_else(|| ConfigError::new(format!("{ptr}/canonical"), "expected a string"))?
        .to_string();
    let mut aliases = vec![canonical.clone()];
    if let Some(list) = obj.get("aliases") {
        let list = list
            .as_array()
            .ok_or_else(|| ConfigError::new(format!("{ptr}/aliases"), "expected an array"))?;
        for (i, a) in list.iter().enumerate() {
            aliases.push(
                a.as_str()
                    .ok_or_else(|| {
                        ConfigError::new(format!("{ptr}/aliases/{i}"), "expected a string")
                    })?
                    .to_string(),
            );
        }
    }
    let range = obj
        .get("midi_range")
        .and_then(Value::as_array)
        .ok_or_else(|| ConfigError::new(format!("{ptr}/midi_range"), "expected [low, high]"))?;
    let low = range
        .first()
        .and_then(Value::as_u64)
        .filter(|&v| v <= 127)
        .ok_or_else(|| ConfigError::new(format!("{ptr}/midi_range/0"), "expected 0-127"))?;
    let high = range
        .get(1)
        .and_then(Value::as_u64)
        .filter(|&v| v <= 127 && v >= low)
        .ok_or_else(|| ConfigError::new(format!("{ptr}/midi_range/1"), "expected low-127"))?;
    let max_span = match obj.get("max_span") {
        None => SpanLimit::Unbounded,
        Some(Value::String(s)) if s == "inf" => SpanLimit::Unbounded,
        Some(v) => SpanLimit::Semitones(
            v.as_u64()
                .filter(|&s| s <= 127)
                .ok_or_else(|| {
                    ConfigError::new(format!("{ptr}/max_span"), "expected 0-127 or \"inf\"")
                })? as u8,
        ),
    };
    let monophonic = obj
        .get("monophonic")
        .and_then(Value::as_bool)
        .ok_or_else(|| ConfigError::new(format!("{ptr}/monophonic"), "expected a boolean"))?;
    Ok(InstrumentConstraints {
        canonical_name: canonical,
        aliases,
        midi_low: low as u8,
        midi_high: high as u8,
        max_span,
        monophonic,
    })
}
