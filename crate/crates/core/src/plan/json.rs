//! Plan interchange JSON. Canonical form: sorted object keys, measure
//! entries in index order, integer or minimal exact decimal numbers.

use std::collections::BTreeSet;

use serde_json::{json, Map, Number, Value};
use thiserror::Error;

use crate::rational::{rat, rat_int, Rational};
use crate::score::{KeySignature, Mode, Step, TimeSignature};

use super::{Density, MeasurePlan, PlanDocument};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("schema violation at {pointer}: {message}")]
pub struct SchemaError {
    /// JSON pointer to the first offending value.
    pub pointer: String,
    pub message: String,
}

impl SchemaError {
    fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError { pointer: pointer.into(), message: message.into() }
    }
}

pub fn write_plan(plan: &PlanDocument) -> Vec<u8> {
    let measures: Vec<Value> = plan
        .measures
        .iter()
        .map(|m| {
            let mut obj = Map::new();
            obj.insert("index".into(), json!(m.index));
            obj.insert(
                "instruments".into(),
                Value::Array(m.instruments.iter().map(|i| json!(i)).collect()),
            );
            obj.insert(
                "pitch_range".into(),
                match m.pitch_range {
                    Some((lo, hi)) => json!([lo, hi]),
                    None => Value::Null,
                },
            );
            obj.insert("density".into(), json!(m.density.as_str()));
            obj.insert("tempo_qpm".into(), Value::Number(rational_to_number(m.tempo_qpm)));
            obj.insert("time_signature".into(), json!(m.time_signature.to_string()));
            obj.insert(
                "key_signature".into(),
                json!({
                    "tonic": m.key_signature.tonic_name(),
                    "mode": m.key_signature.mode.to_string(),
                }),
            );
            obj.insert(
                "chord_pcs".into(),
                Value::Array(m.chord_pcs.iter().map(|pc| json!(pc)).collect()),
            );
            obj.insert(
                "dynamics".into(),
                m.dynamics.as_ref().map_or(Value::Null, |d| json!(d)),
            );
            Value::Object(obj)
        })
        .collect();

    let doc = json!({
        "n_measures": plan.n_measures,
        "genre": plan.genre.as_ref().map_or(Value::Null, |g| json!(g)),
        "instrumentation": plan.instrumentation.iter().collect::<Vec<_>>(),
        "measures": measures,
    });
    let mut bytes = serde_json::to_vec(&doc).expect("plan serialization cannot fail");
    bytes.push(b'\n');
    bytes
}

pub fn read_plan(bytes: &[u8]) -> Result<PlanDocument, SchemaError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| SchemaError::new("", format!("not valid JSON: {e}")))?;
    let root = expect_object(&value, "")?;
    reject_unknown_keys(root, "", &["n_measures", "genre", "instrumentation", "measures"])?;

    let n_measures = expect_u64(require(root, "", "n_measures")?, "/n_measures")? as usize;
    if n_measures == 0 {
        return Err(SchemaError::new("/n_measures", "must be a positive integer"));
    }
    let genre = match require(root, "", "genre")? {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        _ => return Err(SchemaError::new("/genre", "expected string or null")),
    };
    let instrumentation: BTreeSet<String> =
        expect_array(require(root, "", "instrumentation")?, "/instrumentation")?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                expect_string(v, &format!("/instrumentation/{i}")).map(str::to_string)
            })
            .collect::<Result<_, _>>()?;

    let raw_measures = expect_array(require(root, "", "measures")?, "/measures")?;
    let mut measures = Vec::with_capacity(raw_measures.len());
    let mut prev_index: Option<usize> = None;
    for (i, raw) in raw_measures.iter().enumerate() {
        let ptr = format!("/measures/{i}");
        let m = read_measure(raw, &ptr, n_measures, &instrumentation)?;
        if let Some(prev) = prev_index {
            if m.index <= prev {
                return Err(SchemaError::new(
                    format!("{ptr}/index"),
                    "measure indices must be strictly increasing",
                ));
            }
        }
        prev_index = Some(m.index);
        measures.push(m);
    }

    Ok(PlanDocument { n_measures, genre, instrumentation, measures })
}

fn read_measure(
    value: &Value,
    ptr: &str,
    n_measures: usize,
    instrumentation: &BTreeSet<String>,
) -> Result<MeasurePlan, SchemaError> {
    let obj = expect_object(value, ptr)?;
    reject_unknown_keys(
        obj,
        ptr,
        &[
            "index",
            "instruments",
            "pitch_range",
            "density",
            "tempo_qpm",
            "time_signature",
            "key_signature",
            "chord_pcs",
            "dynamics",
        ],
    )?;

    let index = expect_u64(require(obj, ptr, "index")?, &format!("{ptr}/index"))? as usize;
    if index >= n_measures {
        return Err(SchemaError::new(
            format!("{ptr}/index"),
            format!("index {index} out of bounds for n_measures {n_measures}"),
        ));
    }

    let mut instruments = BTreeSet::new();
    for (j, v) in expect_array(require(obj, ptr, "instruments")?, &format!("{ptr}/instruments"))?
        .iter()
        .enumerate()
    {
        let name = expect_string(v, &format!("{ptr}/instruments/{j}"))?;
        if !instrumentation.contains(name) {
            return Err(SchemaError::new(
                format!("{ptr}/instruments/{j}"),
                format!("instrument {name:?} not in the instrumentation set"),
            ));
        }
        instruments.insert(name.to_string());
    }

    let pitch_range = match require(obj, ptr, "pitch_range")? {
        Value::Null => None,
        v => {
            let pair = expect_array(v, &format!("{ptr}/pitch_range"))?;
            if pair.len() != 2 {
                return Err(SchemaError::new(
                    format!("{ptr}/pitch_range"),
                    "expected [min, max]",
                ));
            }
            let lo = expect_u64(&pair[0], &format!("{ptr}/pitch_range/0"))?;
            let hi = expect_u64(&pair[1], &format!("{ptr}/pitch_range/1"))?;
            if lo > 127 || hi > 127 || lo > hi {
                return Err(SchemaError::new(
                    format!("{ptr}/pitch_range"),
                    "expected 0 <= min <= max <= 127",
                ));
            }
            Some((lo as u8, hi as u8))
        }
    };

    let density_text = expect_string(require(obj, ptr, "density")?, &format!("{ptr}/density"))?;
    let density = Density::from_name(density_text).ok_or_else(|| {
        SchemaError::new(format!("{ptr}/density"), "expected \"low\", \"medium\", or \"high\"")
    })?;

    let tempo_qpm = expect_rational(require(obj, ptr, "tempo_qpm")?, &format!("{ptr}/tempo_qpm"))?;
    if tempo_qpm <= rat_int(0) {
        return Err(SchemaError::new(format!("{ptr}/tempo_qpm"), "tempo must be positive"));
    }

    let ts_text =
        expect_string(require(obj, ptr, "time_signature")?, &format!("{ptr}/time_signature"))?;
    let time_signature = parse_time_signature(ts_text)
        .ok_or_else(|| SchemaError::new(format!("{ptr}/time_signature"), "expected \"N/D\""))?;

    let key_signature = read_key(
        require(obj, ptr, "key_signature")?,
        &format!("{ptr}/key_signature"),
    )?;

    let mut chord_pcs = BTreeSet::new();
    for (j, v) in expect_array(require(obj, ptr, "chord_pcs")?, &format!("{ptr}/chord_pcs"))?
        .iter()
        .enumerate()
    {
        let pc = expect_u64(v, &format!("{ptr}/chord_pcs/{j}"))?;
        if pc > 11 {
            return Err(SchemaError::new(
                format!("{ptr}/chord_pcs/{j}"),
                "pitch class must be 0-11",
            ));
        }
        chord_pcs.insert(pc as u8);
    }

    let dynamics = match require(obj, ptr, "dynamics")? {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        _ => {
            return Err(SchemaError::new(
                format!("{ptr}/dynamics"),
                "expected string or null",
            ))
        }
    };

    Ok(MeasurePlan {
        index,
        instruments,
        pitch_range,
        density,
        tempo_qpm,
        time_signature,
        key_signature,
        chord_pcs,
        dynamics,
    })
}

fn read_key(value: &Value, ptr: &str) -> Result<KeySignature, SchemaError> {
    let obj = expect_object(value, ptr)?;
    reject_unknown_keys(obj, ptr, &["tonic", "mode"])?;
    let tonic = expect_string(require(obj, ptr, "tonic")?, &format!("{ptr}/tonic"))?;
    let mode_text = expect_string(require(obj, ptr, "mode")?, &format!("{ptr}/mode"))?;
    let mode = match mode_text {
        "major" => Mode::Major,
        "minor" => Mode::Minor,
        _ => {
            return Err(SchemaError::new(
                format!("{ptr}/mode"),
                "expected \"major\" or \"minor\"",
            ))
        }
    };
    let mut chars = tonic.chars();
    let step = chars
        .next()
        .and_then(Step::from_char)
        .filter(|_| tonic.starts_with(|c: char| c.is_ascii_uppercase()))
        .ok_or_else(|| SchemaError::new(format!("{ptr}/tonic"), "expected a letter A-G"))?;
    let alter = match chars.as_str() {
        "" => 0,
        "#" => 1,
        "##" => 2,
        "b" => -1,
        "bb" => -2,
        other => {
            return Err(SchemaError::new(
                format!("{ptr}/tonic"),
                format!("bad accidental {other:?}"),
            ))
        }
    };
    KeySignature::new(step, alter, mode)
        .map_err(|e| SchemaError::new(format!("{ptr}/tonic"), e.to_string()))
}

fn parse_time_signature(text: &str) -> Option<TimeSignature> {
    let (n, d) = text.split_once('/')?;
    TimeSignature::new(n.parse().ok()?, d.parse().ok()?).ok()
}

// ── JSON helpers ──────────────────────────────────────────────────────

fn require<'a>(
    obj: &'a Map<String, Value>,
    ptr: &str,
    key: &str,
) -> Result<&'a Value, SchemaError> {
    obj.get(key)
        .ok_or_else(|| SchemaError::new(format!("{ptr}/{key}"), "missing required field"))
}

fn reject_unknown_keys(
    obj: &Map<String, Value>,
    ptr: &str,
    known: &[&str],
) -> Result<(), SchemaError> {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            return Err(SchemaError::new(format!("{ptr}/{key}"), "unknown field"));
        }
    }
    Ok(())
}

fn expect_object<'a>(value: &'a Value, ptr: &str) -> Result<&'a Map<String, Value>, SchemaError> {
    value
        .as_object()
        .ok_or_else(|| SchemaError::new(ptr, "expected an object"))
}

fn expect_array<'a>(value: &'a Value, ptr: &str) -> Result<&'a Vec<Value>, SchemaError> {
    value
        .as_array()
        .ok_or_else(|| SchemaError::new(ptr, "expected an array"))
}

fn expect_string<'a>(value: &'a Value, ptr: &str) -> Result<&'a str, SchemaError> {
    value
        .as_str()
        .ok_or_else(|| SchemaError::new(ptr, "expected a string"))
}

fn expect_u64(value: &Value, ptr: &str) -> Result<u64, SchemaError> {
    value
        .as_u64()
        .ok_or_else(|| SchemaError::new(ptr, "expected a non-negative integer"))
}

fn expect_rational(value: &Value, ptr: &str) -> Result<Rational, SchemaError> {
    let number = value
        .as_number()
        .ok_or_else(|| SchemaError::new(ptr, "expected a number"))?;
    decimal_to_rational(number.as_str())
        .ok_or_else(|| SchemaError::new(ptr, "number is too large or too precise"))
}

/// Exact conversion of a JSON decimal literal to a rational.
pub(crate) fn decimal_to_rational(text: &str) -> Option<Rational> {
    let (sign, rest) = match text.strip_prefix('-') {
        Some(r) => (-1i64, r),
        None => (1, text),
    };
    let (mantissa_text, exp) = match rest.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (rest, 0),
    };
    let (int_part, frac_part) = match mantissa_text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa_text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: String = format!("{int_part}{frac_part}");
    if digits.len() > 18 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mantissa: i64 = digits.parse().ok()?;
    let e = exp.checked_sub(frac_part.len() as i32)?;
    if !(-18..=18).contains(&e) {
        return None;
    }
    let value = if e >= 0 {
        rat_int(mantissa.checked_mul(10i64.checked_pow(e as u32)?)?)
    } else {
        rat(mantissa, 10i64.pow((-e) as u32))
    };
    Some(value * rat_int(sign))
}

/// Render a rational as a JSON number: integer when integral, the minimal
/// exact decimal when the denominator is 2^a·5^b, and a 12-digit half-even
/// rounding otherwise (the only lossy corner, noted in the format docs).
pub(crate) fn rational_to_number(value: Rational) -> Number {
    if value.is_integer() {
        return Number::from(value.to_integer());
    }
    let denom = *value.denom();
    let mut d = denom;
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    let text = if d == 1 && twos.max(fives) <= 18 {
        let k = twos.max(fives);
        let scaled = (*value.numer() as i128) * 10i128.pow(k) / denom as i128;
        format_decimal(scaled, k)
    } else {
        // Non-terminating decimal: round half to even at 12 places.
        let scale = 10i128.pow(12);
        let n = (*value.numer() as i128) * scale;
        let d = denom as i128;
        let q = n.div_euclid(d);
        let r = n.rem_euclid(d);
        let rounded = match (2 * r).cmp(&d) {
            std::cmp::Ordering::Greater => q + 1,
            std::cmp::Ordering::Less => q,
            std::cmp::Ordering::Equal => {
                if q % 2 == 0 {
                    q
                } else {
                    q + 1
                }
            }
        };
        format_decimal(rounded, 12)
    };
    text.parse().expect("decimal text is a valid JSON number")
}

fn format_decimal(scaled: i128, places: u32) -> String {
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    let base = 10u128.pow(places);
    let int = abs / base;
    let mut frac = format!("{:0width$}", abs % base, width = places as usize);
    while frac.ends_with('0') {
        frac.pop();
    }
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}
