//! Per-piece metric reports and corpus aggregation: the batch layer behind
//! the CLI. Invalid files are reported, never scored; corpus means run over
//! valid files only, in exact rational arithmetic until final rendering.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;
use walkdir::WalkDir;

use crate::abc::{validate_source, Severity, ValidationReport};
use crate::config::EvalConfig;
use crate::metrics::adherence::{
    evaluate_adherence, evaluate_utilization, AdherenceResult, KeyMatch, UtilizationResult,
};
use crate::metrics::playability::{evaluate_playability, PlayabilityResult};
use crate::metrics::readability::{evaluate_readability, ReadabilityResult};
use crate::plan::{extract_plan_with, read_plan, select_pivots, write_plan, PlanDocument};
use crate::rational::{
    rat_int, render_2dp, render_2dp_big, render_exact, render_exact_big, to_big, Rational,
};
use crate::score::Score;
use crate::structure::{cosiatec_cover, score_to_pointset};

pub const SCHEMA_VERSION: &str = "1";

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Slot for an out-of-repo semantic similarity scorer. Nothing in this crate
/// implements it; reports carry `external_similarity: null` until one is
/// plugged in.
pub trait ExternalScorer: Sync {
    fn similarity(&self, score: &Score, plan: Option<&PlanDocument>) -> Option<f64>;
}

#[derive(Clone, Copy)]
pub struct EvalOptions<'a> {
    pub config: &'a EvalConfig,
    pub seed: u64,
    pub external: Option<&'a dyn ExternalScorer>,
}

impl<'a> EvalOptions<'a> {
    pub fn new(config: &'a EvalConfig) -> Self {
        EvalOptions { config, seed: 0, external: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub score: Rational,
    pub per_part: bool,
    pub decimated: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub piece_id: String,
    pub validity: ValidationReport,
    pub playability: Option<PlayabilityResult>,
    pub readability: Option<ReadabilityResult>,
    pub utilization: Option<UtilizationResult>,
    pub adherence: Option<AdherenceResult>,
    pub structure: Option<StructureReport>,
    pub external_similarity: Option<f64>,
    pub tool_version: String,
    pub config_fingerprint: String,
}

/// Evaluate one piece of ABC source. Parse and validity failures produce a
/// gated report; they are data, not errors.
pub fn evaluate_source(
    piece_id: &str,
    text: &str,
    plan: Option<&PlanDocument>,
    opts: &EvalOptions<'_>,
) -> MetricReport {
    let config = opts.config;
    let (validity, maybe_score) = validate_source(text);
    let fingerprint = config.fingerprint();

    let score = match (&maybe_score, validity.is_valid()) {
        (Some(score), true) => score,
        _ => {
            return MetricReport {
                piece_id: piece_id.to_string(),
                validity,
                playability: None,
                readability: None,
                utilization: None,
                adherence: None,
                structure: None,
                external_similarity: None,
                tool_version: tool_version().to_string(),
                config_fingerprint: fingerprint,
            };
        }
    };

    let structure = if config.per_part_structure {
        crate::structure::structure_score(score, true)
            .ok()
            .map(|s| StructureReport { score: s, per_part: true, decimated: None })
    } else {
        score_to_pointset(score).ok().map(|ps| {
            let result = cosiatec_cover(&ps);
            StructureReport {
                score: result.structure_score,
                per_part: false,
                decimated: result.decimated,
            }
        })
    };

    MetricReport {
        piece_id: piece_id.to_string(),
        playability: Some(evaluate_playability(score, &config.constraints)),
        readability: Some(evaluate_readability(score, &config.constraints, config.jitter_strict)),
        utilization: Some(evaluate_utilization(score, &config.constraints)),
        adherence: plan.map(|p| evaluate_adherence(p, score, &config.constraints)),
        structure,
        external_similarity: opts.external.and_then(|e| e.similarity(score, plan)),
        validity,
        tool_version: tool_version().to_string(),
        config_fingerprint: fingerprint,
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Plan { path: PathBuf, message: String },
}

/// Evaluate one file, optionally against a plan file.
pub fn evaluate_file(
    path: &Path,
    plan_path: Option<&Path>,
    opts: &EvalOptions<'_>,
) -> Result<MetricReport, EvalError> {
    let text = fs::read_to_string(path)
        .map_err(|e| EvalError::Io { path: path.to_path_buf(), source: e })?;
    let plan = plan_path
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| EvalError::Io { path: p.to_path_buf(), source: e })?;
            read_plan(&bytes).map_err(|e| EvalError::Plan { path: p.to_path_buf(), message: e.to_string() })
        })
        .transpose()?;
    let piece_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(evaluate_source(&piece_id, &text, plan.as_ref(), opts))
}

// ── JSON rendering ────────────────────────────────────────────────────

/// A score as JSON: `{"display": "66.67", "exact": "200/3"}`, or null when
/// the constituent does not apply. Aggregation recomputes from `exact`.
fn score_json(value: Option<Rational>) -> Value {
    match value {
        None => Value::Null,
        Some(v) => json!({ "display": render_2dp(v), "exact": render_exact(v) }),
    }
}

fn big_json(value: Option<&BigRational>) -> Value {
    match value {
        None => Value::Null,
        Some(v) => json!({ "display": render_2dp_big(v), "exact": render_exact_big(v) }),
    }
}

impl MetricReport {
    pub fn to_json(&self) -> Value {
        let issues: Vec<Value> = self
            .validity
            .issues
            .iter()
            .map(|i| {
                json!({
                    "severity": match i.severity {
                        Severity::Error => "error",
                        Severity::Warning => "warning",
                    },
                    "code": i.code.to_string(),
                    "measure": i.measure_index,
                    "part": i.part_id,
                    "message": i.message,
                })
            })
            .collect();

        let playability = self.playability.as_ref().map_or(Value::Null, |p| {
            json!({
                "per_instrument": p.per_part.iter().map(|part| json!({
                    "part": part.part_id,
                    "instrument": part.instrument,
                    "fallback_constraints": part.fallback_constraints,
                    "pitch_range": score_json(part.pitch_range_pct),
                    "pitch_span": score_json(part.pitch_span_pct),
                    "monophonic_correctness": score_json(part.monophonic_pct),
                    "rhythmic_overlap": score_json(part.overlap_pct),
                })).collect::<Vec<_>>(),
                "total": score_json(p.total_pct),
            })
        });

        let readability = self.readability.as_ref().map_or(Value::Null, |r| {
            json!({
                "per_instrument": r.per_part.iter().map(|part| json!({
                    "part": part.part_id,
                    "instrument": part.instrument,
                    "rhythmic_jitter": score_json(part.jitter_pct),
                    "rhythmic_complexity": score_json(part.tie_complexity_pct),
                    "accidental_consistency": score_json(part.accidental_consistency_pct),
                    "enharmonic_directionality": score_json(part.enharmonic_pct),
                })).collect::<Vec<_>>(),
                "total": score_json(r.total_pct),
            })
        });

        let utilization = self.utilization.as_ref().map_or(Value::Null, |u| {
            json!({
                "per_instrument": u.per_part.iter().map(|part| json!({
                    "part": part.part_id,
                    "instrument": part.instrument,
                    "m_first": part.m_first,
                    "m_last": part.m_last,
                    "active_measure_count": part.active_measure_count,
                    "coverage_ratio": score_json(Some(part.coverage_pct)),
                    "active_density": score_json(Some(part.density_pct)),
                })).collect::<Vec<_>>(),
                "mean_coverage_ratio": score_json(u.mean_coverage_pct),
                "mean_active_density": score_json(u.mean_density_pct),
            })
        });

        let adherence = self.adherence.as_ref().map_or(Value::Null, |a| {
            let trace = |items: &[crate::metrics::adherence::NameResolution]| -> Vec<Value> {
                items
                    .iter()
                    .map(|r| {
                        json!({
                            "original": r.original,
                            "resolved": r.resolved,
                            "via_alias": r.via_alias,
                        })
                    })
                    .collect()
            };
            json!({
                "tempo": a.tempo.as_ref().map_or(Value::Null, |t| json!({
                    "plan_qpm": score_json(Some(t.plan_qpm)),
                    "score_qpm": score_json(t.score_qpm),
                    "matched": t.matched,
                    "near_miss": t.near_miss,
                })),
                "key": a.key.map_or(Value::Null, |k| json!(match k {
                    KeyMatch::Exact => "exact",
                    KeyMatch::Relative => "relative",
                    KeyMatch::None => "none",
                })),
                "time": a.time.map_or(Value::Null, |t| json!(t)),
                "instruments": {
                    "jaccard_pct": score_json(Some(a.instruments.pct)),
                    "plan_trace": trace(&a.instruments.plan_trace),
                    "score_trace": trace(&a.instruments.score_trace),
                },
            })
        });

        let structure = self.structure.as_ref().map_or(Value::Null, |s| {
            json!({
                "score": score_json(Some(s.score)),
                "per_part": s.per_part,
                "decimated": s.decimated.map(|(b, a)| json!([b, a])),
            })
        });

        json!({
            "schema_version": SCHEMA_VERSION,
            "piece_id": self.piece_id,
            "tool_version": self.tool_version,
            "config_fingerprint": self.config_fingerprint,
            "valid": self.validity.is_valid(),
            "issues": issues,
            "playability": playability,
            "readability": readability,
            "utilization": utilization,
            "adherence": adherence,
            "structure": structure,
            "external_similarity": self.external_similarity,
        })
    }
}

// ── Corpus aggregation ────────────────────────────────────────────────

/// Metric rows in presentation order.
pub const METRIC_ORDER: &[&str] = &[
    "pitch_range",
    "monophonic_correctness",
    "pitch_span",
    "rhythmic_overlap",
    "total_playability",
    "rhythmic_complexity",
    "rhythmic_jitter",
    "accidental_consistency",
    "enharmonic_directionality",
    "total_readability",
    "tempo_match",
    "key_signature_match",
    "time_signature_match",
    "instrument_match",
    "external_similarity",
    "coverage_ratio",
    "active_density",
    "structure",
];

/// One file's contribution to a named metric row, when applicable.
pub fn file_metric(report: &MetricReport, metric: &str) -> Option<Rational> {
    let mean = |values: Vec<Option<Rational>>| -> Option<Rational> {
        let present: Vec<Rational> = values.into_iter().flatten().collect();
        if present.is_empty() {
            None
        } else {
            let n = present.len() as i64;
            Some(present.into_iter().sum::<Rational>() / rat_int(n))
        }
    };
    let as_pct = |b: bool| if b { rat_int(100) } else { rat_int(0) };

    match metric {
        "pitch_range" => mean(
            self_playability(report)?.per_part.iter().map(|p| p.pitch_range_pct).collect(),
        ),
        "monophonic_correctness" => {
            mean(self_playability(report)?.per_part.iter().map(|p| p.monophonic_pct).collect())
        }
        "pitch_span" => {
            mean(self_playability(report)?.per_part.iter().map(|p| p.pitch_span_pct).collect())
        }
        "rhythmic_overlap" => {
            mean(self_playability(report)?.per_part.iter().map(|p| p.overlap_pct).collect())
        }
        "total_playability" => self_playability(report)?.total_pct,
        "rhythmic_complexity" => mean(
            report.readability.as_ref()?.per_part.iter().map(|p| p.tie_complexity_pct).collect(),
        ),
        "rhythmic_jitter" => {
            mean(report.readability.as_ref()?.per_part.iter().map(|p| p.jitter_pct).collect())
        }
        "accidental_consistency" => mean(
            report
                .readability
                .as_ref()?
                .per_part
                .iter()
                .map(|p| p.accidental_consistency_pct)
                .collect(),
        ),
        "enharmonic_directionality" => {
            mean(report.readability.as_ref()?.per_part.iter().map(|p| p.enharmonic_pct).collect())
        }
        "total_readability" => report.readability.as_ref()?.total_pct,
        "tempo_match" => report.adherence.as_ref()?.tempo.as_ref().map(|t| as_pct(t.matched)),
        "key_signature_match" => report.adherence.as_ref()?.key.map(|k| as_pct(k.accepted())),
        "time_signature_match" => report.adherence.as_ref()?.time.map(as_pct),
        "instrument_match" => report.adherence.as_ref().map(|a| a.instruments.pct),
        "external_similarity" => None, // handled as f64 outside the rational pipeline
        "coverage_ratio" => report.utilization.as_ref()?.mean_coverage_pct,
        "active_density" => report.utilization.as_ref()?.mean_density_pct,
        "structure" => report.structure.as_ref().map(|s| s.score),
        _ => None,
    }
}

fn self_playability(report: &MetricReport) -> Option<&PlayabilityResult> {
    report.playability.as_ref()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: &'static str,
    /// Number of valid files contributing a value.
    pub n: usize,
    pub mean: Option<BigRational>,
    pub min: Option<BigRational>,
    pub median: Option<BigRational>,
    pub max: Option<BigRational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSummary {
    pub n_files: usize,
    pub valid_count: usize,
    pub valid_pct: Rational,
    pub rows: Vec<SummaryRow>,
    pub external_similarity_mean: Option<f64>,
    pub config_fingerprint: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("no reports to aggregate")]
    Empty,
    #[error("reports carry mixed config fingerprints and are not comparable: {0} vs {1}")]
    MixedFingerprints(String, String),
}

impl CorpusSummary {
    /// Aggregate per-file reports. Metrics are computed exclusively over
    /// valid files; mixed config fingerprints are rejected.
    pub fn from_reports(reports: &[MetricReport]) -> Result<CorpusSummary, AggregateError> {
        let first = reports.first().ok_or(AggregateError::Empty)?;
        for r in reports {
            if r.config_fingerprint != first.config_fingerprint {
                return Err(AggregateError::MixedFingerprints(
                    first.config_fingerprint.clone(),
                    r.config_fingerprint.clone(),
                ));
            }
        }

        let valid: Vec<&MetricReport> =
            reports.iter().filter(|r| r.validity.is_valid()).collect();
        let rows = METRIC_ORDER
            .iter()
            .map(|&metric| {
                let mut values: Vec<Rational> =
                    valid.iter().filter_map(|r| file_metric(r, metric)).collect();
                values.sort_unstable();
                let n = values.len();
                if n == 0 {
                    return SummaryRow { metric, n, mean: None, min: None, median: None, max: None };
                }
                let sum: BigRational =
                    values.iter().map(|v| to_big(*v)).fold(BigRational::zero(), |a, b| a + b);
                let mean = sum / to_big(rat_int(n as i64));
                let median = if n % 2 == 1 {
                    to_big(values[n / 2])
                } else {
                    (to_big(values[n / 2 - 1]) + to_big(values[n / 2])) / to_big(rat_int(2))
                };
                SummaryRow {
                    metric,
                    n,
                    mean: Some(mean),
                    min: Some(to_big(values[0])),
                    median: Some(median),
                    max: Some(to_big(values[n - 1])),
                }
            })
            .collect();

        let sims: Vec<f64> = valid.iter().filter_map(|r| r.external_similarity).collect();
        let external_similarity_mean = if sims.is_empty() {
            None
        } else {
            Some(sims.iter().sum::<f64>() / sims.len() as f64)
        };

        Ok(CorpusSummary {
            n_files: reports.len(),
            valid_count: valid.len(),
            valid_pct: rat_int(100 * valid.len() as i64) / rat_int(reports.len() as i64),
            rows,
            external_similarity_mean,
            config_fingerprint: first.config_fingerprint.clone(),
        })
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                if row.metric == "external_similarity" {
                    return json!({
                        "metric": row.metric,
                        "n": row.n,
                        "mean": self.external_similarity_mean,
                        "min": Value::Null,
                        "median": Value::Null,
                        "max": Value::Null,
                    });
                }
                json!({
                    "metric": row.metric,
                    "n": row.n,
                    "mean": big_json(row.mean.as_ref()),
                    "min": big_json(row.min.as_ref()),
                    "median": big_json(row.median.as_ref()),
                    "max": big_json(row.max.as_ref()),
                })
            })
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "tool_version": tool_version(),
            "config_fingerprint": self.config_fingerprint,
            "n_files": self.n_files,
            "valid_files": {
                "count": self.valid_count,
                "pct": score_json(Some(self.valid_pct)),
            },
            "metrics": rows,
        })
    }

    /// Table-style CSV: one row per metric in presentation order.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# scorelint summary schema_version={} config={}\n",
            SCHEMA_VERSION, self.config_fingerprint
        );
        out.push_str("metric,n,mean,min,median,max\n");
        out.push_str(&format!(
            "valid_files_gen,{},{},,,\n",
            self.n_files,
            render_2dp(self.valid_pct)
        ));
        for row in &self.rows {
            if row.metric == "external_similarity" {
                let mean = self
                    .external_similarity_mean
                    .map(|m| format!("{m:.4}"))
                    .unwrap_or_default();
                out.push_str(&format!("{},{},{},,,\n", row.metric, row.n, mean));
                continue;
            }
            let cell = |v: &Option<BigRational>| v.as_ref().map(render_2dp_big).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.metric,
                row.n,
                cell(&row.mean),
                cell(&row.min),
                cell(&row.median),
                cell(&row.max),
            ));
        }
        out
    }
}

// ── Corpus driver ─────────────────────────────────────────────────────

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("no score files found under {0}")]
    EmptyCorpus(PathBuf),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
}

pub struct CorpusEvaluation {
    pub reports: Vec<MetricReport>,
    pub summary: CorpusSummary,
}

impl CorpusEvaluation {
    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "summary": self.summary.to_json(),
            "files": self.reports.iter().map(MetricReport::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Score files under a directory, in path-sorted order.
pub fn collect_score_files(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut files: Vec<PathBuf> = WalkDir::new(dir)
        .into_iter()
        .filter_map(|entry| entry.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "abc"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CorpusError::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(files)
}

/// Evaluate every `.abc` file under `dir`. Plans are looked up in `plan_dir`
/// by file stem. Output is deterministic for a fixed (corpus, config, seed)
/// regardless of `jobs`.
pub fn evaluate_corpus(
    dir: &Path,
    plan_dir: Option<&Path>,
    jobs: usize,
    opts: &EvalOptions<'_>,
) -> Result<CorpusEvaluation, CorpusError> {
    let files = collect_score_files(dir)?;

    // Read inputs up front; only the pure evaluation runs in parallel.
    let mut inputs = Vec::with_capacity(files.len());
    for path in &files {
        let text = fs::read_to_string(path)
            .map_err(|e| EvalError::Io { path: path.clone(), source: e })?;
        let plan = match plan_dir {
            Some(pd) => {
                let candidate = pd.join(format!(
                    "{}.json",
                    path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
                ));
                if candidate.exists() {
                    let bytes = fs::read(&candidate)
                        .map_err(|e| EvalError::Io { path: candidate.clone(), source: e })?;
                    Some(read_plan(&bytes).map_err(|e| EvalError::Plan {
                        path: candidate.clone(),
                        message: e.to_string(),
                    })?)
                } else {
                    None
                }
            }
            None => None,
        };
        let piece_id = path
            .strip_prefix(dir)
            .unwrap_or(path)
            .with_extension("")
            .to_string_lossy()
            .replace('\\', "/");
        inputs.push((piece_id, text, plan));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool construction");
    let reports: Vec<MetricReport> = pool.install(|| {
        inputs
            .par_iter()
            .map(|(piece_id, text, plan)| evaluate_source(piece_id, text, plan.as_ref(), opts))
            .collect()
    });

    let summary = CorpusSummary::from_reports(&reports)?;
    Ok(CorpusEvaluation { reports, summary })
}

#[derive(Debug, Default)]
pub struct ExtractOutcome {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<(PathBuf, String)>,
}

/// Write one plan JSON per valid score file; invalid files are skipped with
/// a logged reason.
pub fn extract_plans(
    dir: &Path,
    out_dir: &Path,
    sparse: bool,
    seed: u64,
    config: &EvalConfig,
) -> Result<ExtractOutcome, CorpusError> {
    let files = collect_score_files(dir)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CorpusError::Io { path: out_dir.to_path_buf(), source: e })?;

    let mut outcome = ExtractOutcome::default();
    for path in files {
        let text = fs::read_to_string(&path)
            .map_err(|e| EvalError::Io { path: path.clone(), source: e })?;
        let (report, maybe_score) = validate_source(&text);
        let score = match (maybe_score, report.is_valid()) {
            (Some(s), true) => s,
            _ => {
                let reason = report
                    .errors()
                    .next()
                    .map(|i| format!("{}: {}", i.code, i.message))
                    .unwrap_or_else(|| "invalid".to_string());
                outcome.skipped.push((path, reason));
                continue;
            }
        };
        let plan = match extract_plan_with(&score, &config.constraints, config.density_thresholds)
        {
            Ok(p) => p,
            Err(e) => {
                outcome.skipped.push((path, e.to_string()));
                continue;
            }
        };
        let plan = if sparse {
            let selection = select_pivots(&plan, seed);
            plan.sparse_subset(&selection.indices)
        } else {
            plan
        };
        let out_path = out_dir.join(format!(
            "{}.json",
            path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
        ));
        fs::write(&out_path, write_plan(&plan))
            .map_err(|e| CorpusError::Io { path: out_path.clone(), source: e })?;
        outcome.written.push(out_path);
    }
    Ok(outcome)
}
