//! Batch CLI: validate score files, evaluate metric reports over files or
//! corpora, and extract structural plans.
//!
//! Exit codes: 0 success, 1 usage or input-format error, 2 I/O error,
//! 3 empty or unusable corpus. Per-file invalidity is report data, not a
//! process failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scorelint_core::abc::{validate_source, Severity};
use scorelint_core::config::EvalConfig;
use scorelint_core::plan::{extract_plan_with, select_pivots, write_plan};
use scorelint_core::report::{
    collect_score_files, evaluate_corpus, evaluate_file, extract_plans, CorpusError,
    CorpusSummary, EvalError, EvalOptions,
};

const CONFIG_ENV: &str = "SCORELINT_CONFIG";

#[derive(Parser)]
#[command(name = "scorelint", version, about = "Score validation and quality metrics for interleaved ABC notation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate score files, printing every issue
    Validate {
        /// An .abc file or a directory of them
        path: PathBuf,
    },
    /// Run the full metric suite over a file or corpus directory
    Evaluate {
        /// An .abc file or a directory of them
        path: PathBuf,
        /// Plan JSON file (for a single score) or directory of plans keyed
        /// by file stem (for a corpus)
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Report format
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        report: ReportFormat,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Disable the tuplet exemption in the rhythmic jitter metric
        #[arg(long)]
        jitter_strict: bool,
        /// Report the mean of per-part structure scores instead of the
        /// merged-point-set score
        #[arg(long)]
        per_part_structure: bool,
        /// Config file (falls back to $SCORELINT_CONFIG)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Worker threads; 0 means one per core
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Seed recorded in reports and used by seeded operations
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract measure-wise plan JSON from score files
    ExtractPlan {
        /// An .abc file or a directory of them
        path: PathBuf,
        /// Keep only the 5-10 highest-change pivot measures
        #[arg(long)]
        sparse: bool,
        /// Seed for pivot selection
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for plan files
        #[arg(long, default_value = "plans")]
        out: PathBuf,
        /// Config file (falls back to $SCORELINT_CONFIG)
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Io(String),
    Corpus(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Corpus(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Corpus(m) => m,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> Self {
        match err {
            CorpusError::EmptyCorpus(_) => CliError::Corpus(err.to_string()),
            CorpusError::Io { .. } => CliError::Io(err.to_string()),
            CorpusError::Eval(e) => e.into(),
            CorpusError::Aggregate(_) => CliError::Corpus(err.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        match err {
            EvalError::Io { .. } => CliError::Io(err.to_string()),
            EvalError::Plan { .. } => CliError::Usage(err.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints its own message; help/version are successes.
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("scorelint: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { path } => validate_command(&path),
        Command::Evaluate {
            path,
            plan,
            report,
            out,
            jitter_strict,
            per_part_structure,
            config,
            jobs,
            seed,
        } => {
            let config = load_config(config.as_deref(), jitter_strict, per_part_structure)?;
            let opts = EvalOptions { config: &config, seed, external: None };
            let text = if path.is_dir() {
                let evaluation = evaluate_corpus(&path, plan.as_deref(), jobs, &opts)?;
                match report {
                    ReportFormat::Json => pretty(&evaluation.to_json()),
                    ReportFormat::Csv => evaluation.summary.to_csv(),
                }
            } else {
                let single = evaluate_file(&path, plan.as_deref(), &opts)?;
                match report {
                    ReportFormat::Json => pretty(&single.to_json()),
                    ReportFormat::Csv => CorpusSummary::from_reports(std::slice::from_ref(&single))
                        .map_err(|e| CliError::Corpus(e.to_string()))?
                        .to_csv(),
                }
            };
            match out {
                Some(out_path) => fs::write(&out_path, text).map_err(|e| {
                    CliError::Io(format!("{}: {e}", out_path.display()))
                })?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::ExtractPlan { path, sparse, seed, out, config } => {
            let config = load_config(config.as_deref(), false, false)?;
            if path.is_dir() {
                let outcome = extract_plans(&path, &out, sparse, seed, &config)?;
                for (skipped, reason) in &outcome.skipped {
                    eprintln!("scorelint: skipped {}: {reason}", skipped.display());
                }
                println!(
                    "wrote {} plan(s) to {} ({} skipped)",
                    outcome.written.len(),
                    out.display(),
                    outcome.skipped.len()
                );
                Ok(())
            } else {
                extract_single_plan(&path, sparse, seed, &out, &config)
            }
        }
    }
}

fn extract_single_plan(
    path: &Path,
    sparse: bool,
    seed: u64,
    out_dir: &Path,
    config: &EvalConfig,
) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (report, maybe_score) = validate_source(&text);
    let score = match (maybe_score, report.is_valid()) {
        (Some(s), true) => s,
        _ => {
            let reason = report
                .errors()
                .next()
                .map(|i| format!("{}: {}", i.code, i.message))
                .unwrap_or_else(|| "invalid score".into());
            return Err(CliError::Corpus(format!("{}: {reason}", path.display())));
        }
    };
    let plan = extract_plan_with(&score, &config.constraints, config.density_thresholds)
        .map_err(|e| CliError::Corpus(format!("{}: {e}", path.display())))?;
    let plan = if sparse {
        let selection = select_pivots(&plan, seed);
        plan.sparse_subset(&selection.indices)
    } else {
        plan
    };
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let out_path = out_dir.join(format!(
        "{}.json",
        path.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    fs::write(&out_path, write_plan(&plan))
        .map_err(|e| CliError::Io(format!("{}: {e}", out_path.display())))?;
    println!("wrote {}", out_path.display());
    Ok(())
}

fn validate_command(path: &Path) -> Result<(), CliError> {
    let files: Vec<PathBuf> = if path.is_dir() {
        collect_score_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    for file in files {
        let text = fs::read_to_string(&file)
            .map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
        let (report, _) = validate_source(&text);
        let verdict = if report.is_valid() { "VALID" } else { "INVALID" };
        println!("{}: {verdict}", file.display());
        for issue in &report.issues {
            let severity = match issue.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            let place = match (&issue.part_id, issue.measure_index) {
                (Some(p), Some(m)) => format!(" (part {p}, measure {m})"),
                (Some(p), None) => format!(" (part {p})"),
                _ => String::new(),
            };
            println!("  [{severity}] {}{place}: {}", issue.code, issue.message);
        }
    }
    Ok(())
}

fn load_config(
    flag: Option<&Path>,
    jitter_strict: bool,
    per_part_structure: bool,
) -> Result<EvalConfig, CliError> {
    let mut config = EvalConfig::default();
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let path = flag.map(Path::to_path_buf).or(env_path);
    if let Some(path) = path {
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        config
            .apply_file(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    // CLI flags take precedence over the config file.
    config.jitter_strict |= jitter_strict;
    config.per_part_structure |= per_part_structure;
    Ok(config)
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report JSON is serializable");
    text.push('\n');
    text
}
