//! Acceptance suite: one test per criterion, each printing a PASS line when
//! it completes. Oracles are brute-force recounts independent of the
//! implementations they check. Run with `cargo test --test acceptance`.

mod generator;
mod oracles;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use scorelint_core::abc::{parse_abc, serialize_abc, validate_source, IssueCode};
use scorelint_core::config::EvalConfig;
use scorelint_core::constraints::ConstraintTable;
use scorelint_core::metrics::adherence::{
    instrument_match, key_match, tempo_match, KeyMatch,
};
use scorelint_core::metrics::playability::{
    evaluate_playability, monophonic_score, pitch_range_score, pitch_span_score,
    rhythmic_overlap_score,
};
use scorelint_core::metrics::readability::{
    accidental_consistency_score, enharmonic_directionality_score, evaluate_readability,
    rhythmic_jitter_score, tie_complexity_score,
};
use scorelint_core::metrics::adherence::{active_density, coverage_ratio};
use scorelint_core::plan::{
    change_scores, extract_plan, select_pivots, weight_profiles, Density, MeasurePlan,
    PlanDocument,
};
use scorelint_core::rational::{rat, rat_int};
use scorelint_core::report::{evaluate_corpus, EvalOptions};
use scorelint_core::score::{
    KeySignature, Mode, Part, SpelledPitch, Step, TimeSignature,
};
use scorelint_core::structure::{cosiatec_cover, siatec, Point, PointSet};

use generator::{messy_part, random_score, signature, GenConfig};

fn fixture_dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(sub)
}

// ── Criterion 1: parser round-trip ───────────────────────────────────

#[test]
fn criterion_01_parser_round_trip() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xC0FFEE);
    let cfg = GenConfig::default();
    for case in 0..1000 {
        let score = random_score(&mut rng, &cfg);
        let text = serialize_abc(&score).expect("generated scores serialize");
        let reparsed = parse_abc(&text)
            .unwrap_or_else(|e| panic!("case {case}: reparse failed: {e}\n{text}"));
        assert_eq!(
            signature(&score),
            signature(&reparsed),
            "case {case}: round-trip mismatch\n{text}"
        );
    }
    // Tuplet-bearing scores round-trip too.
    let cfg = GenConfig { allow_tuplets: true, ..GenConfig::default() };
    for case in 0..100 {
        let score = random_score(&mut rng, &cfg);
        let text = serialize_abc(&score).expect("generated scores serialize");
        let reparsed = parse_abc(&text)
            .unwrap_or_else(|e| panic!("tuplet case {case}: reparse failed: {e}\n{text}"));
        assert_eq!(signature(&score), signature(&reparsed), "tuplet case {case}\n{text}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "round-trip took {elapsed:?}");
    println!(
        "criterion 1: PASS - 1100 random scores round-tripped exactly in {:.2}s",
        elapsed.as_secs_f64()
    );
}

// ── Criterion 2: validator fixture suite ─────────────────────────────

#[test]
fn criterion_02_validator_fixtures() {
    // (file, expected_valid, code that must be present)
    let expectations: &[(&str, bool, Option<IssueCode>)] = &[
        ("clean_solo.abc", true, Some(IssueCode::MissingTempo)),
        ("clean_chorale.abc", true, Some(IssueCode::MissingTempo)),
        ("clean_quartet.abc", true, Some(IssueCode::MissingTempo)),
        ("clean_tempo_change.abc", true, None),
        ("clean_rest_measures.abc", true, Some(IssueCode::MissingTempo)),
        ("anacrusis_pickup.abc", true, Some(IssueCode::Anacrusis)),
        ("anacrusis_final_short.abc", true, Some(IssueCode::FinalShortMeasure)),
        ("anacrusis_both.abc", true, Some(IssueCode::Anacrusis)),
        ("overfull_simple.abc", false, Some(IssueCode::MeasureOverfull)),
        ("overfull_multivoice.abc", false, Some(IssueCode::MeasureOverfull)),
        ("overfull_chords.abc", false, Some(IssueCode::MeasureOverfull)),
        ("overfull_tuplet.abc", false, Some(IssueCode::MeasureOverfull)),
        ("underfull_interior.abc", false, Some(IssueCode::MeasureUnderfull)),
        ("underfull_second_voice.abc", false, Some(IssueCode::MeasureUnderfull)),
        ("underfull_after_change.abc", false, Some(IssueCode::MeasureUnderfull)),
        ("undeclared_voice.abc", false, Some(IssueCode::UndeclaredVoice)),
        ("undeclared_voice_interleaved.abc", false, Some(IssueCode::UndeclaredVoice)),
        ("mismatched_counts.abc", false, Some(IssueCode::PartLengthMismatch)),
        ("missing_key.abc", false, Some(IssueCode::MissingKey)),
        ("syntax_error.abc", false, Some(IssueCode::SyntaxError)),
    ];
    assert_eq!(expectations.len(), 20);

    for (file, expect_valid, expect_code) in expectations {
        let path = fixture_dir("validator").join(file);
        let text = fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let (report, _) = validate_source(&text);
        assert_eq!(
            report.is_valid(),
            *expect_valid,
            "{file}: expected valid={expect_valid}, issues: {:?}",
            report.issues
        );
        if let Some(code) = expect_code {
            assert!(
                report.has_code(*code),
                "{file}: expected issue {code}, got {:?}",
                report.issues
            );
        } else {
            assert!(report.issues.is_empty(), "{file}: expected no issues: {:?}", report.issues);
        }
        // Clean fixtures must carry no spurious measure-duration warnings.
        if *expect_valid && file.starts_with("clean_") {
            assert!(
                !report.has_code(IssueCode::Anacrusis)
                    && !report.has_code(IssueCode::FinalShortMeasure),
                "{file}: unexpected short-measure warning: {:?}",
                report.issues
            );
        }
    }
    println!("criterion 2: PASS - all 20 validator fixtures classified exactly as labeled");
}

// ── Criterion 3: metric-oracle equivalence ───────────────────────────

#[test]
fn criterion_03_metric_oracle_equivalence() {
    let table = ConstraintTable::builtin();
    let mut rng = StdRng::seed_from_u64(0x0DDBA11);
    let instruments = ["Flute", "Piano", "Trumpet", "Cello", "Violin", "Oboe"];
    let mut checked = 0usize;
    for case in 0..520 {
        let name = instruments[rng.random_range(0..instruments.len())];
        let part = messy_part(&mut rng, name, 30, 100);
        let (_, constraints) = table.resolve_name(name);
        let m_total = part.measures.len();

        let ctx = |metric: &str| format!("case {case} ({name}): {metric}");
        assert_eq!(
            pitch_range_score(&part, constraints),
            oracles::pitch_range(&part, constraints),
            "{}",
            ctx("pitch_range")
        );
        assert_eq!(
            pitch_span_score(&part, constraints),
            oracles::pitch_span(&part, constraints),
            "{}",
            ctx("pitch_span")
        );
        assert_eq!(
            monophonic_score(&part, constraints),
            oracles::monophonic(&part, constraints),
            "{}",
            ctx("monophonic")
        );
        assert_eq!(
            rhythmic_overlap_score(&part, constraints),
            oracles::rhythmic_overlap(&part, constraints),
            "{}",
            ctx("rhythmic_overlap")
        );
        for strict in [false, true] {
            assert_eq!(
                rhythmic_jitter_score(&part, strict),
                oracles::rhythmic_jitter(&part, strict),
                "{}",
                ctx("rhythmic_jitter")
            );
        }
        assert_eq!(
            tie_complexity_score(&part),
            oracles::tie_complexity(&part),
            "{}",
            ctx("tie_complexity")
        );
        assert_eq!(
            accidental_consistency_score(&part),
            oracles::accidental_consistency(&part),
            "{}",
            ctx("accidental_consistency")
        );
        assert_eq!(
            enharmonic_directionality_score(&part),
            oracles::enharmonic_directionality(&part),
            "{}",
            ctx("enharmonic_directionality")
        );
        assert_eq!(
            coverage_ratio(&part, m_total),
            oracles::coverage(&part, m_total),
            "{}",
            ctx("coverage")
        );
        assert_eq!(
            active_density(&part, m_total),
            oracles::density(&part, m_total),
            "{}",
            ctx("density")
        );
        checked += 1;
    }
    println!("criterion 3: PASS - {checked} random parts match brute-force recounts exactly");
}

// ── Criterion 4: formula spot-checks ─────────────────────────────────

#[test]
fn criterion_04_formula_spot_checks() {
    let table = ConstraintTable::builtin();

    // Coverage: first=2, last=9, M_total=10 -> 80%
    let text = "X:1\nL:1/4\nM:4/4\nK:C\n|z4|z4|C4|C4|z4|C4|C4|C4|C4|C4|";
    let score = parse_abc(text).unwrap();
    assert_eq!(coverage_ratio(&score.parts[0], 10), rat_int(80));

    // Density: 6 active of 10 -> 60%
    let text = "X:1\nL:1/4\nM:4/4\nK:C\n|C4|C4|z4|C4|z4|C4|z4|C4|C4|z4|";
    let score = parse_abc(text).unwrap();
    assert_eq!(active_density(&score.parts[0], 10), rat_int(60));

    // Piano span: 16 semitones violates, 15 passes.
    let (_, piano) = table.resolve_name("Piano");
    let wide = parse_abc("X:1\nL:1/4\nM:4/4\nK:C\n|[Ce]4|").unwrap();
    assert_eq!(pitch_span_score(&wide.parts[0], piano), Some(rat_int(0)));
    let edge = parse_abc("X:1\nL:1/4\nM:4/4\nK:C\n|[C^d]4|").unwrap();
    assert_eq!(pitch_span_score(&edge.parts[0], piano), Some(rat_int(100)));

    // Jitter: duration exactly 0.0625 quarter notes is flagged.
    let sixty_fourth = parse_abc("X:1\nL:1/64\nM:4/4\nK:C\n|c z63|").unwrap();
    assert_eq!(rhythmic_jitter_score(&sixty_fourth.parts[0], false), Some(rat_int(0)));

    println!("criterion 4: PASS - coverage 80%, density 60%, span 16/15 boundary, 64th flagged");
}

// ── Criterion 5: readability invariants ──────────────────────────────

fn respell(midi: i32) -> SpelledPitch {
    let pc = (midi % 12) as u8;
    let (step, alter) = match pc {
        0 => (Step::C, 0),
        1 => (Step::C, 1),
        2 => (Step::D, 0),
        3 => (Step::D, 1),
        4 => (Step::E, 0),
        5 => (Step::F, 0),
        6 => (Step::F, 1),
        7 => (Step::G, 0),
        8 => (Step::G, 1),
        9 => (Step::A, 0),
        10 => (Step::A, 1),
        _ => (Step::B, 0),
    };
    let octave = ((midi - step.pitch_class() as i32 - alter) / 12 - 1) as i8;
    SpelledPitch::new(step, alter as i8, octave).unwrap()
}

fn transpose_part(part: &Part, semitones: i32) -> Part {
    let mut out = part.clone();
    for m in &mut out.measures {
        let tonic_pc =
            (m.key_signature.tonic_pitch_class() as i32 + semitones).rem_euclid(12) as u8;
        let mode = m.key_signature.mode;
        m.key_signature = (-7..=7)
            .filter_map(|f| KeySignature::from_fifths(f, mode).ok())
            .find(|k| k.tonic_pitch_class() == tonic_pc)
            .expect("every pitch class has a key within 7 accidentals");
        for e in &mut m.notes {
            for p in e.pitches.iter_mut() {
                *p = respell(p.midi() as i32 + semitones);
            }
        }
    }
    out
}

#[test]
fn criterion_05_readability_invariants() {
    // Grid-quantized clean fixture scores jitter = 100 exactly.
    let text = "X:1\nL:1/8\nM:4/4\nQ:1/4=96\nK:G\nV:1 name=\"Violin\"\nV:2 name=\"Cello\"\n\
                [V:1]G2A2B2c2|[V:2]G,4D,4|\n[V:1]d4c4|[V:2]B,8|\n[V:1]g8|[V:2]G,8|]";
    let score = parse_abc(text).unwrap();
    let result = evaluate_readability(&score, &ConstraintTable::builtin(), false);
    for p in &result.per_part {
        assert_eq!(p.jitter_pct, Some(rat_int(100)));
    }

    // Transposing score and key together never moves accidental consistency.
    let mut rng = StdRng::seed_from_u64(0x7A05);
    let mut deviations = 0usize;
    for _ in 0..100 {
        let part = messy_part(&mut rng, "Piano", 40, 90);
        let baseline = accidental_consistency_score(&part);
        let semitones = rng.random_range(-24i32..=24);
        let shifted = transpose_part(&part, semitones);
        if accidental_consistency_score(&shifted) != baseline {
            deviations += 1;
        }
    }
    assert_eq!(deviations, 0, "accidental consistency moved under transposition");
    println!("criterion 5: PASS - clean fixture jitter = 100; 100 transpositions, 0 deviations");
}

// ── Criterion 6: adherence rules ─────────────────────────────────────

#[test]
fn criterion_06_adherence_rules() {
    let table = ConstraintTable::builtin();
    let a_minor = KeySignature::new(Step::A, 0, Mode::Minor).unwrap();
    let c_major = KeySignature::c_major();
    let g_major = KeySignature::new(Step::G, 0, Mode::Major).unwrap();

    assert_eq!(key_match(&a_minor, &c_major), KeyMatch::Relative);
    assert_eq!(key_match(&c_major, &a_minor), KeyMatch::Relative);
    assert_eq!(key_match(&c_major, &g_major), KeyMatch::None);
    assert_eq!(key_match(&g_major, &c_major), KeyMatch::None);

    let names = |l: &[&str]| -> BTreeSet<String> { l.iter().map(|s| s.to_string()).collect() };
    let m = instrument_match(&names(&["Violoncello"]), &names(&["Cello"]), &table);
    assert_eq!(m.pct, rat_int(100));

    // Q:1/8=150 normalizes to 75 qpm and matches a 75 qpm request.
    let eighth_tempo = parse_abc("X:1\nL:1/4\nM:4/4\nQ:1/8=150\nK:C\n|C4|").unwrap();
    let t = tempo_match(rat_int(75), &eighth_tempo);
    assert!(t.matched && !t.near_miss);

    // 75 requested vs 150 rendered: no match, but flagged as the
    // factor-of-two formatting gap.
    let doubled = parse_abc("X:1\nL:1/4\nM:4/4\nQ:1/4=150\nK:C\n|C4|").unwrap();
    let t = tempo_match(rat_int(75), &doubled);
    assert!(!t.matched && t.near_miss);

    println!("criterion 6: PASS - relative keys, alias pair, tempo normalization and near-miss");
}

// ── Criterion 7: COSIATEC correctness ────────────────────────────────

type CanonicalTec = (Vec<Point>, Vec<Point>);

/// Brute-force enumeration over all difference vectors, independent of the
/// siatec implementation.
fn brute_force_tecs(points: &BTreeSet<Point>) -> BTreeSet<CanonicalTec> {
    let list: Vec<Point> = points.iter().copied().collect();
    let mut out = BTreeSet::new();
    if list.len() == 1 {
        out.insert((vec![(0, 0)], vec![(0, 0)]));
        return out;
    }
    let mut patterns: BTreeSet<Vec<Point>> = BTreeSet::new();
    for &a in &list {
        for &b in &list {
            if a == b {
                continue;
            }
            let v = (b.0 - a.0, b.1 - a.1);
            let mtp: Vec<Point> = list
                .iter()
                .copied()
                .filter(|p| points.contains(&(p.0 + v.0, p.1 + v.1)))
                .collect();
            patterns.insert(mtp);
        }
    }
    for pattern in patterns {
        let origin = pattern[0];
        let canonical: Vec<Point> =
            pattern.iter().map(|p| (p.0 - origin.0, p.1 - origin.1)).collect();
        let mut translators: Vec<Point> = list
            .iter()
            .map(|q| (q.0 - canonical[0].0, q.1 - canonical[0].1))
            .filter(|u| canonical.iter().all(|p| points.contains(&(p.0 + u.0, p.1 + u.1))))
            .collect();
        translators.sort_unstable();
        let anchor = translators[0];
        let rel = translators.iter().map(|t| (t.0 - anchor.0, t.1 - anchor.1)).collect();
        out.insert((canonical, rel));
    }
    out
}

fn canonicalize(tecs: &[scorelint_core::structure::Tec]) -> BTreeSet<CanonicalTec> {
    tecs.iter()
        .map(|t| {
            let anchor = t.translators[0];
            (
                t.canonical_pattern(),
                t.translators.iter().map(|u| (u.0 - anchor.0, u.1 - anchor.1)).collect(),
            )
        })
        .collect()
}

#[test]
fn criterion_07_cosiatec_correctness() {
    let mut rng = StdRng::seed_from_u64(0x51A7EC);
    for trial in 0..200 {
        let n = rng.random_range(1..=12);
        let mut points = BTreeSet::new();
        while points.len() < n {
            points.insert((rng.random_range(0..24i64), rng.random_range(48..72i64)));
        }
        let ps = PointSet { points: points.clone() };
        assert_eq!(
            canonicalize(&siatec(&ps)),
            brute_force_tecs(&points),
            "trial {trial}: {points:?}"
        );
    }

    // 4x4 repeated-pattern fixture compresses to exactly 16/7.
    let pattern = [(0i64, 60i64), (1, 64), (2, 67), (4, 72)];
    let translations = [(0i64, 0i64), (16, 0), (32, 7), (48, -5)];
    let fixture = PointSet::from_points(
        translations
            .iter()
            .flat_map(|t| pattern.iter().map(move |p| (p.0 + t.0, p.1 + t.1))),
    );
    assert_eq!(fixture.len(), 16);
    let result = cosiatec_cover(&fixture);
    assert_eq!(result.structure_score, rat(16, 7));

    // Incompressible sets score exactly 1.
    for n in [2usize, 5, 8, 10] {
        let ps = PointSet::from_points((0..n as i64).map(|i| (1i64 << i, 3 * i * i)));
        assert_eq!(cosiatec_cover(&ps).structure_score, rat_int(1), "n={n}");
    }

    // Whole-set translation changes nothing.
    let moved = fixture.translate((1234, -60));
    assert_eq!(cosiatec_cover(&moved).structure_score, rat(16, 7));

    println!(
        "criterion 7: PASS - 200 sets match brute force; 16/7 fixture; incompressible = 1; translation-invariant"
    );
}

// ── Criterion 8: pivot heuristic ─────────────────────────────────────

fn constant_plan(n: usize) -> PlanDocument {
    let measures = (0..n)
        .map(|index| MeasurePlan {
            index,
            instruments: BTreeSet::from(["Piano".to_string()]),
            pitch_range: Some((60, 72)),
            density: Density::Medium,
            tempo_qpm: rat_int(120),
            time_signature: TimeSignature::common_time(),
            key_signature: KeySignature::c_major(),
            chord_pcs: BTreeSet::from([0, 4, 7]),
            dynamics: None,
        })
        .collect();
    PlanDocument {
        n_measures: n,
        genre: None,
        instrumentation: BTreeSet::from(["Piano".to_string()]),
        measures,
    }
}

#[test]
fn criterion_08_pivot_heuristic() {
    // 20-measure plan, constant except a key change at measure 12.
    let mut plan = constant_plan(20);
    let g = KeySignature::new(Step::G, 0, Mode::Major).unwrap();
    for m in plan.measures.iter_mut().skip(12) {
        m.key_signature = g;
    }
    for profile in weight_profiles() {
        let scores = change_scores(&plan, &profile);
        for i in 1..20 {
            if i != 12 {
                assert!(
                    scores[12] > scores[i],
                    "profile {}: measure 12 must outrank measure {i}",
                    profile.id
                );
            }
        }
        // and the pivot is actually selected
        assert!(scores[12] > rat_int(0));
    }
    for seed in [0u64, 6, 12] {
        // one seed per profile family
        let selection = select_pivots(&plan, seed);
        assert!(selection.indices.contains(&12), "seed {seed}: {:?}", selection.indices);
    }

    // Determinism across 100 runs.
    let reference = select_pivots(&plan, 77);
    for _ in 0..100 {
        assert_eq!(select_pivots(&plan, 77), reference);
    }

    // Selection size: 5 + seed mod 6, clamped to N.
    let big = constant_plan(30);
    for seed in 0..18u64 {
        let k = select_pivots(&big, seed).indices.len();
        assert_eq!(k, 5 + (seed % 6) as usize);
        assert!((5..=10).contains(&k));
    }
    let tiny = constant_plan(3);
    for seed in 0..6u64 {
        assert_eq!(select_pivots(&tiny, seed).indices, vec![0, 1, 2]);
    }

    println!(
        "criterion 8: PASS - key change at 12 outranks all interior measures under every profile; deterministic; 5-10 clamped"
    );
}

// ── Criterion 9: determinism under parallelism ───────────────────────

#[test]
fn criterion_09_corpus_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();

    let mut rng = StdRng::seed_from_u64(0xD1CE);
    let cfg = GenConfig { max_measures: 8, max_parts: 2, ..GenConfig::default() };
    for i in 0..46 {
        let score = random_score(&mut rng, &cfg);
        let text = serialize_abc(&score).unwrap();
        fs::write(corpus.join(format!("piece_{i:03}.abc")), text).unwrap();
    }
    // a few invalid files: overfull, undeclared voice, syntax error
    fs::write(corpus.join("bad_0.abc"), "X:1\nL:1/4\nM:4/4\nK:C\n|CDEFG|\n").unwrap();
    fs::write(corpus.join("bad_1.abc"), "X:1\nL:1/4\nM:4/4\nK:C\n[V:9]CD|\n").unwrap();
    fs::write(corpus.join("bad_2.abc"), "X:1\nL:1/4\nM:4/4\nK:C\n|C?D|\n").unwrap();
    fs::write(corpus.join("bad_3.abc"), "X:1\nL:1/4\nM:4/4\nK:C\n|CDEF|GA|GABc|\n").unwrap();

    let config = EvalConfig::default();
    let opts = EvalOptions::new(&config);
    let sequential = evaluate_corpus(&corpus, None, 1, &opts).unwrap();
    let parallel = evaluate_corpus(&corpus, None, 8, &opts).unwrap();

    let json_1 = serde_json::to_string(&sequential.to_json()).unwrap();
    let json_8 = serde_json::to_string(&parallel.to_json()).unwrap();
    assert_eq!(json_1, json_8, "corpus JSON must be byte-identical across job counts");
    assert_eq!(sequential.summary.to_csv(), parallel.summary.to_csv());
    assert_eq!(sequential.summary.n_files, 50);
    assert_eq!(sequential.summary.valid_count, 46);

    println!("criterion 9: PASS - 50-file corpus byte-identical at --jobs 1 and --jobs 8");
}

// ── Criterion 10: human-score sanity band ────────────────────────────

#[test]
fn criterion_10_clean_corpus_band() {
    let dir = fixture_dir("clean_corpus");
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "abc"))
        .collect();
    files.sort();
    assert!(files.len() >= 20, "need at least 20 clean scores, found {}", files.len());

    let table = ConstraintTable::builtin();
    let mut failures = Vec::new();
    for path in &files {
        let text = fs::read_to_string(path).unwrap();
        let (report, score) = validate_source(&text);
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if !report.is_valid() {
            failures.push(format!("{name}: invalid: {:?}", report.issues));
            continue;
        }
        let score = score.unwrap();
        let playability = evaluate_playability(&score, &table)
            .total_pct
            .unwrap_or_else(|| rat_int(0));
        let readability = evaluate_readability(&score, &table, false)
            .total_pct
            .unwrap_or_else(|| rat_int(0));
        if playability < rat_int(95) {
            failures.push(format!("{name}: total playability {playability} < 95"));
        }
        if readability < rat_int(90) {
            failures.push(format!("{name}: total readability {readability} < 90"));
        }
    }
    assert!(
        failures.is_empty(),
        "clean-corpus files out of band:\n{}",
        failures.join("\n")
    );
    println!(
        "criterion 10: PASS - {} engraved scores all reach playability >= 95 and readability >= 90",
        files.len()
    );
}

// ── Supplementary: extract-plan consistency over the clean corpus ─────

#[test]
fn extracted_plans_adhere_to_their_own_scores() {
    let dir = fixture_dir("clean_corpus");
    let table = ConstraintTable::builtin();
    let mut checked = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|x| x != "abc") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let (report, score) = validate_source(&text);
        if !report.is_valid() {
            continue;
        }
        let score = score.unwrap();
        let plan = extract_plan(&score, &table).unwrap();
        let adherence =
            scorelint_core::metrics::adherence::evaluate_adherence(&plan, &score, &table);
        assert_eq!(adherence.key, Some(KeyMatch::Exact), "{}", path.display());
        assert_eq!(adherence.time, Some(true), "{}", path.display());
        assert_eq!(adherence.instruments.pct, rat_int(100), "{}", path.display());
        if let Some(t) = adherence.tempo {
            assert!(t.matched, "{}", path.display());
        }
        checked += 1;
    }
    assert!(checked >= 20);
}

// ── Supplementary: structure scores of real scores sit above 1 ────────

#[test]
fn clean_corpus_structure_scores_are_plausible() {
    let dir = fixture_dir("clean_corpus");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|x| x != "abc") {
            continue;
        }
        let text = fs::read_to_string(&path).unwrap();
        let (report, score) = validate_source(&text);
        if !report.is_valid() {
            continue;
        }
        let ps = match scorelint_core::structure::score_to_pointset(&score.unwrap()) {
            Ok(ps) => ps,
            Err(_) => continue,
        };
        let result = cosiatec_cover(&ps);
        assert!(
            result.structure_score >= rat_int(1),
            "{}: structure below the incompressible floor",
            path.display()
        );
        count += 1;
    }
    assert!(count >= 20);
}
