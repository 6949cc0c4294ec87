//! Pivot-measure selection: rank measures by how much their musical
//! attributes change relative to the preceding measure, under one of three
//! fixed weighting profiles, and keep the top 5-10.

use crate::rational::{rat, rat_int, Rational};

use super::PlanDocument;

/// Channel weights; each profile sums to exactly 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightProfile {
    pub id: &'static str,
    pub tempo: Rational,
    pub time_signature: Rational,
    pub key_signature: Rational,
    pub instrumentation: Rational,
    pub density: Rational,
    pub pitch_range: Rational,
    pub dynamics: Rational,
}

/// The three shipped profiles. Selection alternates between them by seed.
pub fn weight_profiles() -> [WeightProfile; 3] {
    [
        WeightProfile {
            id: "rhythm-priority",
            tempo: rat(35, 100),
            time_signature: rat(25, 100),
            density: rat(25, 100),
            key_signature: rat(3, 80),
            instrumentation: rat(3, 80),
            pitch_range: rat(3, 80),
            dynamics: rat(3, 80),
        },
        WeightProfile {
            id: "harmony-priority",
            key_signature: rat(35, 100),
            pitch_range: rat(25, 100),
            density: rat(10, 100),
            tempo: rat(3, 40),
            time_signature: rat(3, 40),
            instrumentation: rat(3, 40),
            dynamics: rat(3, 40),
        },
        WeightProfile {
            id: "timbre-priority",
            instrumentation: rat(40, 100),
            dynamics: rat(25, 100),
            tempo: rat(7, 100),
            time_signature: rat(7, 100),
            key_signature: rat(7, 100),
            density: rat(7, 100),
            pitch_range: rat(7, 100),
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotSelection {
    /// Selected measure indices, sorted ascending.
    pub indices: Vec<usize>,
    /// Change score of each selected index, parallel to `indices`.
    pub scores: Vec<Rational>,
    pub weight_profile_id: String,
    pub rng_seed: u64,
}

/// Weighted change score of every measure against its predecessor. Measure 0
/// is scored against a null measure, so every channel fires at full value.
pub fn change_scores(plan: &PlanDocument, profile: &WeightProfile) -> Vec<Rational> {
    let max_tempo = plan
        .measures
        .iter()
        .map(|m| m.tempo_qpm)
        .max()
        .unwrap_or_else(|| rat_int(0));
    let total_instruments = plan.instrumentation.len() as i64;

    plan.measures
        .iter()
        .enumerate()
        .map(|(i, m)| {
            if i == 0 {
                return profile.tempo
                    + profile.time_signature
                    + profile.key_signature
                    + profile.instrumentation
                    + profile.density
                    + profile.pitch_range
                    + profile.dynamics;
            }
            let prev = &plan.measures[i - 1];

            let tempo = if max_tempo > rat_int(0) {
                let diff = if m.tempo_qpm >= prev.tempo_qpm {
                    m.tempo_qpm - prev.tempo_qpm
                } else {
                    prev.tempo_qpm - m.tempo_qpm
                };
                diff / max_tempo
            } else {
                rat_int(0)
            };

            let ts = rat_int(i64::from(m.time_signature != prev.time_signature));
            let ks = rat_int(i64::from(m.key_signature != prev.key_signature));

            let instrumentation = if total_instruments > 0 {
                let sym_diff = m.instruments.symmetric_difference(&prev.instruments).count();
                rat(sym_diff as i64, total_instruments)
            } else {
                rat_int(0)
            };

            let density = rat((m.density.level() - prev.density.level()).abs(), 2);

            let range = match (m.pitch_range, prev.pitch_range) {
                (None, None) => rat_int(0),
                (Some(_), None) | (None, Some(_)) => rat_int(1),
                (Some((lo, hi)), Some((plo, phi))) => {
                    let shift = (lo as i64 - plo as i64).abs() + (hi as i64 - phi as i64).abs();
                    rat(shift, 254)
                }
            };

            let dynamics = rat_int(i64::from(m.dynamics != prev.dynamics));

            profile.tempo * tempo
                + profile.time_signature * ts
                + profile.key_signature * ks
                + profile.instrumentation * instrumentation
                + profile.density * density
                + profile.pitch_range * range
                + profile.dynamics * dynamics
        })
        .collect()
}

/// Deterministic pivot selection: `seed` fixes both the selection size
/// (5 + seed mod 6, clamped to N) and the weighting profile.
pub fn select_pivots(plan: &PlanDocument, seed: u64) -> PivotSelection {
    let profiles = weight_profiles();
    let profile = &profiles[((seed / 6) % 3) as usize];
    let k = (5 + (seed % 6) as usize).min(plan.measures.len());

    let scores = change_scores(plan, profile);
    let mut order: Vec<usize> = (0..plan.measures.len()).collect();
    // Highest score first; ties broken by lower measure index.
    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]).then(a.cmp(&b)));
    let mut selected: Vec<usize> = order.into_iter().take(k).collect();
    selected.sort_unstable();

    PivotSelection {
        scores: selected.iter().map(|&i| scores[i]).collect(),
        indices: selected.iter().map(|&i| plan.measures[i].index).collect(),
        weight_profile_id: profile.id.to_string(),
        rng_seed: seed,
    }
}
