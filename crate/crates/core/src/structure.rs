//! Translation-invariant pattern structure: maximal translatable patterns,
//! their translational equivalence classes, and the greedy best-compression
//! cover whose overall ratio serves as the structural complexity score.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::rational::{rat, rat_int, Rational};
use crate::score::Score;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("score contains no sounding points")]
pub struct EmptyScoreError;

pub type Point = (i64, i64);

/// Finite set of (onset, pitch) lattice points; onsets count 1/16-quarter
/// grid steps from the piece start.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PointSet {
    pub points: BTreeSet<Point>,
}

impl PointSet {
    pub fn from_points(points: impl IntoIterator<Item = Point>) -> Self {
        PointSet { points: points.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn translate(&self, by: Point) -> PointSet {
        PointSet {
            points: self.points.iter().map(|p| (p.0 + by.0, p.1 + by.1)).collect(),
        }
    }
}

/// A translational equivalence class: a pattern plus every vector that maps
/// it into the point set (always including the zero vector).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tec {
    pub pattern: Vec<Point>,
    pub translators: Vec<Point>,
}

impl Tec {
    pub fn covered(&self) -> BTreeSet<Point> {
        let mut out = BTreeSet::new();
        for t in &self.translators {
            for p in &self.pattern {
                out.insert((p.0 + t.0, p.1 + t.1));
            }
        }
        out
    }

    /// |covered| / (|pattern| + |translators| - 1), always >= 1.
    pub fn compression_ratio(&self) -> Rational {
        rat(
            self.covered().len() as i64,
            (self.pattern.len() + self.translators.len() - 1) as i64,
        )
    }

    /// Pattern translated so its first point sits at the origin; equal for
    /// translationally equivalent TECs.
    pub fn canonical_pattern(&self) -> Vec<Point> {
        let (ox, oy) = self.pattern[0];
        self.pattern.iter().map(|p| (p.0 - ox, p.1 - oy)).collect()
    }

    fn bounding_box_area(&self) -> i64 {
        let min_x = self.pattern.iter().map(|p| p.0).min().unwrap_or(0);
        let max_x = self.pattern.iter().map(|p| p.0).max().unwrap_or(0);
        let min_y = self.pattern.iter().map(|p| p.1).min().unwrap_or(0);
        let max_y = self.pattern.iter().map(|p| p.1).max().unwrap_or(0);
        (max_x - min_x + 1) * (max_y - min_y + 1)
    }
}

/// One point per sounding pitch at its absolute onset, merged across parts.
/// Off-grid onsets round to the nearest grid point, ties rounding down.
pub fn score_to_pointset(score: &Score) -> Result<PointSet, EmptyScoreError> {
    let mut points = BTreeSet::new();
    for part in &score.parts {
        let mut start = rat_int(0);
        for measure in &part.measures {
            for event in &measure.notes {
                let grid = (start + event.onset) * rat_int(16);
                let floor = grid.floor().to_integer();
                let frac = grid - rat_int(floor);
                let x = if frac > rat(1, 2) { floor + 1 } else { floor };
                for pitch in &event.pitches {
                    points.insert((x, pitch.midi() as i64));
                }
            }
            start += measure.capacity();
        }
    }
    if points.is_empty() {
        return Err(EmptyScoreError);
    }
    Ok(PointSet { points })
}

/// All maximal translatable patterns with their full translator sets,
/// deduplicated up to translational equivalence. A single point yields its
/// trivial TEC.
pub fn siatec(ps: &PointSet) -> Vec<Tec> {
    let points: Vec<Point> = ps.points.iter().copied().collect();
    if points.len() == 1 {
        return vec![Tec { pattern: points, translators: vec![(0, 0)] }];
    }

    // MTP(v) = { p : p + v in P } for every nonzero difference vector v.
    let mut mtps: BTreeMap<Point, Vec<Point>> = BTreeMap::new();
    for &p in &points {
        for &q in &points {
            if p != q {
                let v = (q.0 - p.0, q.1 - p.1);
                mtps.entry(v).or_default().push(p);
            }
        }
    }

    let mut seen: BTreeSet<Vec<Point>> = BTreeSet::new();
    let mut tecs = Vec::new();
    for pattern in mtps.into_values() {
        // pattern is sorted: points were iterated in BTreeSet order.
        let origin = pattern[0];
        let canonical: Vec<Point> =
            pattern.iter().map(|p| (p.0 - origin.0, p.1 - origin.1)).collect();
        if !seen.insert(canonical.clone()) {
            continue;
        }
        let translators = full_translators(&canonical, ps);
        let anchor = translators[0];
        let pattern: Vec<Point> =
            canonical.iter().map(|p| (p.0 + anchor.0, p.1 + anchor.1)).collect();
        let translators: Vec<Point> =
            translators.iter().map(|t| (t.0 - anchor.0, t.1 - anchor.1)).collect();
        tecs.push(Tec { pattern, translators });
    }
    tecs
}

/// Every u with canonical_pattern + u inside the set, sorted ascending.
fn full_translators(canonical: &[Point], ps: &PointSet) -> Vec<Point> {
    let first = canonical[0];
    let mut out = Vec::new();
    for &q in &ps.points {
        let u = (q.0 - first.0, q.1 - first.1);
        if canonical
            .iter()
            .all(|p| ps.points.contains(&(p.0 + u.0, p.1 + u.1)))
        {
            out.push(u);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosiatecResult {
    pub cover: Vec<Tec>,
    pub structure_score: Rational,
    /// (points before, points after) when the size guardrail decimated input.
    pub decimated: Option<(usize, usize)>,
}

/// Point count above which doubled octaves are dropped before discovery.
pub const DECIMATION_LIMIT: usize = 5_000;

/// Greedy best-compression cover. Each round picks the TEC with the highest
/// compression ratio (ties: larger coverage, smaller pattern bounding box,
/// lexicographically smallest pattern), removes its points, and repeats.
/// The structure score is the whole-piece compression ratio.
pub fn cosiatec_cover(ps: &PointSet) -> CosiatecResult {
    let mut working = ps.clone();
    let mut decimated = None;
    if working.len() > DECIMATION_LIMIT {
        let before = working.len();
        working = drop_doubled_octaves(&working);
        decimated = Some((before, working.len()));
    }

    let total_points = working.len() as i64;
    let mut remaining = working;
    let mut cover: Vec<Tec> = Vec::new();
    let mut description_size: i64 = 0;

    while !remaining.is_empty() {
        let tecs = siatec(&remaining);
        let best = tecs
            .into_iter()
            .max_by(|a, b| {
                a.compression_ratio()
                    .cmp(&b.compression_ratio())
                    .then_with(|| a.covered().len().cmp(&b.covered().len()))
                    .then_with(|| b.bounding_box_area().cmp(&a.bounding_box_area()))
                    .then_with(|| b.pattern.cmp(&a.pattern))
            })
            .expect("siatec of a nonempty set is nonempty");
        description_size += (best.pattern.len() + best.translators.len() - 1) as i64;
        for p in best.covered() {
            remaining.points.remove(&p);
        }
        cover.push(best);
    }

    let structure_score = if description_size > 0 {
        rat(total_points, description_size)
    } else {
        rat_int(0)
    };
    CosiatecResult { cover, structure_score, decimated }
}

fn drop_doubled_octaves(ps: &PointSet) -> PointSet {
    let mut points = ps.points.clone();
    let mut doubled: Vec<Point> = points
        .iter()
        .copied()
        .filter(|&(x, y)| points.contains(&(x, y - 12)))
        .collect();
    // Drop from the top so stacked octaves collapse onto the lowest.
    doubled.sort_by_key(|p| std::cmp::Reverse(p.1));
    for p in doubled {
        if points.contains(&(p.0, p.1 - 12)) {
            points.remove(&p);
        }
    }
    PointSet { points }
}

/// Structure score of a whole score: merged across parts by default, or the
/// mean of per-part scores when `per_part` is set.
pub fn structure_score(score: &Score, per_part: bool) -> Result<Rational, EmptyScoreError> {
    if !per_part {
        return Ok(cosiatec_cover(&score_to_pointset(score)?).structure_score);
    }
    let mut scores = Vec::new();
    for part in &score.parts {
        let solo = Score {
            title: None,
            genre: None,
            parts: vec![part.clone()],
            measure_count: part.measures.len(),
        };
        if let Ok(ps) = score_to_pointset(&solo) {
            scores.push(cosiatec_cover(&ps).structure_score);
        }
    }
    if scores.is_empty() {
        return Err(EmptyScoreError);
    }
    let n = scores.len() as i64;
    Ok(scores.into_iter().sum::<Rational>() / rat_int(n))
}
