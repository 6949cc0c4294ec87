//! Objective quality metrics over the score IR: playability, readability,
//! utilization, and plan adherence. All scores are exact rational
//! percentages in [0, 100]; a `None` score means the constituent does not
//! apply and is excluded from macro-averages.

pub mod adherence;
pub mod playability;
pub mod readability;

use thiserror::Error;

use crate::rational::{rat_int, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no applicable metric constituents")]
pub struct NoApplicableMetrics;

pub(crate) fn pct(hits: i64, total: i64) -> Rational {
    Rational::new(100 * hits, total)
}

/// Unweighted mean over the applicable scores.
pub(crate) fn macro_average<I>(scores: I) -> Result<Rational, NoApplicableMetrics>
where
    I: IntoIterator<Item = Rational>,
{
    let mut sum = rat_int(0);
    let mut count = 0i64;
    for s in scores {
        sum += s;
        count += 1;
    }
    if count == 0 {
        Err(NoApplicableMetrics)
    } else {
        Ok(sum / rat_int(count))
    }
}

/// Absolute onset of each measure start in a part, in quarter notes,
/// accumulated from time-signature capacities.
pub(crate) fn measure_starts(part: &crate::score::Part) -> Vec<Rational> {
    let mut starts = Vec::with_capacity(part.measures.len());
    let mut acc = rat_int(0);
    for m in &part.measures {
        starts.push(acc);
        acc += m.capacity();
    }
    starts
}
