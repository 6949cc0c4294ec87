//! Exact rational time/score arithmetic shared across the crate.
//!
//! All onsets, durations, tempi, and metric percentages are `Ratio<i64>`.
//! Floats appear only at the presentation boundary (`render_2dp`).

use num_rational::Ratio;

pub type Rational = Ratio<i64>;

/// Shorthand constructor; panics on a zero denominator like `Ratio::new`.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Ratio::new(numer, denom)
}

pub fn rat_int(value: i64) -> Rational {
    Ratio::from_integer(value)
}

/// Render a rational at two decimal places, rounding half to even.
pub fn render_2dp(value: Rational) -> String {
    let scaled = value * rat_int(100);
    let floor = scaled.floor().to_integer();
    let frac = scaled - Ratio::from_integer(floor);
    let half = rat(1, 2);
    let round_up = frac > half || (frac == half && floor % 2 != 0);
    let rounded = if round_up { floor + 1 } else { floor };
    let sign = if rounded < 0 { "-" } else { "" };
    let abs = rounded.abs();
    format!("{}{}.{:02}", sign, abs / 100, abs % 100)
}

/// Render a rational exactly: plain integer when integral, `n/d` otherwise.
pub fn render_exact(value: Rational) -> String {
    if value.is_integer() {
        value.to_integer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Exact big-rational mirror of `render_2dp`, for corpus aggregation where
/// i64 denominators could overflow.
pub fn render_2dp_big(value: &num_rational::BigRational) -> String {
    use num_bigint::BigInt;
    use num_traits::{Signed, ToPrimitive, Zero};
    let scaled = value * num_rational::BigRational::from_integer(BigInt::from(100));
    let floor = scaled.floor().to_integer();
    let frac = &scaled - num_rational::BigRational::from_integer(floor.clone());
    let half = num_rational::BigRational::new(BigInt::from(1), BigInt::from(2));
    let round_up = frac > half || (frac == half && !(&floor % 2i32).is_zero());
    let rounded = if round_up { floor + BigInt::from(1) } else { floor };
    let sign = if rounded.is_negative() { "-" } else { "" };
    let abs = rounded.abs();
    let int = (&abs / 100i32).to_string();
    let cents = (&abs % 100i32).to_i64().expect("mod 100 fits");
    format!("{sign}{int}.{cents:02}")
}

pub fn render_exact_big(value: &num_rational::BigRational) -> String {
    use num_traits::One;
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_big(value: Rational) -> num_rational::BigRational {
    num_rational::BigRational::new(
        num_bigint::BigInt::from(*value.numer()),
        num_bigint::BigInt::from(*value.denom()),
    )
}

/// Parse the `render_exact` form back into a rational.
pub fn parse_exact(text: &str) -> Option<Rational> {
    match text.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                None
            } else {
                Some(rat(n, d))
            }
        }
        None => text.trim().parse::<i64>().ok().map(rat_int),
    }
}
