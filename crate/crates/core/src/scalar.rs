//! Scalar abstractions.
//!
//! Node costs and budgets are generic over [`Cost`], implemented for exact
//! rationals ([`num_rational::Rational64`], the default) and for `f64`.
//! Closed-form guarantee evaluators are generic over [`num_traits::Float`].

use std::fmt::{Debug, Display};

use num_rational::Rational64;
use num_traits::{Num, ToPrimitive};
use rand::Rng;

/// Grid resolution used when drawing rational costs uniformly from a range.
pub const RATIONAL_COST_GRID: i64 = 1000;

pub trait Cost:
    Num + Copy + PartialOrd + Debug + Display + ToPrimitive + Send + Sync + 'static
{
    /// Parses a cost literal. Accepts integers, decimals and (for rationals) `n/d`.
    fn parse_cost(text: &str) -> Option<Self>;

    /// Renders a cost so that `parse_cost(render(c)) == Some(c)`.
    fn render(&self) -> String;

    /// Draws a cost uniformly from `[lo, hi]`.
    fn sample_uniform<R: Rng + ?Sized>(lo: Self, hi: Self, rng: &mut R) -> Self;

    fn from_usize(n: usize) -> Self;

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Cost for f64 {
    fn parse_cost(text: &str) -> Option<Self> {
        text.trim().parse::<f64>().ok().filter(|c| c.is_finite())
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn sample_uniform<R: Rng + ?Sized>(lo: Self, hi: Self, rng: &mut R) -> Self {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..=hi)
        }
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }
}

impl Cost for Rational64 {
    fn parse_cost(text: &str) -> Option<Self> {
        parse_rational(text.trim())
    }

    fn render(&self) -> String {
        if *self.denom() == 1 {
            format!("{}", self.numer())
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    /// Draws from the grid `lo + (hi - lo) * k / RATIONAL_COST_GRID`, `k` uniform in
    /// `0..=RATIONAL_COST_GRID`.
    fn sample_uniform<R: Rng + ?Sized>(lo: Self, hi: Self, rng: &mut R) -> Self {
        if lo == hi {
            return lo;
        }
        let k = rng.gen_range(0..=RATIONAL_COST_GRID);
        lo + (hi - lo) * Rational64::new(k, RATIONAL_COST_GRID)
    }

    fn from_usize(n: usize) -> Self {
        Rational64::from_integer(n as i64)
    }
}

/// Parses `"7"`, `"-3"`, `"2.25"` or `"5/4"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational64> {
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational64::new(n, d));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let scale = 10i64.checked_pow(frac_part.len() as u32)?;
    let int_value: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().ok()?
    };
    let frac_value: i64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().ok()?
    };
    let numer = int_value.checked_mul(scale)?.checked_add(frac_value)?;
    let value = Rational64::new(numer, scale);
    Some(if negative { -value } else { value })
}

/// Exact equality test for a cost against one unit.
pub fn is_unit<C: Cost>(c: &C) -> bool {
    *c == C::one()
}
