//! Exact decimal scalars for lattice arithmetic.
//!
//! Support values, lattice steps, and transform coefficients are decimals
//! with at most [`MAX_SCALE`] fractional digits, stored as
//! `units × 10^-scale` with integer `units`. Everything that decides
//! *which* lattice point a value lands on happens in integer arithmetic on
//! aligned units, so two inputs that print the same always collide on the
//! same key — float keys would silently split masses.
//!
//! Values are kept canonical (minimal scale, trailing zeros stripped), which
//! makes `Eq`/`Hash` structural and keeps parse → emit byte-stable.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use thiserror::Error;

/// Maximum number of fractional digits a decimal literal may carry.
pub const MAX_SCALE: u32 = 12;

/// Magnitude bound on stored units: 10^26. Generous for any realistic
/// value while leaving headroom so that aligning two decimals
/// (`units × 10^12` worst case) can never overflow an `i128`.
const UNIT_LIMIT: i128 = 100_000_000_000_000_000_000_000_000;

const POW10: [i128; MAX_SCALE as usize + 1] = [
    1,
    10,
    100,
    1_000,
    10_000,
    100_000,
    1_000_000,
    10_000_000,
    100_000_000,
    1_000_000_000,
    10_000_000_000,
    100_000_000_000,
    1_000_000_000_000,
];

/// Error raised when text or arithmetic leaves the representable range.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecimalError {
    #[error("empty decimal literal")]
    Empty,
    #[error("invalid decimal literal {0:?}")]
    Invalid(String),
    #[error("more than {MAX_SCALE} fractional digits in {0:?}")]
    TooManyFractionDigits(String),
    #[error("decimal out of range: {0}")]
    OutOfRange(String),
}

/// An exact decimal: `units × 10^-scale`, canonical (minimal scale).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    units: i128,
    scale: u32,
}

impl Decimal {
    pub const ZERO: Decimal = Decimal { units: 0, scale: 0 };
    pub const ONE: Decimal = Decimal { units: 1, scale: 0 };

    /// Builds `units × 10^-scale`, canonicalizing and range-checking.
    pub fn from_units(units: i128, scale: u32) -> Result<Decimal, DecimalError> {
        if scale > MAX_SCALE {
            return Err(DecimalError::TooManyFractionDigits(format!(
                "{units}e-{scale}"
            )));
        }
        let d = Decimal { units, scale }.canonical();
        if d.units.abs() > UNIT_LIMIT {
            return Err(DecimalError::OutOfRange(format!("{units}e-{scale}")));
        }
        Ok(d)
    }

    fn canonical(mut self) -> Decimal {
        while self.scale > 0 && self.units % 10 == 0 {
            self.units /= 10;
            self.scale -= 1;
        }
        if self.units == 0 {
            self.scale = 0;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.units == 0
    }

    pub fn is_negative(&self) -> bool {
        self.units < 0
    }

    /// True when the value has no fractional part.
    pub fn is_integer(&self) -> bool {
        self.scale == 0
    }

    /// The value as an integer, when it is one.
    pub fn to_i128(&self) -> Option<i128> {
        (self.scale == 0).then_some(self.units)
    }

    pub fn abs(&self) -> Decimal {
        Decimal {
            units: self.units.abs(),
            scale: self.scale,
        }
    }

    pub fn neg(&self) -> Decimal {
        Decimal {
            units: -self.units,
            scale: self.scale,
        }
    }

    /// Nearest `f64` (used for moments and tail thresholds, never for keys).
    pub fn to_f64(&self) -> f64 {
        self.units as f64 / POW10[self.scale as usize] as f64
    }

    /// Both operands on the larger of the two scales.
    fn aligned(&self, other: &Decimal) -> (i128, i128, u32) {
        let scale = self.scale.max(other.scale);
        // |units| ≤ 10^26 and the factor ≤ 10^12, so this stays well inside i128.
        let a = self.units * POW10[(scale - self.scale) as usize];
        let b = other.units * POW10[(scale - other.scale) as usize];
        (a, b, scale)
    }

    pub fn checked_add(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        let (a, b, scale) = self.aligned(other);
        Decimal::from_units(
            a.checked_add(b)
                .ok_or_else(|| DecimalError::OutOfRange(format!("{self} + {other}")))?,
            scale,
        )
    }

    pub fn checked_sub(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        self.checked_add(&other.neg())
    }

    /// Exact product; fails if it needs more than [`MAX_SCALE`] fractional
    /// digits or leaves range.
    pub fn checked_mul(&self, other: &Decimal) -> Result<Decimal, DecimalError> {
        let units = self
            .units
            .checked_mul(other.units)
            .ok_or_else(|| DecimalError::OutOfRange(format!("{self} × {other}")))?;
        let raw = Decimal {
            units,
            scale: self.scale + other.scale,
        }
        .canonical();
        if raw.scale > MAX_SCALE {
            return Err(DecimalError::TooManyFractionDigits(format!(
                "{self} × {other}"
            )));
        }
        if raw.units.abs() > UNIT_LIMIT {
            return Err(DecimalError::OutOfRange(format!("{self} × {other}")));
        }
        Ok(raw)
    }

    /// Exact product with an integer.
    pub fn checked_mul_int(&self, k: i128) -> Result<Decimal, DecimalError> {
        let units = self
            .units
            .checked_mul(k)
            .ok_or_else(|| DecimalError::OutOfRange(format!("{self} × {k}")))?;
        Decimal::from_units(units, self.scale)
    }

    /// Greatest common step of two decimals (gcd on aligned units).
    pub fn gcd(&self, other: &Decimal) -> Decimal {
        let (a, b, scale) = self.aligned(other);
        Decimal {
            units: a.abs().gcd(&b.abs()),
            scale,
        }
        .canonical()
    }

    /// `other / self` when it is an exact integer, else `None`.
    /// `self` must be non-zero.
    pub fn div_exact(&self, other: &Decimal) -> Option<i128> {
        debug_assert!(!self.is_zero());
        let (step, value, _) = self.aligned(other);
        (value % step == 0).then(|| value / step)
    }

    /// `floor(self / divisor)` as an exact integer; `divisor` must be
    /// positive. This is how a value picks its class interval.
    pub fn div_euclid_by(&self, divisor: &Decimal) -> i128 {
        debug_assert!(!divisor.is_zero() && !divisor.is_negative());
        let (value, step, _) = self.aligned(divisor);
        value.div_euclid(step)
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Decimal) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Decimal) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl From<i64> for Decimal {
    fn from(v: i64) -> Decimal {
        Decimal {
            units: v as i128,
            scale: 0,
        }
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Decimal, DecimalError> {
        let text = s.trim();
        if text.is_empty() {
            return Err(DecimalError::Empty);
        }
        let (negative, body) = match text.as_bytes()[0] {
            b'+' => (false, &text[1..]),
            b'-' => (true, &text[1..]),
            _ => (false, text),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(DecimalError::Invalid(s.to_string()));
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(DecimalError::Invalid(s.to_string()));
        }
        if frac_part.len() as u32 > MAX_SCALE {
            return Err(DecimalError::TooManyFractionDigits(s.to_string()));
        }
        let mut units: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            units = units
                .checked_mul(10)
                .and_then(|u| u.checked_add((b - b'0') as i128))
                .ok_or_else(|| DecimalError::OutOfRange(s.to_string()))?;
        }
        if negative {
            units = -units;
        }
        Decimal::from_units(units, frac_part.len() as u32)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.units);
        }
        let sign = if self.units < 0 { "-" } else { "" };
        let abs = self.units.unsigned_abs();
        let pow = POW10[self.scale as usize] as u128;
        write!(
            f,
            "{sign}{}.{:0width$}",
            abs / pow,
            abs % pow,
            width = self.scale as usize
        )
    }
}

impl fmt::Debug for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Decimal({self})")
    }
}
