//! Base-`b`, `p`-digit floating-point numbers with an unbounded exponent, and
//! the rounding map applied after every step of a rounded orbit.
//!
//! A nonzero value is `±m·b^e` where the mantissa `m` has exactly `p`
//! fractional base-`b` digits and lies in `[1/b, 1)`. The mantissa is stored as
//! the integer `m·b^p`. Zero carries the distinguished exponent
//! [`Exponent::NegInf`].
//!
//! Rounding looks only at the first `p + 1` significant digits of its argument:
//! the value is truncated to `p + 1` digits and then rounded to the nearest
//! `p`-digit mantissa, with ties settled by the format's [`TieRule`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign as BigSign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FpError {
    #[error("base must lie in 2..=36, got {0}")]
    InvalidBase(u32),
    #[error("precision must be at least 1")]
    ZeroPrecision,
    #[error("base {base} with precision {precision} does not fit a 64-bit mantissa")]
    PrecisionTooLarge { base: u32, precision: u32 },
    #[error("mantissa {digits} is not a normalized {precision}-digit base-{base} mantissa")]
    Denormal { digits: u64, base: u32, precision: u32 },
    #[error("cannot parse `{0}` as a number")]
    Parse(String),
    #[error("`{0}` is not exactly representable in this format")]
    Inexact(String),
    #[error("unknown tie rule `{0}`")]
    UnknownTieRule(String),
}

/// How a value exactly halfway between two neighbours is rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TieRule {
    #[default]
    HalfAwayFromZero,
    HalfToEven,
    /// Ties go towards `+∞`.
    HalfUp,
    /// Ties go towards `−∞`.
    HalfDown,
}

impl TieRule {
    pub const ALL: [TieRule; 4] = [
        TieRule::HalfAwayFromZero,
        TieRule::HalfToEven,
        TieRule::HalfUp,
        TieRule::HalfDown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TieRule::HalfAwayFromZero => "half-away",
            TieRule::HalfToEven => "half-even",
            TieRule::HalfUp => "half-up",
            TieRule::HalfDown => "half-down",
        }
    }
}

impl fmt::Display for TieRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TieRule {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "half-away" | "half-away-from-zero" => Ok(TieRule::HalfAwayFromZero),
            "half-even" | "half-to-even" => Ok(TieRule::HalfToEven),
            "half-up" => Ok(TieRule::HalfUp),
            "half-down" => Ok(TieRule::HalfDown),
            other => Err(FpError::UnknownTieRule(other.to_string())),
        }
    }
}

/// Base, precision and tie rule of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpFormat {
    base: u32,
    precision: u32,
    tie: TieRule,
    /// `base^precision`, the exclusive upper bound of stored mantissas.
    scale: u64,
}

impl FpFormat {
    pub fn new(base: u32, precision: u32) -> Result<Self, FpError> {
        Self::with_tie(base, precision, TieRule::default())
    }

    pub fn with_tie(base: u32, precision: u32, tie: TieRule) -> Result<Self, FpError> {
        if !(2..=36).contains(&base) {
            return Err(FpError::InvalidBase(base));
        }
        if precision == 0 {
            return Err(FpError::ZeroPrecision);
        }
        // rounding inspects p + 1 digits, so b^(p+1) must fit too
        let too_large = FpError::PrecisionTooLarge { base, precision };
        let scale = (base as u64).checked_pow(precision).ok_or(too_large.clone())?;
        scale.checked_mul(base as u64).ok_or(too_large)?;
        Ok(FpFormat {
            base,
            precision,
            tie,
            scale,
        })
    }

    /// Base 10 with the default tie rule.
    pub fn decimal(precision: u32) -> Result<Self, FpError> {
        Self::new(10, precision)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn tie(&self) -> TieRule {
        self.tie
    }

    pub fn set_tie(&mut self, tie: TieRule) {
        self.tie = tie;
    }

    pub fn round(&self, x: &BigRational) -> FpNumber {
        round(x, self)
    }

    pub fn zero(&self) -> FpNumber {
        FpNumber {
            negative: false,
            digits: 0,
            exponent: Exponent::NegInf,
            base: self.base,
            precision: self.precision,
        }
    }
}

/// Exponent of a floating-point value; zero carries `NegInf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Exponent {
    NegInf,
    Finite(i64),
}

impl Exponent {
    pub fn finite(self) -> Option<i64> {
        match self {
            Exponent::NegInf => None,
            Exponent::Finite(e) => Some(e),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::NegInf => f.write_str("-inf"),
            Exponent::Finite(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of_rational(x: &BigRational) -> Sign {
        if x.is_zero() {
            Sign::Zero
        } else if x.is_negative() {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Negative => "-",
            Sign::Zero => "0",
            Sign::Positive => "+",
        })
    }
}

/// A `p`-digit floating-point value `±(digits / b^p)·b^exponent`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FpNumber {
    negative: bool,
    digits: u64,
    exponent: Exponent,
    base: u32,
    precision: u32,
}

impl FpNumber {
    /// Builds a nonzero value from its normalized digit string `digits`
    /// (which must lie in `[b^(p-1), b^p)`) or zero when `digits == 0`.
    pub fn from_parts(fmt: &FpFormat, negative: bool, digits: u64, exponent: i64) -> Result<Self, FpError> {
        if digits == 0 {
            return Ok(fmt.zero());
        }
        if digits >= fmt.scale || digits < fmt.scale / fmt.base as u64 {
            return Err(FpError::Denormal {
                digits,
                base: fmt.base,
                precision: fmt.precision,
            });
        }
        Ok(FpNumber {
            negative,
            digits,
            exponent: Exponent::Finite(exponent),
            base: fmt.base,
            precision: fmt.precision,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.digits == 0
    }

    pub fn sign(&self) -> Sign {
        if self.digits == 0 {
            Sign::Zero
        } else if self.negative {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn is_negative(&self) -> bool {
        self.negative && self.digits != 0
    }

    /// The mantissa scaled to an integer, `m·b^p`; zero for zero.
    pub fn digits(&self) -> u64 {
        self.digits
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// The unsigned mantissa `m ∈ {0} ∪ [1/b, 1)`.
    pub fn mantissa(&self) -> BigRational {
        BigRational::new(BigInt::from(self.digits), BigInt::from(self.base).pow(self.precision))
    }

    /// Exact value `±m·b^α`.
    pub fn to_rational(&self) -> BigRational {
        let Exponent::Finite(e) = self.exponent else {
            return BigRational::zero();
        };
        let unit_exp = e - self.precision as i64;
        let mut mag = BigInt::from(self.digits);
        if self.negative {
            mag = -mag;
        }
        let base = BigInt::from(self.base);
        if unit_exp >= 0 {
            BigRational::from_integer(mag * base.pow(unit_exp as u32))
        } else {
            BigRational::new(mag, base.pow((-unit_exp) as u32))
        }
    }

    /// `b^k · self`, exact because rounding is mantissa-based.
    pub fn scale_pow(&self, k: i64) -> FpNumber {
        let mut out = self.clone();
        if let Exponent::Finite(e) = self.exponent {
            out.exponent = Exponent::Finite(e + k);
        }
        out
    }

    /// `|exponent(self) − exponent(other)| < delta`; zero is close to zero only.
    pub fn is_close(&self, other: &FpNumber, delta: u64) -> bool {
        is_close(self, other, delta)
    }

    /// Magnitude comparison ignoring sign.
    pub fn cmp_abs(&self, other: &FpNumber) -> Ordering {
        debug_assert_eq!(self.base, other.base);
        match (self.exponent, other.exponent) {
            (Exponent::NegInf, Exponent::NegInf) => Ordering::Equal,
            (Exponent::NegInf, _) => Ordering::Less,
            (_, Exponent::NegInf) => Ordering::Greater,
            (Exponent::Finite(a), Exponent::Finite(b)) => a.cmp(&b).then(self.digits.cmp(&other.digits)),
        }
    }

    /// Parses `[±]0.d₁…dₚe<exp>` in the format's base, `0`, or an integer,
    /// fraction (`num/den`) or decimal literal. Values that are not exactly
    /// representable are rounded unless `exact` is set, in which case they
    /// are rejected.
    pub fn parse(s: &str, fmt: &FpFormat, exact: bool) -> Result<FpNumber, FpError> {
        let value = parse_literal(s, fmt.base)?;
        let rounded = round(&value, fmt);
        if exact && rounded.to_rational() != value {
            return Err(FpError::Inexact(s.to_string()));
        }
        Ok(rounded)
    }
}

impl fmt::Display for FpNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Exponent::Finite(e) = self.exponent else {
            return f.write_str("0");
        };
        if self.negative {
            f.write_str("-")?;
        }
        let mut digits = vec![b'0'; self.precision as usize];
        let mut rest = self.digits;
        for slot in digits.iter_mut().rev() {
            let d = (rest % self.base as u64) as u32;
            *slot = std::char::from_digit(d, self.base).unwrap_or('?') as u8;
            rest /= self.base as u64;
        }
        write!(f, "0.{}e{}", String::from_utf8_lossy(&digits), e)
    }
}

/// Rounds an exact rational to the nearest `p`-digit value, judged on the
/// first `p + 1` significant digits.
pub fn round(x: &BigRational, fmt: &FpFormat) -> FpNumber {
    if x.is_zero() {
        return fmt.zero();
    }
    let negative = x.is_negative();
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    round_scaled(negative, num, den, 0, fmt)
}

/// Rounds `±(num/den)·b^exp`. Shared by [`round`] and the orbit stepper, which
/// keeps power-of-base factors out of the big integers.
pub(crate) fn round_scaled(negative: bool, num: &BigUint, den: &BigUint, exp: i64, fmt: &FpFormat) -> FpNumber {
    if num.is_zero() {
        return fmt.zero();
    }
    let b = fmt.base as u64;
    let p = fmt.precision as i64;
    let lo = fmt.scale;
    let hi = fmt.scale * b;

    // exponent estimate: value < b^e, refined exactly below
    let log_b = (log2_big(num) - log2_big(den)) / (b as f64).log2();
    let mut e = exp + log_b.floor() as i64 + 1;
    let q = loop {
        let shift = exp + p + 1 - e;
        let q = if shift >= 0 {
            (num * pow_big(b, shift as u64)) / den
        } else {
            num / (den * pow_big(b, (-shift) as u64))
        };
        if q >= BigUint::from(hi) {
            e += 1;
        } else if q < BigUint::from(lo) {
            e -= 1;
        } else {
            break q.to_u64().expect("bounded by b^(p+1)");
        }
    };
    from_truncated(negative, q, e, fmt)
}

/// Rounds a value whose first `p + 1` digits are `q ∈ [b^p, b^(p+1))` with
/// exponent `e`, i.e. the truncated value `(q / b^(p+1))·b^e`.
pub(crate) fn from_truncated(negative: bool, q: u64, mut e: i64, fmt: &FpFormat) -> FpNumber {
    let b = fmt.base as u64;
    let mut digits = q / b;
    let rest = q % b;
    let up = match (2 * rest).cmp(&b) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match fmt.tie {
            TieRule::HalfAwayFromZero => true,
            TieRule::HalfToEven => digits % 2 == 1,
            TieRule::HalfUp => !negative,
            TieRule::HalfDown => negative,
        },
    };
    if up {
        digits += 1;
        if digits == fmt.scale {
            digits = fmt.scale / b;
            e += 1;
        }
    }
    FpNumber {
        negative,
        digits,
        exponent: Exponent::Finite(e),
        base: fmt.base,
        precision: fmt.precision,
    }
}

pub fn is_close(x: &FpNumber, y: &FpNumber, delta: u64) -> bool {
    match (x.exponent, y.exponent) {
        (Exponent::NegInf, Exponent::NegInf) => true,
        (Exponent::Finite(a), Exponent::Finite(b)) => ((a as i128) - (b as i128)).unsigned_abs() < delta as u128,
        _ => false,
    }
}

pub(crate) fn pow_big(b: u64, k: u64) -> BigUint {
    BigUint::from(b).pow(k as u32)
}

fn log2_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 64 {
        (n.to_u64().expect("fits") as f64).log2()
    } else {
        let shift = bits - 64;
        ((n >> shift).to_u64().expect("fits") as f64).log2() + shift as f64
    }
}

/// Parses an exact rational literal: `a`, `a/b`, a decimal `a.b`, or
/// `[±]0.d…e<exp>` with digits in `base`.
pub fn parse_literal(s: &str, base: u32) -> Result<BigRational, FpError> {
    let err = || FpError::Parse(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    let (negative, body) = match t.as_bytes()[0] {
        b'-' => (true, &t[1..]),
        b'+' => (false, &t[1..]),
        _ => (false, t),
    };
    if body.is_empty() {
        return Err(err());
    }
    let value = if let Some((mant, exp)) = split_float(body, base) {
        let exp: i64 = exp.parse().map_err(|_| err())?;
        let frac = mant.strip_prefix("0.").ok_or_else(err)?;
        if frac.is_empty() {
            return Err(err());
        }
        let digits = BigInt::parse_bytes(frac.as_bytes(), base).ok_or_else(err)?;
        let scale = exp - frac.len() as i64;
        let b = BigInt::from(base);
        if scale >= 0 {
            BigRational::from_integer(digits * b.pow(scale as u32))
        } else {
            BigRational::new(digits, b.pow((-scale) as u32))
        }
    } else if let Some((n, d)) = body.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() || d.sign() == BigSign::Minus {
            return Err(err());
        }
        BigRational::new(n, d)
    } else if let Some((int, frac)) = body.split_once('.') {
        if !int.bytes().all(|c| c.is_ascii_digit()) || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        if int.is_empty() && frac.is_empty() {
            return Err(err());
        }
        let joined = format!("{int}{frac}");
        let n: BigInt = joined.parse().map_err(|_| err())?;
        BigRational::new(n, BigInt::from(10u32).pow(frac.len() as u32))
    } else {
        if !body.bytes().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        BigRational::from_integer(body.parse().map_err(|_| err())?)
    };
    Ok(if negative { -value } else { value })
}

/// Splits `0.ddd e<exp>` on the exponent marker. For bases above 14 the
/// letter `e` is itself a digit, so the last `e` is taken as the marker.
fn split_float(body: &str, base: u32) -> Option<(&str, &str)> {
    if !body.starts_with("0.") {
        return None;
    }
    let (mant, exp) = body.rsplit_once('e')?;
    let exp_ok = {
        let e = exp.strip_prefix('-').unwrap_or(exp);
        !e.is_empty() && e.bytes().all(|c| c.is_ascii_digit())
    };
    let mant_ok = mant[2..].chars().all(|c| c.is_digit(base));
    (exp_ok && mant_ok).then_some((mant, exp))
}

/// `b^k` as an exact rational (negative `k` allowed).
pub fn rational_pow(base: u32, k: i64) -> BigRational {
    let b = BigInt::from(base);
    if k >= 0 {
        BigRational::from_integer(b.pow(k as u32))
    } else {
        BigRational::new(BigInt::one(), b.pow((-k) as u32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn dec(p: u32) -> FpFormat {
        FpFormat::decimal(p).unwrap()
    }

    #[test]
    fn nine_point_nine_carries_to_next_power() {
        let f = dec(1);
        for c in 0..6i64 {
            let x = q(99, 10) * rational_pow(10, c - 1);
            assert_eq!(round(&x, &f).to_rational(), rational_pow(10, c));
        }
    }

    #[test]
    fn point_nine_nine_rounds_to_one() {
        let f = dec(1);
        for c in -3..4i64 {
            let x = q(99, 100) * rational_pow(10, c);
            let r = round(&x, &f);
            assert_eq!(r.to_rational(), rational_pow(10, c));
            assert_eq!(r.digits(), 1);
            assert_eq!(r.exponent(), Exponent::Finite(c + 1));
        }
    }

    #[test]
    fn zero_rounds_to_marker() {
        let r = round(&BigRational::zero(), &dec(3));
        assert!(r.is_zero());
        assert_eq!(r.exponent(), Exponent::NegInf);
        assert_eq!(r.sign(), Sign::Zero);
        assert_eq!(r.to_string(), "0");
    }

    #[test]
    fn eleven_rounds_down_to_ten() {
        let r = round(&q(11, 1), &dec(1));
        assert_eq!(r.to_rational(), q(10, 1));
        assert_eq!(r.to_string(), "0.1e2");
    }

    #[test]
    fn ties_follow_the_rule() {
        let x = q(25, 100);
        let cases = [
            (TieRule::HalfAwayFromZero, q(3, 10), q(-3, 10)),
            (TieRule::HalfToEven, q(2, 10), q(-2, 10)),
            (TieRule::HalfUp, q(3, 10), q(-2, 10)),
            (TieRule::HalfDown, q(2, 10), q(-3, 10)),
        ];
        for (tie, pos, neg) in cases {
            let f = FpFormat::with_tie(10, 1, tie).unwrap();
            assert_eq!(round(&x, &f).to_rational(), pos, "{tie}");
            assert_eq!(round(&-x.clone(), &f).to_rational(), neg, "{tie}");
        }
    }

    #[test]
    fn digits_past_p_plus_one_are_ignored() {
        // 0.2500001 truncates to 0.25 and is therefore a tie
        let f = FpFormat::with_tie(10, 1, TieRule::HalfDown).unwrap();
        assert_eq!(round(&q(2_500_001, 10_000_000), &f).to_rational(), q(2, 10));
    }

    #[test]
    fn to_rational_examples() {
        let f = dec(1);
        assert_eq!(FpNumber::from_parts(&f, false, 3, 2).unwrap().to_rational(), q(30, 1));
        assert_eq!(f.zero().to_rational(), BigRational::zero());
        let f2 = dec(2);
        assert_eq!(
            FpNumber::from_parts(&f2, false, 11, 0).unwrap().to_rational(),
            q(11, 100)
        );
    }

    #[test]
    fn closeness_examples() {
        let f = dec(1);
        let x = FpNumber::from_parts(&f, false, 3, 5).unwrap();
        let y = FpNumber::from_parts(&f, false, 9, 4).unwrap();
        assert!(x.is_close(&y, 2));
        assert!(!x.is_close(&y, 1));
        let one_tenth = FpNumber::from_parts(&f, false, 1, 0).unwrap();
        for delta in [0, 1, 5, u64::MAX] {
            assert!(!f.zero().is_close(&one_tenth, delta));
            assert!(!one_tenth.is_close(&f.zero(), delta));
        }
        assert!(f.zero().is_close(&f.zero(), 1));
    }

    #[test]
    fn denormal_parts_rejected() {
        let f = dec(2);
        assert!(FpNumber::from_parts(&f, false, 9, 0).is_err());
        assert!(FpNumber::from_parts(&f, false, 100, 0).is_err());
    }

    #[test]
    fn format_limits() {
        assert!(FpFormat::new(1, 3).is_err());
        assert!(FpFormat::new(37, 3).is_err());
        assert!(FpFormat::new(10, 0).is_err());
        assert!(FpFormat::new(10, 19).is_err());
        assert!(FpFormat::new(10, 18).is_ok());
        assert!(FpFormat::new(2, 62).is_ok());
        assert!(FpFormat::new(2, 63).is_err());
    }

    #[test]
    fn render_and_parse() {
        let f = dec(3);
        let x = round(&q(-1234, 1), &f);
        assert_eq!(x.to_string(), "-0.123e4");
        assert_eq!(FpNumber::parse("-0.123e4", &f, true).unwrap(), x);
        assert_eq!(FpNumber::parse("-1230", &f, true).unwrap(), x);
        assert!(FpNumber::parse("-1234", &f, true).is_err());
        assert_eq!(FpNumber::parse("-1234", &f, false).unwrap(), x);
        assert_eq!(FpNumber::parse("1/8", &f, true).unwrap().to_string(), "0.125e0");
        assert_eq!(FpNumber::parse("0.5", &f, true).unwrap().to_string(), "0.500e0");
        assert!(FpNumber::parse("abc", &f, false).is_err());

        let hex = FpFormat::new(16, 2).unwrap();
        let y = FpNumber::parse("0.fee3", &hex, true).unwrap();
        assert_eq!(y.to_rational(), q(0xfe0, 1));
        assert_eq!(y.to_string(), "0.fee3");
    }

    #[test]
    fn scaling_shifts_exponent_only() {
        let f = dec(2);
        let x = round(&q(47, 1), &f);
        assert_eq!(x.scale_pow(3).to_rational(), q(47_000, 1));
        assert_eq!(f.zero().scale_pow(5), f.zero());
    }
}
