//! Arbitrary-precision real and complex scalars.
//!
//! Real values are MPFR floats (via `rug`), whose exponent range covers
//! magnitudes far beyond `e^(2^20)`. Every operation that takes a
//! [`PrecisionContext`] rounds its result to `ctx.bits()` mantissa bits;
//! summations run at `ctx.working_bits()` and are rounded afterwards.
//!
//! Points handed to the catalog may carry an exact tag (a rational multiple
//! of 1 or of π) next to their rounded value, so that integer-branch and
//! dyadic decisions never depend on floating-point comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Assign, Float, Integer, Rational};

use crate::error::{Error, Result};

pub type BigReal = Float;

pub const MIN_BITS: u32 = 16;

/// Largest decimal exponent for which a decimal literal keeps an exact tag.
const MAX_EXACT_DECIMAL_EXPONENT: i64 = 4096;

/// Mantissa budget shared by every arithmetic operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    bits: u32,
    guard_bits: u32,
}

impl PrecisionContext {
    pub fn new(bits: u32, guard_bits: u32) -> Result<Self> {
        if bits < MIN_BITS {
            return Err(Error::PrecisionTooSmall { bits });
        }
        Ok(PrecisionContext { bits, guard_bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn guard_bits(&self) -> u32 {
        self.guard_bits
    }

    /// Precision used for summations and intermediate recurrences.
    pub fn working_bits(&self) -> u32 {
        self.bits + self.guard_bits
    }

    /// Same budget with the guard folded into the mantissa.
    pub fn widened(&self) -> PrecisionContext {
        PrecisionContext {
            bits: self.working_bits(),
            guard_bits: self.guard_bits,
        }
    }

    pub fn real<T>(&self, value: T) -> BigReal
    where
        BigReal: Assign<T>,
    {
        Float::with_val(self.bits, value)
    }

    pub fn working<T>(&self, value: T) -> BigReal
    where
        BigReal: Assign<T>,
    {
        Float::with_val(self.working_bits(), value)
    }

    pub fn zero(&self) -> BigReal {
        Float::new(self.bits)
    }

    pub fn pi(&self) -> BigReal {
        Float::with_val(self.bits, Constant::Pi)
    }

    /// Unit in the last place of `magnitude` at `bits` precision.
    ///
    /// For `2^(e-1) <= |m| < 2^e` this is `2^(e - bits)`; zero maps to the
    /// smallest positive value so ratios stay finite.
    pub fn ulp(&self, magnitude: &BigReal) -> BigReal {
        let one = Float::with_val(self.bits, 1);
        match magnitude.get_exp() {
            Some(e) => one << (e - self.bits as i32),
            None => {
                let mut tiny = Float::new(self.bits);
                tiny.next_up();
                tiny
            }
        }
    }
}

pub fn make_context(bits: u32, guard_bits: u32) -> Result<PrecisionContext> {
    PrecisionContext::new(bits, guard_bits)
}

/// `log2 |x|` as a double; `-inf` for zero.
pub fn log2_abs(x: &BigReal) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log2() + e as f64
}

/// Natural log of `|x|` as a double; `-inf` for zero.
pub fn ln_abs(x: &BigReal) -> f64 {
    log2_abs(x) * std::f64::consts::LN_2
}

/// Complex value as a pair of reals sharing one precision.
#[derive(Debug, Clone, PartialEq)]
pub struct BigComplex {
    pub re: BigReal,
    pub im: BigReal,
}

impl BigComplex {
    pub fn new(re: BigReal, im: BigReal) -> Self {
        BigComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        BigComplex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn from_real(re: BigReal) -> Self {
        let prec = re.prec();
        BigComplex {
            re,
            im: Float::new(prec),
        }
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        BigComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        BigComplex {
            re: Float::with_val(prec, &self.re),
            im: Float::with_val(prec, &self.im),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn abs(&self) -> BigReal {
        let prec = self.prec();
        if self.im.is_zero() {
            return Float::with_val(prec, self.re.abs_ref());
        }
        if self.re.is_zero() {
            return Float::with_val(prec, self.im.abs_ref());
        }
        Float::with_val(prec, self.re.hypot_ref(&self.im))
    }

    /// Largest of `|re|`, `|im|`; cheaper than `abs` and within a factor √2.
    pub fn max_abs_component(&self) -> BigReal {
        let re = Float::with_val(self.prec(), self.re.abs_ref());
        let im = Float::with_val(self.prec(), self.im.abs_ref());
        if re.cmp_abs(&im) == Some(Ordering::Less) {
            im
        } else {
            re
        }
    }

    pub fn scale(&self, k: &BigReal, prec: u32) -> Self {
        if self.im.is_zero() {
            return BigComplex {
                re: Float::with_val(prec, &self.re * k),
                im: Float::new(prec),
            };
        }
        BigComplex {
            re: Float::with_val(prec, &self.re * k),
            im: Float::with_val(prec, &self.im * k),
        }
    }

    /// Multiplication by `2^k`; exact.
    pub fn shl(&self, k: i32) -> Self {
        BigComplex {
            re: Float::with_val(self.re.prec(), &self.re << k),
            im: Float::with_val(self.im.prec(), &self.im << k),
        }
    }

    pub fn mul_at(&self, rhs: &BigComplex, prec: u32) -> Self {
        if self.im.is_zero() && rhs.im.is_zero() {
            return BigComplex {
                re: Float::with_val(prec, &self.re * &rhs.re),
                im: Float::new(prec),
            };
        }
        // ac - bd and ad + bc, each with a single rounding
        let re = Float::with_val(prec, self.re.mul_sub_mul_ref(&rhs.re, &self.im, &rhs.im));
        let im = Float::with_val(prec, self.re.mul_add_mul_ref(&rhs.im, &self.im, &rhs.re));
        BigComplex { re, im }
    }

    pub fn div_at(&self, rhs: &BigComplex, prec: u32) -> Self {
        if rhs.im.is_zero() {
            return BigComplex {
                re: Float::with_val(prec, &self.re / &rhs.re),
                im: Float::with_val(prec, &self.im / &rhs.re),
            };
        }
        let wide = prec + 32;
        let denom = Float::with_val(wide, rhs.re.mul_add_mul_ref(&rhs.re, &rhs.im, &rhs.im));
        let re = Float::with_val(wide, self.re.mul_add_mul_ref(&rhs.re, &self.im, &rhs.im));
        let im = Float::with_val(wide, self.im.mul_sub_mul_ref(&rhs.re, &self.re, &rhs.im));
        BigComplex {
            re: Float::with_val(prec, re / &denom),
            im: Float::with_val(prec, im / &denom),
        }
    }

    /// In-place `self += a * b` at `self`'s precision.
    pub fn add_product(&mut self, a: &BigComplex, b: &BigComplex) {
        let prec = self.prec();
        if a.im.is_zero() && b.im.is_zero() {
            let p = Float::with_val(prec, &a.re * &b.re);
            self.re += p;
            return;
        }
        let re = Float::with_val(prec, a.re.mul_sub_mul_ref(&b.re, &a.im, &b.im));
        let im = Float::with_val(prec, a.re.mul_add_mul_ref(&b.im, &a.im, &b.re));
        self.re += re;
        self.im += im;
    }

    pub fn add_assign_ref(&mut self, rhs: &BigComplex) {
        self.re += &rhs.re;
        if !rhs.im.is_zero() {
            self.im += &rhs.im;
        }
    }

    pub fn exp_at(&self, prec: u32) -> Self {
        let magnitude = Float::with_val(prec, self.re.exp_ref());
        if self.im.is_zero() {
            return BigComplex {
                re: magnitude,
                im: Float::new(prec),
            };
        }
        let (s, c) = Float::with_val(prec, &self.im).sin_cos(Float::new(prec));
        BigComplex {
            re: Float::with_val(prec, &magnitude * &c),
            im: Float::with_val(prec, &magnitude * &s),
        }
    }

    /// `(sin z, cos z)`.
    pub fn sin_cos_at(&self, prec: u32) -> (Self, Self) {
        let (s, c) = Float::with_val(prec, &self.re).sin_cos(Float::new(prec));
        if self.im.is_zero() {
            return (BigComplex::from_real(s), BigComplex::from_real(c));
        }
        let (sh, ch) = Float::with_val(prec, &self.im).sinh_cosh(Float::new(prec));
        let sin = BigComplex {
            re: Float::with_val(prec, &s * &ch),
            im: Float::with_val(prec, &c * &sh),
        };
        let cos = BigComplex {
            re: Float::with_val(prec, &c * &ch),
            im: -Float::with_val(prec, &s * &sh),
        };
        (sin, cos)
    }

    /// `e^{iθ}` for real θ.
    pub fn cis(theta: &BigReal, prec: u32) -> Self {
        let (s, c) = Float::with_val(prec, theta).sin_cos(Float::new(prec));
        BigComplex { re: c, im: s }
    }

    /// Multiplication by `i^k`; exact.
    pub fn mul_i_pow(&self, k: usize) -> Self {
        match k % 4 {
            0 => self.clone(),
            1 => BigComplex {
                re: -self.im.clone(),
                im: self.re.clone(),
            },
            2 => BigComplex {
                re: -self.re.clone(),
                im: -self.im.clone(),
            },
            _ => BigComplex {
                re: self.im.clone(),
                im: -self.re.clone(),
            },
        }
    }
}

impl<'a> Add<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn add(self, rhs: &'a BigComplex) -> BigComplex {
        let prec = self.prec().max(rhs.prec());
        BigComplex {
            re: Float::with_val(prec, &self.re + &rhs.re),
            im: Float::with_val(prec, &self.im + &rhs.im),
        }
    }
}

impl<'a> Sub<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn sub(self, rhs: &'a BigComplex) -> BigComplex {
        let prec = self.prec().max(rhs.prec());
        BigComplex {
            re: Float::with_val(prec, &self.re - &rhs.re),
            im: Float::with_val(prec, &self.im - &rhs.im),
        }
    }
}

impl<'a> Mul<&'a BigComplex> for &'a BigComplex {
    type Output = BigComplex;
    fn mul(self, rhs: &'a BigComplex) -> BigComplex {
        self.mul_at(rhs, self.prec().max(rhs.prec()))
    }
}

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", format_real(&self.re))
        } else {
            write!(f, "{} + {}i", format_real(&self.re), format_real(&self.im))
        }
    }
}

/// Whether an exact value is a rational number or a rational multiple of π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    One,
    Pi,
}

/// Exact value `ratio · unit`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactValue {
    ratio: Rational,
    unit: Unit,
}

impl ExactValue {
    pub fn rational(ratio: Rational) -> Self {
        ExactValue {
            ratio,
            unit: Unit::One,
        }
    }

    pub fn pi_multiple(ratio: Rational) -> Self {
        ExactValue {
            ratio,
            unit: Unit::Pi,
        }
    }

    pub fn ratio(&self) -> &Rational {
        &self.ratio
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn is_zero(&self) -> bool {
        self.ratio.cmp0() == Ordering::Equal
    }

    /// Rounded value at `prec` bits (≤ 1 ulp for π multiples).
    pub fn to_real(&self, prec: u32) -> BigReal {
        match self.unit {
            Unit::One => Float::with_val(prec, &self.ratio),
            Unit::Pi => {
                let pi = Float::with_val(prec + 64, Constant::Pi);
                Float::with_val(prec, pi * &self.ratio)
            }
        }
    }

    /// `self / other` when both share a unit.
    pub fn ratio_to(&self, other: &ExactValue) -> Option<Rational> {
        if self.unit != other.unit || other.is_zero() {
            return None;
        }
        Some(Rational::from(&self.ratio / &other.ratio))
    }

    pub fn mul_pow2(&self, k: u32) -> ExactValue {
        ExactValue {
            ratio: Rational::from(&self.ratio << k),
            unit: self.unit,
        }
    }

    pub fn add(&self, other: &ExactValue) -> Option<ExactValue> {
        if self.unit != other.unit {
            if self.is_zero() {
                return Some(other.clone());
            }
            if other.is_zero() {
                return Some(self.clone());
            }
            return None;
        }
        Some(ExactValue {
            ratio: Rational::from(&self.ratio + &other.ratio),
            unit: self.unit,
        })
    }

    pub fn mul_rational(&self, k: &Rational) -> ExactValue {
        ExactValue {
            ratio: Rational::from(&self.ratio * k),
            unit: self.unit,
        }
    }

    pub fn neg(&self) -> ExactValue {
        ExactValue {
            ratio: Rational::from(-&self.ratio),
            unit: self.unit,
        }
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Unit::One => write!(f, "{}", self.ratio),
            Unit::Pi => write!(f, "{}pi", self.ratio),
        }
    }
}

/// A point: rounded value plus an optional exact tag.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    value: BigReal,
    exact: Option<ExactValue>,
}

impl Scalar {
    pub fn from_real(value: BigReal) -> Self {
        Scalar { value, exact: None }
    }

    pub fn from_exact(exact: ExactValue, ctx: &PrecisionContext) -> Self {
        Scalar {
            value: exact.to_real(ctx.bits()),
            exact: Some(exact),
        }
    }

    pub fn from_rational(ratio: Rational, ctx: &PrecisionContext) -> Self {
        Self::from_exact(ExactValue::rational(ratio), ctx)
    }

    pub fn from_i64(v: i64, ctx: &PrecisionContext) -> Self {
        Self::from_rational(Rational::from(v), ctx)
    }

    /// `p/q`, exact.
    pub fn ratio(p: i64, q: u64, ctx: &PrecisionContext) -> Self {
        Self::from_rational(Rational::from((p, q)), ctx)
    }

    pub fn value(&self) -> &BigReal {
        &self.value
    }

    pub fn exact(&self) -> Option<&ExactValue> {
        self.exact.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Exact tag, or the exact binary value of the rounded float.
    pub fn exact_or_binary(&self) -> ExactValue {
        match &self.exact {
            Some(e) => e.clone(),
            None => ExactValue::rational(
                self.value
                    .to_rational()
                    .expect("finite scalar has a rational value"),
            ),
        }
    }

    /// `self + other`, keeping the exact tag when both sides have one.
    pub fn add(&self, other: &Scalar, ctx: &PrecisionContext) -> Scalar {
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            if let Some(sum) = a.add(b) {
                return Scalar::from_exact(sum, ctx);
            }
        }
        Scalar::from_real(ctx.real(&self.value + &other.value))
    }

    pub fn sub(&self, other: &Scalar, ctx: &PrecisionContext) -> Scalar {
        self.add(&other.neg(), ctx)
    }

    pub fn neg(&self) -> Scalar {
        Scalar {
            value: -self.value.clone(),
            exact: self.exact.as_ref().map(ExactValue::neg),
        }
    }

    /// `k · self` for rational `k`.
    pub fn mul_rational(&self, k: &Rational, ctx: &PrecisionContext) -> Scalar {
        match &self.exact {
            Some(e) => Scalar::from_exact(e.mul_rational(k), ctx),
            None => Scalar::from_real(ctx.real(&self.value * k)),
        }
    }

    pub fn with_context(&self, ctx: &PrecisionContext) -> Scalar {
        match &self.exact {
            Some(e) => Scalar::from_exact(e.clone(), ctx),
            None => Scalar::from_real(ctx.real(&self.value)),
        }
    }

    /// Source-like text: the exact tag when present, else the decimal value.
    pub fn label(&self) -> String {
        match &self.exact {
            Some(e) => e.to_string(),
            None => format_real(&self.value),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Parses a point in the scalar grammar.
///
/// Accepted forms: `[-]digits[.digits][e[-]digits]`, `[-]digits/digits`,
/// either optionally followed by `pi` or `*pi`, plus `pi`, `-pi` and
/// `pi/digits`. Rational and π forms keep an exact tag; decimal literals are
/// tagged with the exact rational they denote.
pub fn parse_scalar(text: &str, ctx: &PrecisionContext) -> Result<Scalar> {
    let exact = parse_exact(text)?;
    match exact {
        Parsed::Exact(e) => Ok(Scalar::from_exact(e, ctx)),
        Parsed::Rounded(text) => {
            let v = Float::parse(&text).map_err(|_| Error::MalformedScalar(text.clone()))?;
            Ok(Scalar::from_real(Float::with_val(ctx.bits(), v)))
        }
    }
}

enum Parsed {
    Exact(ExactValue),
    // decimal whose exponent is too large to tag exactly
    Rounded(String),
}

fn parse_exact(text: &str) -> Result<Parsed> {
    let s = text.trim();
    let malformed = || Error::MalformedScalar(text.to_string());
    if s.is_empty() {
        return Err(malformed());
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let sign = |r: Rational| if neg { -r } else { r };

    if let Some(rest) = body.strip_prefix("pi") {
        let ratio = if rest.is_empty() {
            Rational::from(1)
        } else if let Some(q) = rest.strip_prefix('/') {
            let q = parse_digits(q).ok_or_else(malformed)?;
            if q == 0 {
                return Err(Error::ZeroDenominator(text.to_string()));
            }
            Rational::from((Integer::from(1), q))
        } else {
            return Err(malformed());
        };
        return Ok(Parsed::Exact(ExactValue::pi_multiple(sign(ratio))));
    }

    let (number, pi) = match body.strip_suffix("pi") {
        Some(n) => (n.strip_suffix('*').unwrap_or(n), true),
        None => (body, false),
    };
    if number.is_empty() || number.starts_with('-') {
        return Err(malformed());
    }

    let ratio = if let Some((p, q)) = number.split_once('/') {
        let p = parse_digits(p).ok_or_else(malformed)?;
        let q = parse_digits(q).ok_or_else(malformed)?;
        if q == 0 {
            return Err(Error::ZeroDenominator(text.to_string()));
        }
        Rational::from((p, q))
    } else {
        match parse_decimal(number).ok_or_else(malformed)? {
            Some(r) => r,
            None => {
                if pi {
                    return Err(malformed());
                }
                Float::parse(s).map_err(|_| malformed())?;
                return Ok(Parsed::Rounded(s.to_string()));
            }
        }
    };
    let ratio = sign(ratio);
    Ok(Parsed::Exact(if pi {
        ExactValue::pi_multiple(ratio)
    } else {
        ExactValue::rational(ratio)
    }))
}

fn parse_digits(s: &str) -> Option<Integer> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Integer::from_str_radix(s, 10).ok()
}

/// `Some(Some(r))` for a well-formed decimal, `Some(None)` when the exponent
/// is too large to tag, `None` when malformed.
fn parse_decimal(s: &str) -> Option<Option<Rational>> {
    let (mantissa, exponent) = match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let (eneg, edigits) = match e.strip_prefix('-') {
                Some(d) => (true, d),
                None => (false, e),
            };
            if edigits.is_empty() || !edigits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let value: i64 = match edigits.parse::<i64>() {
                Ok(v) => v,
                Err(_) => return Some(None),
            };
            (m, if eneg { -value } else { value })
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => {
            if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            (i, f)
        }
        None => (mantissa, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let scale = exponent - frac_part.len() as i64;
    if scale.abs() > MAX_EXACT_DECIMAL_EXPONENT {
        return Some(None);
    }
    let digits = Integer::from_str_radix(&format!("{int_part}{frac_part}"), 10).ok()?;
    let ten = Integer::from(10);
    let r = if scale >= 0 {
        Rational::from(digits * ten.pow(scale as u32))
    } else {
        Rational::from((digits, ten.pow((-scale) as u32)))
    };
    Some(Some(r))
}

/// Decimal digits needed for a bit-exact round trip at `bits` precision.
pub fn round_trip_digits(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
}

/// Shortest-form decimal text that parses back to the same bits at the
/// value's own precision.
pub fn format_real(v: &BigReal) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v.is_sign_negative() { "-inf" } else { "inf" }.to_string();
    }
    if v.is_zero() {
        return "0".to_string();
    }
    let raw = v.to_string_radix(10, Some(round_trip_digits(v.prec())));
    trim_decimal(&raw)
}

fn trim_decimal(raw: &str) -> String {
    let (mantissa, exponent) = match raw.split_once('e') {
        Some((m, e)) => (m, Some(e)),
        None => (raw, None),
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    match exponent {
        Some(e) => format!("{mantissa}e{e}"),
        None => mantissa.to_string(),
    }
}

/// Value text with its precision annotation, e.g. `2.718… [256 bits]`.
pub fn format_annotated(v: &BigReal) -> String {
    format!("{} [{} bits]", format_real(v), v.prec())
}

/// Inverse of [`format_real`]; also accepts `inf`, `-inf` and `nan`.
pub fn parse_real(text: &str, bits: u32) -> Result<BigReal> {
    let malformed = || Error::MalformedScalar(text.to_string());
    let t = text.trim();
    match t {
        "inf" => return Ok(Float::with_val(bits, rug::float::Special::Infinity)),
        "-inf" => return Ok(Float::with_val(bits, rug::float::Special::NegInfinity)),
        "nan" => return Ok(Float::with_val(bits, rug::float::Special::Nan)),
        _ => {}
    }
    let incomplete = Float::parse(t).map_err(|_| malformed())?;
    Ok(Float::with_val(bits, incomplete))
}

/// `n!` as an exact integer.
pub fn factorial(n: usize) -> Integer {
    Integer::from(Integer::factorial(n as u32))
}

/// Integer power with a single rounding.
pub fn powi(base: &BigReal, n: usize, prec: u32) -> BigReal {
    Float::with_val(prec, base.pow(n as u32))
}
