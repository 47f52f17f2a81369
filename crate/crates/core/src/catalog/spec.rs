//! Function descriptors and their text grammar.
//!
//! ```text
//! exp | sin | cos | poly:c0,c1,... | rational1p | flatexp:s=<1|2>
//! bumpseries:a=<invfact|doubleexp>,s=<1|2>,l=<period>,u=<floor|sin>
//! lacunary:base=<2|half>
//! ```
//!
//! Bump-series keys may appear in any order and default to `a=invfact`,
//! `s=2`, `u=floor`, with `l=1` for the floor bump and `l=2pi` for the sine
//! bump. Display always prints the canonical, fully specified form.

use std::fmt;
use std::str::FromStr;

use rug::Rational;

use crate::error::{Error, Result};
use crate::numerics::{make_context, parse_scalar, ExactValue, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sharpness {
    One,
    Two,
}

impl Sharpness {
    pub fn exponent(self) -> usize {
        match self {
            Sharpness::One => 1,
            Sharpness::Two => 2,
        }
    }
}

/// Outer weights `a_n` of a bump series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weights {
    /// `a_n = 1/n!`
    InvFactorial,
    /// `a_n = 2^(-2^n)`
    DoubleExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BumpKind {
    /// `u(x) = β(frac(x/ℓ))` with `β(y) = α(y)·α(1-y)`.
    Floor,
    /// `u(x) = α(sin(2πx/ℓ))`; with `ℓ = 2π` this is `α(sin x)`.
    Sin,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BumpSeries {
    pub weights: Weights,
    pub s: Sharpness,
    pub period: ExactValue,
    pub kind: BumpKind,
}

impl BumpSeries {
    pub fn new(weights: Weights, s: Sharpness, period: ExactValue, kind: BumpKind) -> Result<Self> {
        let spec = BumpSeries {
            weights,
            s,
            period,
            kind,
        };
        spec.validate().map_err(|reason| Error::InvalidSpec {
            text: spec.to_string(),
            reason,
        })?;
        Ok(spec)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.period.ratio().cmp0() != std::cmp::Ordering::Greater {
            return Err("period must be positive".into());
        }
        if self.kind == BumpKind::Sin && self.s == Sharpness::One {
            return Err("the sine bump needs s=2 (exp(-1/sin x) is unbounded)".into());
        }
        Ok(())
    }

    pub fn default_period(kind: BumpKind) -> ExactValue {
        match kind {
            BumpKind::Floor => ExactValue::rational(Rational::from(1)),
            BumpKind::Sin => ExactValue::pi_multiple(Rational::from(2)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LacunaryBase {
    /// Frequencies `2^m`, `m ≥ 0`.
    Two,
    /// Frequencies `2^-m`, `m ≥ 1`.
    Half,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FunctionSpec {
    Exp,
    Sin,
    Cos,
    /// Coefficients `c0 + c1 t + c2 t² + …`.
    Poly(Vec<Rational>),
    /// `1/(1+t)`.
    RationalOnePlus,
    /// `e^(-1/t^s)`, zero at the origin.
    FlatExp(Sharpness),
    BumpSeries(BumpSeries),
    Lacunary(LacunaryBase),
}

impl FunctionSpec {
    pub fn parse(text: &str) -> Result<FunctionSpec> {
        let invalid = |reason: &str| Error::InvalidSpec {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = text.trim();
        let (head, args) = match trimmed.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (trimmed, None),
        };
        let no_args = |spec: FunctionSpec| match args {
            None => Ok(spec),
            Some(_) => Err(invalid("takes no parameters")),
        };
        match head {
            "exp" => no_args(FunctionSpec::Exp),
            "sin" => no_args(FunctionSpec::Sin),
            "cos" => no_args(FunctionSpec::Cos),
            "rational1p" => no_args(FunctionSpec::RationalOnePlus),
            "poly" => {
                let args = args.ok_or_else(|| invalid("missing coefficient list"))?;
                let coeffs = args
                    .split(',')
                    .map(|c| parse_rational(c.trim()).map_err(|r| invalid(&r)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(FunctionSpec::Poly(coeffs))
            }
            "flatexp" => {
                let kv = key_values(args.unwrap_or(""), &["s"]).map_err(|r| invalid(&r))?;
                let s = match kv[0] {
                    Some(v) => parse_sharpness(v).map_err(|r| invalid(&r))?,
                    None => return Err(invalid("missing s")),
                };
                Ok(FunctionSpec::FlatExp(s))
            }
            "bumpseries" => {
                let kv = key_values(args.unwrap_or(""), &["a", "s", "l", "u"])
                    .map_err(|r| invalid(&r))?;
                let weights = match kv[0] {
                    None | Some("invfact") => Weights::InvFactorial,
                    Some("doubleexp") => Weights::DoubleExp,
                    Some(other) => return Err(invalid(&format!("unknown weights `{other}`"))),
                };
                let s = match kv[1] {
                    None => Sharpness::Two,
                    Some(v) => parse_sharpness(v).map_err(|r| invalid(&r))?,
                };
                let kind = match kv[3] {
                    None | Some("floor") => BumpKind::Floor,
                    Some("sin") => BumpKind::Sin,
                    Some(other) => return Err(invalid(&format!("unknown bump `{other}`"))),
                };
                let period = match kv[2] {
                    None => BumpSeries::default_period(kind),
                    Some(v) => parse_period(v).map_err(|r| invalid(&r))?,
                };
                let spec = BumpSeries {
                    weights,
                    s,
                    period,
                    kind,
                };
                spec.validate().map_err(|r| invalid(&r))?;
                Ok(FunctionSpec::BumpSeries(spec))
            }
            "lacunary" => {
                let kv = key_values(args.unwrap_or(""), &["base"]).map_err(|r| invalid(&r))?;
                match kv[0] {
                    Some("2") => Ok(FunctionSpec::Lacunary(LacunaryBase::Two)),
                    Some("half") => Ok(FunctionSpec::Lacunary(LacunaryBase::Half)),
                    Some(other) => Err(invalid(&format!("unknown base `{other}`"))),
                    None => Err(invalid("missing base")),
                }
            }
            _ => Err(invalid("unknown function")),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, FunctionSpec::Poly(_))
    }

    /// Entire, or analytic on all of its domain.
    pub fn is_analytic(&self) -> bool {
        matches!(
            self,
            FunctionSpec::Exp
                | FunctionSpec::Sin
                | FunctionSpec::Cos
                | FunctionSpec::Poly(_)
                | FunctionSpec::RationalOnePlus
                | FunctionSpec::Lacunary(LacunaryBase::Half)
        )
    }

    /// Complex-valued functions.
    pub fn is_complex(&self) -> bool {
        matches!(self, FunctionSpec::Lacunary(_))
    }

    /// Degree of a polynomial with trailing zeros dropped (`None` for the
    /// zero polynomial or non-polynomials).
    pub fn degree(&self) -> Option<usize> {
        match self {
            FunctionSpec::Poly(c) => c.iter().rposition(|x| x.cmp0() != std::cmp::Ordering::Equal),
            _ => None,
        }
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionSpec::parse(s)
    }
}

impl fmt::Display for BumpSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.weights {
            Weights::InvFactorial => "invfact",
            Weights::DoubleExp => "doubleexp",
        };
        let u = match self.kind {
            BumpKind::Floor => "floor",
            BumpKind::Sin => "sin",
        };
        write!(
            f,
            "bumpseries:a={a},s={},l={},u={u}",
            self.s.exponent(),
            self.period
        )
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Exp => write!(f, "exp"),
            FunctionSpec::Sin => write!(f, "sin"),
            FunctionSpec::Cos => write!(f, "cos"),
            FunctionSpec::Poly(c) => {
                let list: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "poly:{}", list.join(","))
            }
            FunctionSpec::RationalOnePlus => write!(f, "rational1p"),
            FunctionSpec::FlatExp(s) => write!(f, "flatexp:s={}", s.exponent()),
            FunctionSpec::BumpSeries(b) => write!(f, "{b}"),
            FunctionSpec::Lacunary(LacunaryBase::Two) => write!(f, "lacunary:base=2"),
            FunctionSpec::Lacunary(LacunaryBase::Half) => write!(f, "lacunary:base=half"),
        }
    }
}

/// Splits `k=v,k=v` against an allowed key list, rejecting unknown and
/// repeated keys.
fn key_values<'a>(
    args: &'a str,
    keys: &[&str],
) -> std::result::Result<Vec<Option<&'a str>>, String> {
    let mut out = vec![None; keys.len()];
    if args.trim().is_empty() {
        return Ok(out);
    }
    for item in args.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{item}`"))?;
        let (k, v) = (k.trim(), v.trim());
        let idx = keys
            .iter()
            .position(|x| *x == k)
            .ok_or_else(|| format!("unknown key `{k}`"))?;
        if out[idx].replace(v).is_some() {
            return Err(format!("repeated key `{k}`"));
        }
    }
    Ok(out)
}

fn parse_sharpness(v: &str) -> std::result::Result<Sharpness, String> {
    match v {
        "1" => Ok(Sharpness::One),
        "2" => Ok(Sharpness::Two),
        _ => Err(format!("s must be 1 or 2, got `{v}`")),
    }
}

fn parse_exact(v: &str) -> std::result::Result<ExactValue, String> {
    // Only the tag matters here, so any legal context will do.
    let ctx = make_context(64, 0).expect("64 bits is a legal context");
    let s = parse_scalar(v, &ctx).map_err(|e| e.to_string())?;
    s.exact()
        .cloned()
        .ok_or_else(|| format!("`{v}` is not an exact value"))
}

fn parse_rational(v: &str) -> std::result::Result<Rational, String> {
    let e = parse_exact(v)?;
    if e.unit() != Unit::One && !e.is_zero() {
        return Err(format!("coefficient `{v}` must be rational"));
    }
    Ok(e.ratio().clone())
}

fn parse_period(v: &str) -> std::result::Result<ExactValue, String> {
    let e = parse_exact(v)?;
    if e.ratio().cmp0() != std::cmp::Ordering::Greater {
        return Err("period must be positive".into());
    }
    Ok(e)
}
