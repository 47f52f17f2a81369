//! Function catalog: descriptors, jet generators and dyadic point detection.

mod bump;
mod lacunary;
mod spec;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::numerics::{BigComplex, BigReal, ExactValue, PrecisionContext, Scalar, Unit};

pub use bump::bump_jet;
pub use spec::{BumpKind, BumpSeries, FunctionSpec, LacunaryBase, Sharpness, Weights};

/// Resource limits for catalog evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Order cap for the outer-series families.
    pub max_order: usize,
    /// Order cap for closed-form functions.
    pub max_closed_form_order: usize,
    /// Order cap for the `2^m` lacunary series.
    pub lacunary_max_order: usize,
    /// Largest number of outer series terms summed before giving up.
    pub max_outer_terms: usize,
    /// Sample points per period for the derivative bounds of `u`.
    pub bound_samples: usize,
    /// Multiplier applied to sampled derivative maxima.
    pub bound_safety: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_order: 128,
            max_closed_form_order: 4096,
            lacunary_max_order: 24,
            max_outer_terms: 1 << 26,
            bound_samples: 4096,
            bound_safety: 4,
        }
    }
}

/// Certificate for a truncated outer series.
///
/// `coefficient_tails[k]` majorizes the discarded contribution to `c_k`;
/// `tail_bound` is the largest of these relative to the absolute mass that
/// was summed. The certificate is honest when `tail_bound <= target`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTruncation {
    pub outer_terms: usize,
    pub tail_bound: BigReal,
    pub target: BigReal,
    pub coefficient_tails: Vec<BigReal>,
    pub bound_safety: u32,
    /// Every discarded term vanishes identically (integer branch).
    pub exact_tail: bool,
}

impl SeriesTruncation {
    pub fn certified(&self) -> bool {
        self.tail_bound <= self.target
    }

    fn exact(outer_terms: usize, order: usize, ctx: &PrecisionContext, safety: u32) -> Self {
        SeriesTruncation {
            outer_terms,
            tail_bound: Float::with_val(64, 0),
            target: target_for(ctx),
            coefficient_tails: vec![Float::with_val(64, 0); order + 1],
            bound_safety: safety,
            exact_tail: true,
        }
    }
}

pub(crate) fn target_for(ctx: &PrecisionContext) -> BigReal {
    Float::with_val(64, 1) >> ctx.working_bits()
}

/// A jet together with its truncation certificate, if the function is an
/// infinite outer series.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub jet: Jet,
    pub truncation: Option<SeriesTruncation>,
}

/// Jet generator for every catalog function.
///
/// Holds the limits and a cache of sampled derivative bounds, which are
/// independent of precision and point. Safe to share between threads.
#[derive(Debug, Default)]
pub struct Catalog {
    limits: Limits,
    bounds: Mutex<HashMap<(BumpKind, Sharpness), Arc<Vec<f64>>>>,
}

impl Catalog {
    pub fn new(limits: Limits) -> Self {
        Catalog {
            limits,
            bounds: Mutex::new(HashMap::new()),
        }
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn jet_of(
        &self,
        spec: &FunctionSpec,
        t: &Scalar,
        order: usize,
        ctx: &PrecisionContext,
    ) -> Result<Jet> {
        Ok(self.evaluate(spec, t, order, ctx)?.jet)
    }

    pub fn evaluate(
        &self,
        spec: &FunctionSpec,
        t: &Scalar,
        order: usize,
        ctx: &PrecisionContext,
    ) -> Result<Evaluation> {
        let series = matches!(spec, FunctionSpec::BumpSeries(_) | FunctionSpec::Lacunary(_));
        let cap = if series {
            self.limits.max_order
        } else {
            self.limits.max_closed_form_order
        };
        if order > cap {
            return Err(Error::OrderCap {
                order,
                cap,
                reason: if series {
                    "outer-series order limit"
                } else {
                    "closed-form order limit"
                },
            });
        }
        let x = t.value();
        let plain = |jet: Jet| Ok(Evaluation {
            jet,
            truncation: None,
        });
        match spec {
            FunctionSpec::Exp => plain(Jet::identity(x, order, ctx).exp()),
            FunctionSpec::Sin => plain(Jet::identity(x, order, ctx).sin_cos().0),
            FunctionSpec::Cos => plain(Jet::identity(x, order, ctx).sin_cos().1),
            FunctionSpec::Poly(c) => plain(poly_jet(c, t, order, ctx)),
            FunctionSpec::RationalOnePlus => {
                let at_pole = match t.exact() {
                    Some(e) => e.unit() == Unit::One && *e.ratio() == -1,
                    None => *x == -1,
                };
                if at_pole {
                    return Err(Error::Pole);
                }
                // c_n = (-1)^n r^(n+1) with r = 1/(1+t); powers at working
                // precision keep every coefficient within an ulp.
                let wide = ctx.working_bits();
                let r = Float::with_val(wide, Float::with_val(wide, x + 1u32).recip_ref());
                let mut p = r.clone();
                let mut coeffs = Vec::with_capacity(order + 1);
                for n in 0..=order {
                    let c = if n % 2 == 0 { p.clone() } else { -p.clone() };
                    coeffs.push(BigComplex::from_real(c));
                    p *= &r;
                }
                plain(Jet::from_coeffs(x, coeffs, ctx)?)
            }
            FunctionSpec::FlatExp(s) => plain(flat_exp_jet(*s, x, order, ctx)?),
            FunctionSpec::BumpSeries(b) => {
                let (jet, tr) = self.series_family_jet(b, t, order, ctx)?;
                Ok(Evaluation {
                    jet,
                    truncation: Some(tr),
                })
            }
            FunctionSpec::Lacunary(base) => {
                let (jet, tr) = self.lacunary_jet(*base, t, order, ctx)?;
                Ok(Evaluation {
                    jet,
                    truncation: Some(tr),
                })
            }
        }
    }

    /// Jet of `Σ a_n u(2^n x)` at `t` with an automatically chosen number
    /// of outer terms.
    pub fn series_family_jet(
        &self,
        spec: &BumpSeries,
        t: &Scalar,
        order: usize,
        ctx: &PrecisionContext,
    ) -> Result<(Jet, SeriesTruncation)> {
        bump::series_family_jet(self, spec, t, order, ctx, None)
    }

    /// Same series summed over exactly `outer_terms` terms (fewer only if the
    /// remaining terms vanish identically). The certificate may then exceed
    /// its target.
    pub fn series_family_jet_fixed(
        &self,
        spec: &BumpSeries,
        t: &Scalar,
        order: usize,
        ctx: &PrecisionContext,
        outer_terms: usize,
    ) -> Result<(Jet, SeriesTruncation)> {
        bump::series_family_jet(self, spec, t, order, ctx, Some(outer_terms))
    }

    pub fn lacunary_jet(
        &self,
        base: LacunaryBase,
        t: &Scalar,
        order: usize,
        ctx: &PrecisionContext,
    ) -> Result<(Jet, SeriesTruncation)> {
        lacunary::lacunary_jet(&self.limits, base, t, order, ctx, None)
    }

    pub fn lacunary_jet_fixed(
        &self,
        base: LacunaryBase,
        t: &Scalar,
        order: usize,
        ctx: &PrecisionContext,
        outer_terms: usize,
    ) -> Result<(Jet, SeriesTruncation)> {
        lacunary::lacunary_jet(&self.limits, base, t, order, ctx, Some(outer_terms))
    }

    /// `log2 sup |c_k|` of the base bump over one period, `k = 0..=order`.
    fn base_bounds(&self, kind: BumpKind, s: Sharpness, order: usize) -> Arc<Vec<f64>> {
        let key = (kind, s);
        if let Some(b) = self.bounds.lock().expect("bounds cache poisoned").get(&key) {
            if b.len() > order {
                return Arc::clone(b);
            }
        }
        // Sampled outside the lock; a racing thread computes the same table.
        // Rounding the order up spares rising orders a resample each time.
        let sampled = order.next_multiple_of(16).min(self.limits.max_order);
        let table = Arc::new(bump::sample_bounds(kind, s, sampled.max(order), self.limits.bound_samples));
        let mut cache = self.bounds.lock().expect("bounds cache poisoned");
        let entry = cache.entry(key).or_insert_with(|| Arc::clone(&table));
        if entry.len() < table.len() {
            *entry = Arc::clone(&table);
        }
        table
    }
}

/// Convenience wrapper using default limits.
pub fn jet_of(spec: &FunctionSpec, t: &Scalar, order: usize, ctx: &PrecisionContext) -> Result<Jet> {
    Catalog::default().jet_of(spec, t, order, ctx)
}

/// Taylor shift `c_n = Σ_{k≥n} p_k C(k,n) t^(k-n)`, exact for rational `t`.
fn poly_jet(p: &[Rational], t: &Scalar, order: usize, ctx: &PrecisionContext) -> Jet {
    let x = t.value();
    let exact = t.exact().filter(|e| e.unit() == Unit::One || e.is_zero());
    let coeffs = (0..=order)
        .map(|n| {
            if n >= p.len() {
                return BigComplex::zero(ctx.bits());
            }
            match exact {
                Some(e) => {
                    let mut acc = Rational::new();
                    let mut pow = Rational::from(1);
                    for k in n..p.len() {
                        let binom = Integer::from(Integer::binomial_u(k as u32, n as u32));
                        acc += Rational::from(&p[k] * &pow) * binom;
                        pow *= e.ratio();
                    }
                    BigComplex::from_real(ctx.real(&acc))
                }
                None => {
                    let wide = ctx.working_bits();
                    let mut acc = Float::with_val(wide, 0);
                    let mut pow = Float::with_val(wide, 1);
                    for k in n..p.len() {
                        let binom = Integer::from(Integer::binomial_u(k as u32, n as u32));
                        let term = Float::with_val(wide, &pow * &p[k]) * binom;
                        acc += term;
                        pow *= x;
                    }
                    BigComplex::from_real(ctx.real(&acc))
                }
            }
        })
        .collect();
    Jet::from_coeffs(x, coeffs, ctx).expect("polynomial coefficients are finite")
}

/// `e^(-1/t^s)`, with the flat branch returning the zero jet at the origin.
fn flat_exp_jet(s: Sharpness, x: &BigReal, order: usize, ctx: &PrecisionContext) -> Result<Jet> {
    if x.is_zero() {
        return Ok(Jet::zero(x, order, ctx));
    }
    let wide = ctx.widened();
    let id = Jet::identity(x, order, &wide);
    let base = match s {
        Sharpness::One => id,
        Sharpness::Two => id.mul(&id)?,
    };
    let one = Jet::constant_real(x, &wide.real(1), order, &wide);
    let inner = one.div(&base)?.neg().exp();
    Jet::from_coeffs(x, inner.coeffs().to_vec(), ctx)
}

/// Membership of `t` in `{(2m+1)ℓ/2^n : m ∈ Z, n ≥ 0}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dyadic {
    Dyadic { m: Integer, n: u32 },
    NotDyadic,
}

pub fn dyadic_check(t: &Scalar, period: &ExactValue) -> Result<Dyadic> {
    let exact = t.exact().ok_or_else(|| {
        Error::ExactnessRequired(format!("dyadic check needs an exact point, got {}", t))
    })?;
    if period.ratio().cmp0() != std::cmp::Ordering::Greater {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let Some(q) = exact.ratio_to(period) else {
        return Ok(Dyadic::NotDyadic);
    };
    let den = q.denom();
    if q.cmp0() == std::cmp::Ordering::Equal || !den.is_power_of_two() {
        return Ok(Dyadic::NotDyadic);
    }
    let num = q.numer();
    if num.is_even() {
        return Ok(Dyadic::NotDyadic);
    }
    let n = den.significant_bits() - 1;
    let m = Integer::from(num - 1u32) >> 1u32;
    Ok(Dyadic::Dyadic { m, n })
}
