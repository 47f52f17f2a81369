//! Bump functions and the outer series `Σ a_n u(2^n x)`.

use std::collections::HashMap;

use rayon::prelude::*;
use rug::{Float, Rational};

use super::spec::{BumpKind, BumpSeries, Sharpness, Weights};
use super::{Catalog, SeriesTruncation};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::numerics::{log2_abs, make_context, BigComplex, BigReal, ExactValue, PrecisionContext, Scalar, Unit};

/// Precision used when sampling derivative bounds.
const BOUND_BITS: u32 = 128;

/// `α(z) = exp(-1/z^s)` composed with a jet.
fn alpha(z: &Jet, s: Sharpness) -> Result<Jet> {
    let zs = match s {
        Sharpness::One => z.clone(),
        Sharpness::Two => z.mul(z)?,
    };
    let one = Jet::constant_real(z.center(), &z.ctx().real(1), z.order(), z.ctx());
    Ok(one.div(&zs)?.neg().exp())
}

/// `β(y) = α(y)·α(1-y)` at `y ∈ (0, 1)`.
fn beta_jet(s: Sharpness, y: &BigReal, order: usize, ctx: &PrecisionContext) -> Result<Jet> {
    let id = Jet::identity(y, order, ctx);
    let one = Jet::constant_real(y, &ctx.real(1), order, ctx);
    let left = alpha(&id, s)?;
    let right = alpha(&one.sub(&id)?, s)?;
    left.mul(&right)
}

/// `α(sin y)` at `y ∈ (0, π)`.
fn sin_base_jet(s: Sharpness, y: &BigReal, order: usize, ctx: &PrecisionContext) -> Result<Jet> {
    let (sin, _) = Jet::identity(y, order, ctx).sin_cos();
    alpha(&sin, s)
}

fn base_jet(kind: BumpKind, s: Sharpness, y: &BigReal, order: usize, ctx: &PrecisionContext) -> Result<Jet> {
    match kind {
        BumpKind::Floor => beta_jet(s, y, order, ctx),
        BumpKind::Sin => sin_base_jet(s, y, order, ctx),
    }
}

/// Position of a point inside one period of the base bump.
enum Phase {
    /// On a zero of `u`: every derivative vanishes.
    Zero,
    Exact(Rational),
    Approx(BigReal),
}

/// Fractional part of `mult · 2^n · t / ℓ`.
fn phase(
    t: &ExactValue,
    period: &ExactValue,
    n: u32,
    mult: u32,
    ctx: &PrecisionContext,
) -> Result<Phase> {
    if t.is_zero() {
        return Ok(Phase::Zero);
    }
    if let Some(q) = t.ratio_to(period) {
        let r = (q << n) * mult;
        let frac = &r - Rational::from(r.floor_ref());
        return Ok(if frac.cmp0() == std::cmp::Ordering::Equal {
            Phase::Zero
        } else {
            Phase::Exact(frac)
        });
    }
    // Incommensurable with the period: carry enough bits that the fraction
    // keeps full working precision after the shift.
    let wide = ctx.working_bits();
    let mag = (log2_abs(&t.to_real(64)) - log2_abs(&period.to_real(64))).max(0.0) as u32;
    let prec = wide + n + mag + 64;
    let q = Float::with_val(prec, t.to_real(prec) / period.to_real(prec)) * mult;
    let q = q << n;
    let frac = Float::with_val(prec, &q - Float::with_val(prec, q.floor_ref()));
    near_integer_guard(&frac, ctx, || format!("{} (phase {})", t, n))?;
    Ok(Phase::Approx(Float::with_val(wide, frac)))
}

/// Rejects fractions within `2^-(bits-8)` of 0 or 1.
fn near_integer_guard(frac: &BigReal, ctx: &PrecisionContext, what: impl Fn() -> String) -> Result<()> {
    let eps = Float::with_val(64, 1) >> (ctx.bits() - 8);
    let upper = Float::with_val(frac.prec(), 1 - frac);
    if *frac < eps || upper < eps {
        return Err(Error::AmbiguousBranch(what()));
    }
    Ok(())
}

/// Per-order factor `g^k` with `u^(k)(x) = g^k · base^(k)(phase)`.
fn derivative_scales(kind: BumpKind, period: &ExactValue, order: usize, wide: u32) -> Vec<BigReal> {
    let g = match (kind, period.unit()) {
        (BumpKind::Floor, Unit::One) => Float::with_val(wide, Rational::from(period.ratio().recip_ref())),
        (BumpKind::Floor, Unit::Pi) => Float::with_val(wide, 1) / period.to_real(wide + 32),
        (BumpKind::Sin, Unit::Pi) => Float::with_val(wide, Rational::from(2) / period.ratio()),
        (BumpKind::Sin, Unit::One) => {
            let two_pi = ExactValue::pi_multiple(Rational::from(2)).to_real(wide + 32);
            Float::with_val(wide, two_pi / Float::with_val(wide + 32, period.ratio()))
        }
    };
    let mut out = Vec::with_capacity(order + 1);
    let mut acc = Float::with_val(wide, 1);
    for _ in 0..=order {
        out.push(acc.clone());
        acc *= &g;
    }
    out
}

fn phase_multiplier(kind: BumpKind) -> u32 {
    match kind {
        BumpKind::Floor => 1,
        BumpKind::Sin => 2,
    }
}

/// Coefficients of `u` at a phase, at working precision.
fn u_coeffs(
    kind: BumpKind,
    s: Sharpness,
    phase: &Phase,
    scales: &[BigReal],
    wctx: &PrecisionContext,
) -> Result<Vec<BigComplex>> {
    let order = scales.len() - 1;
    let wide = wctx.bits();
    let y = match phase {
        Phase::Zero => return Ok(vec![BigComplex::zero(wide); order + 1]),
        Phase::Exact(r) => Float::with_val(wide, r),
        Phase::Approx(f) => f.clone(),
    };
    let y = match kind {
        BumpKind::Floor => y,
        BumpKind::Sin => Float::with_val(wide, y * wctx.pi()),
    };
    let jet = base_jet(kind, s, &y, order, wctx)?;
    Ok(jet
        .coeffs()
        .iter()
        .zip(scales)
        .map(|(c, g)| c.scale(g, wide))
        .collect())
}

/// Jet of the floor bump `u(x) = β(x - ⌊x⌋)` at `x`.
///
/// Exact points decide the integer branch exactly; untagged points within
/// `2^-(bits-8)` of an integer are rejected as ambiguous.
pub fn bump_jet(s: Sharpness, x: &Scalar, order: usize, ctx: &PrecisionContext) -> Result<Jet> {
    let wctx = ctx.widened();
    let ph = match x.exact() {
        Some(e) => phase(e, &ExactValue::rational(Rational::from(1)), 0, 1, ctx)?,
        None => {
            let v = x.value();
            let frac = Float::with_val(v.prec(), v - Float::with_val(v.prec(), v.floor_ref()));
            if frac.is_zero() {
                return Err(Error::AmbiguousBranch(x.to_string()));
            }
            near_integer_guard(&frac, ctx, || x.to_string())?;
            Phase::Approx(Float::with_val(wctx.bits(), frac))
        }
    };
    let scales = vec![Float::with_val(wctx.bits(), 1); order + 1];
    let coeffs = u_coeffs(BumpKind::Floor, s, &ph, &scales, &wctx)?;
    Jet::from_coeffs(x.value(), coeffs, ctx)
}

/// `log2 sup |c_k|` of the base bump, `k = 0..=order`, from `samples` points
/// per period. Both bases are symmetric about mid-period, so only the first
/// half is sampled.
pub(super) fn sample_bounds(kind: BumpKind, s: Sharpness, order: usize, samples: usize) -> Vec<f64> {
    let ctx = make_context(BOUND_BITS, 32).expect("legal context");
    let half = (samples / 2).max(1);
    let per_point: Vec<Vec<f64>> = (1..=half)
        .into_par_iter()
        .map(|j| {
            let frac = Float::with_val(BOUND_BITS, Rational::from((j as u64, samples as u64)));
            let y = match kind {
                BumpKind::Floor => frac,
                BumpKind::Sin => Float::with_val(BOUND_BITS, frac * ctx.pi()),
            };
            match base_jet(kind, s, &y, order, &ctx) {
                Ok(jet) => jet.coeffs().iter().map(|c| log2_abs(&c.abs())).collect(),
                Err(_) => vec![f64::NEG_INFINITY; order + 1],
            }
        })
        .collect();
    (0..=order)
        .map(|k| per_point.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// `log2 a_n` and the weight itself at `wide` bits.
struct WeightSeq {
    weights: Weights,
    n: u32,
    log2: f64,
    value: BigReal,
}

impl WeightSeq {
    fn new(weights: Weights, wide: u32) -> Self {
        let (log2, value) = match weights {
            Weights::InvFactorial => (0.0, Float::with_val(wide, 1)),
            Weights::DoubleExp => (-1.0, Float::with_val(wide, 0.5)),
        };
        WeightSeq {
            weights,
            n: 0,
            log2,
            value,
        }
    }

    fn advance(&mut self) {
        self.n += 1;
        match self.weights {
            Weights::InvFactorial => {
                self.log2 -= (self.n as f64).log2();
                self.value /= self.n;
            }
            Weights::DoubleExp => {
                // 2^(-2^n): the exponent doubles.
                let e = 1u64 << self.n.min(62);
                self.log2 = -(e as f64);
                self.value = Float::with_val(self.value.prec(), 1) >> i32::try_from(e).unwrap_or(i32::MAX);
            }
        }
    }
}

/// `log2` of the majorant `Σ_{n≥j} a_n 2^(kn)` for the first discarded index
/// `j`, or `+∞` while the term ratio is not yet below one.
/// `log2` of a geometric majorant of `Σ_{m≥j} a_m 2^(mk)`; `log2_fact_j` is
/// `log2 j!`, maintained by the caller.
fn log2_weight_tail(weights: Weights, k: usize, j: usize, log2_fact_j: f64) -> f64 {
    let k = k as f64;
    let jf = j as f64;
    let (log_first, log_ratio) = match weights {
        Weights::InvFactorial => (k * jf - log2_fact_j, k - (jf + 1.0).log2()),
        Weights::DoubleExp => {
            let pow = 2f64.powi(j.min(1000) as i32);
            (k * jf - pow, k - pow)
        }
    };
    if log_ratio >= -1e-12 {
        return f64::INFINITY;
    }
    log_first - (1.0 - 2f64.powf(log_ratio)).log2()
}

fn exp2_real(log2: f64) -> BigReal {
    if log2 == f64::NEG_INFINITY {
        return Float::with_val(64, 0);
    }
    if log2 == f64::INFINITY {
        return Float::with_val(64, rug::float::Special::Infinity);
    }
    Float::with_val(64, log2).exp2()
}

/// Rough count of outer terms needed at order `k` for the 1/n! weights.
fn invfact_terms_needed(order: usize) -> usize {
    let bits = (order as f64) + std::f64::consts::E.log2();
    if bits >= 62.0 {
        usize::MAX
    } else {
        2f64.powf(bits).ceil() as usize
    }
}

pub(super) fn series_family_jet(
    catalog: &Catalog,
    spec: &BumpSeries,
    t: &Scalar,
    order: usize,
    ctx: &PrecisionContext,
    fixed_terms: Option<usize>,
) -> Result<(Jet, SeriesTruncation)> {
    let limits = catalog.limits();
    if order > limits.max_order {
        return Err(Error::OrderCap {
            order,
            cap: limits.max_order,
            reason: "outer-series order limit",
        });
    }
    let budget = fixed_terms.unwrap_or(limits.max_outer_terms);
    // Dyadic multiples of the period reach the integer branch after a few
    // terms, whatever the order.
    let terminates = t
        .exact()
        .and_then(|e| e.ratio_to(&spec.period))
        .is_some_and(|q| q.denom().is_power_of_two());
    if spec.weights == Weights::InvFactorial && fixed_terms.is_none() && !terminates {
        let needed = invfact_terms_needed(order);
        if needed > limits.max_outer_terms {
            return Err(Error::TruncationBudget {
                order,
                needed,
                limit: limits.max_outer_terms,
            });
        }
    }

    let wctx = ctx.widened();
    let wide = wctx.bits();
    // The rounded value of an untagged point is itself a binary rational.
    let point = t.exact_or_binary();
    let mult = phase_multiplier(spec.kind);
    let scales = derivative_scales(spec.kind, &spec.period, order, wide);
    let target_log2 = -(ctx.working_bits() as f64);

    let mut sums = vec![BigComplex::zero(wide); order + 1];
    let mut mass = vec![f64::NEG_INFINITY; order + 1];
    let mut memo: HashMap<Rational, Vec<BigComplex>> = HashMap::new();
    let mut weight = WeightSeq::new(spec.weights, wide);
    let mut bounds: Option<Vec<f64>> = None;
    let mut tails = vec![f64::INFINITY; order + 1];
    let mut log2_fact = 0.0f64;

    let mut current = phase(&point, &spec.period, 0, mult, ctx)?;
    let mut n: usize = 0;
    let exact_tail = loop {
        if let Phase::Zero = current {
            // Integer branch: this and every later term vanish.
            break true;
        }
        if n >= budget {
            if fixed_terms.is_some() {
                break false;
            }
            return Err(Error::TruncationBudget {
                order,
                needed: n + 1,
                limit: budget,
            });
        }

        let coeffs = match &current {
            Phase::Exact(r) => {
                if !memo.contains_key(r) {
                    let c = u_coeffs(spec.kind, spec.s, &current, &scales, &wctx)?;
                    memo.insert(r.clone(), c);
                }
                memo[r].clone()
            }
            other => u_coeffs(spec.kind, spec.s, other, &scales, &wctx)?,
        };
        for (k, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            // a_n 2^(nk) c_k: the power of two is an exact shift.
            let shift = i32::try_from(n * k).map_err(|_| Error::TruncationBudget {
                order,
                needed: n,
                limit: budget,
            })?;
            let term = c.scale(&weight.value, wide).shl(shift);
            let lt = log2_abs(&term.abs());
            mass[k] = log_add(mass[k], lt);
            sums[k].add_assign_ref(&term);
        }

        let next = phase(&point, &spec.period, (n + 1) as u32, mult, ctx)?;
        let next_is_zero = matches!(next, Phase::Zero);
        n += 1;
        log2_fact += (n as f64).log2();
        weight.advance();
        // A terminating automatic sum is certified by the integer branch, so
        // the sampled bounds are never needed.
        if next_is_zero || (terminates && fixed_terms.is_none()) {
            current = next;
            continue;
        }
        let b = bounds.get_or_insert_with(|| {
            let base = catalog.base_bounds(spec.kind, spec.s, order);
            let safety = (limits.bound_safety as f64).log2();
            (0..=order)
                .map(|k| base[k] + safety + log2_abs(&scales[k]))
                .collect()
        });
        let mut done = true;
        for k in 0..=order {
            tails[k] = log2_weight_tail(spec.weights, k, n, log2_fact) + b[k];
            let reference = if mass[k].is_finite() { mass[k] } else { b[k] };
            if !(tails[k] <= target_log2 + reference) {
                done = false;
            }
        }
        if done && fixed_terms.is_none() {
            break false;
        }
        current = next;
    };

    let truncation = if exact_tail {
        SeriesTruncation::exact(n, order, ctx, limits.bound_safety)
    } else {
        let mut worst = f64::NEG_INFINITY;
        for k in 0..=order {
            let reference = if mass[k].is_finite() {
                mass[k]
            } else {
                bounds.as_ref().map_or(0.0, |b| b[k])
            };
            worst = worst.max(tails[k] - reference);
        }
        SeriesTruncation {
            outer_terms: n,
            tail_bound: exp2_real(worst),
            target: super::target_for(ctx),
            coefficient_tails: tails.iter().map(|l| exp2_real(*l)).collect(),
            bound_safety: limits.bound_safety,
            exact_tail: false,
        }
    };
    let jet = Jet::from_coeffs(t.value(), sums, ctx)?;
    Ok((jet, truncation))
}

/// `log2(2^a + 2^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + 2f64.powf(lo - hi)).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{FunctionSpec, Limits};
    use crate::numerics::parse_scalar;

    fn ctx() -> PrecisionContext {
        make_context(256, 32).unwrap()
    }

    fn rel_err(a: &BigReal, b: &BigReal) -> f64 {
        let d = Float::with_val(a.prec(), a - b);
        (d.abs() / Float::with_val(64, b.abs_ref())).to_f64()
    }

    fn series(text: &str) -> BumpSeries {
        match FunctionSpec::parse(text).unwrap() {
            FunctionSpec::BumpSeries(b) => b,
            _ => unreachable!(),
        }
    }

    #[test]
    fn integer_points_give_zero_jets() {
        let c = ctx();
        for s in [Sharpness::One, Sharpness::Two] {
            let j = bump_jet(s, &Scalar::from_i64(3, &c), 7, &c).unwrap();
            assert!(j.is_identically_zero());
        }
        let near = Scalar::from_real(c.real(3));
        assert!(matches!(
            bump_jet(Sharpness::Two, &near, 2, &c),
            Err(Error::AmbiguousBranch(_))
        ));
    }

    #[test]
    fn bump_value_at_half() {
        let c = ctx();
        let j = bump_jet(Sharpness::Two, &Scalar::ratio(1, 2, &c), 0, &c).unwrap();
        let want = Float::with_val(256, -8).exp();
        assert!(rel_err(&j.coeff(0).re, &want) < 1e-70);
    }

    #[test]
    fn bump_reflection_symmetry() {
        let c = ctx();
        for s in [Sharpness::One, Sharpness::Two] {
            let a = bump_jet(s, &Scalar::ratio(1, 4, &c), 6, &c).unwrap();
            let b = bump_jet(s, &Scalar::ratio(3, 4, &c), 6, &c).unwrap();
            for k in 0..=6 {
                let mirrored = if k % 2 == 1 { -b.coeff(k).re.clone() } else { b.coeff(k).re.clone() };
                assert!(rel_err(&a.coeff(k).re, &mirrored) < 1e-70, "s={s:?} k={k}");
            }
        }
    }

    #[test]
    fn bump_is_periodic_and_untagged_points_work() {
        let c = ctx();
        let a = bump_jet(Sharpness::Two, &Scalar::ratio(1, 3, &c), 4, &c).unwrap();
        let b = bump_jet(Sharpness::Two, &Scalar::ratio(7, 3, &c), 4, &c).unwrap();
        for k in 0..=4 {
            assert!(rel_err(&a.coeff(k).re, &b.coeff(k).re) < 1e-70);
        }
        let loose = Scalar::from_real(c.real(0.3));
        assert!(bump_jet(Sharpness::Two, &loose, 3, &c).is_ok());
    }

    #[test]
    fn dyadic_point_uses_one_term() {
        let c = ctx();
        let cat = Catalog::default();
        let spec = series("bumpseries:a=invfact,s=2,l=1,u=floor");
        let half = Scalar::ratio(1, 2, &c);
        let (j, tr) = cat.series_family_jet(&spec, &half, 6, &c).unwrap();
        assert!(tr.exact_tail && tr.certified());
        assert_eq!(tr.outer_terms, 1);
        let u = bump_jet(Sharpness::Two, &half, 6, &c).unwrap();
        assert_eq!(j.coeffs(), u.coeffs());
    }

    #[test]
    fn origin_gives_zero_jet() {
        let c = ctx();
        let cat = Catalog::default();
        let spec = series("bumpseries:a=doubleexp,u=sin");
        let (j, tr) = cat.series_family_jet(&spec, &Scalar::from_i64(0, &c), 5, &c).unwrap();
        assert!(j.is_identically_zero());
        assert_eq!(tr.outer_terms, 0);
    }

    #[test]
    fn third_sums_to_e_times_bump() {
        // u(2^n/3) alternates between u(1/3) and u(2/3), which are equal.
        let c = ctx();
        let cat = Catalog::default();
        let spec = series("bumpseries:a=invfact,s=2,l=1,u=floor");
        let (j, tr) = cat.series_family_jet(&spec, &Scalar::ratio(1, 3, &c), 0, &c).unwrap();
        assert!(tr.certified() && !tr.exact_tail);
        let u = Float::with_val(300, -9).exp() * Float::with_val(300, Rational::from((-9, 4))).exp();
        let mut direct = Float::with_val(300, 0);
        let mut w = Float::with_val(300, 1);
        for n in 0..30u32 {
            if n > 0 {
                w /= n;
            }
            direct += &w * &u;
        }
        assert!(rel_err(&j.coeff(0).re, &direct) < 1e-30);
        let closed = Float::with_val(300, 1).exp() * &u;
        assert!(rel_err(&j.coeff(0).re, &closed) < 1e-70);
    }

    #[test]
    fn sin_bump_quarter_pi_is_dyadic() {
        let c = ctx();
        let cat = Catalog::default();
        let spec = series("bumpseries:a=doubleexp,s=2,l=2pi,u=sin");
        let t = parse_scalar("pi/4", &c).unwrap();
        let (j, tr) = cat.series_family_jet(&spec, &t, 4, &c).unwrap();
        assert!(tr.exact_tail);
        // 2^n·π/4 hits a multiple of π at n = 2.
        assert_eq!(tr.outer_terms, 2);
        // Term n=0: a_0 e^{-csc²(π/4)} = e^{-2}/2; term n=1: e^{-1}/4.
        let want = Float::with_val(300, -2).exp() / 2u32 + Float::with_val(300, -1).exp() / 4u32;
        assert!(rel_err(&j.coeff(0).re, &want) < 1e-70);
    }

    #[test]
    fn certificates_are_honest_when_doubling() {
        let c = make_context(128, 32).unwrap();
        let cat = Catalog::default();
        let spec = series("bumpseries:a=invfact,s=2,l=1,u=floor");
        let t = Scalar::ratio(1, 3, &c);
        let (j, tr) = cat.series_family_jet(&spec, &t, 3, &c).unwrap();
        assert!(tr.certified());
        let (j2, _) = cat
            .series_family_jet_fixed(&spec, &t, 3, &c, 2 * tr.outer_terms)
            .unwrap();
        for k in 0..=3 {
            let d = Float::with_val(128, &j.coeff(k).re - &j2.coeff(k).re).abs();
            let slack = c.ulp(&j.coeff(k).re) * 4u32;
            assert!(d <= Float::with_val(128, &tr.coefficient_tails[k] + &slack), "k={k}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let c = ctx();
        let cat = Catalog::new(Limits {
            max_outer_terms: 1000,
            ..Limits::default()
        });
        let spec = series("bumpseries:a=invfact,s=2,l=1,u=floor");
        let r = cat.series_family_jet(&spec, &Scalar::ratio(1, 3, &c), 12, &c);
        assert!(matches!(r, Err(Error::TruncationBudget { .. })));
    }
}
