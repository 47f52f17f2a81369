//! The hat transform `Σ (-1)^n t^n f^(n)(t) / n!`: terms, partial sums,
//! telescoping tails and the algebraic identities it satisfies.
//!
//! Every run builds a single jet (of order `N + 1` when the catalog allows,
//! so the tail term comes for free) and derives everything from it.

use std::fmt;

use rug::{Float, Rational};

use crate::catalog::{Catalog, FunctionSpec, SeriesTruncation};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::numerics::{log2_abs, powi, BigComplex, BigReal, PrecisionContext, Scalar, Unit};

/// What a run is about: a catalog function or the antiderivative
/// `F(x) = ∫_0^x f` of one.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Function(FunctionSpec),
    Antiderivative(FunctionSpec),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Function(s) => write!(f, "{s}"),
            Subject::Antiderivative(s) => write!(f, "int({s})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HatRun {
    pub subject: Subject,
    pub t: Scalar,
    pub order: usize,
    /// `a_n = (-1)^n t^n c_n`, rounded to `ctx.bits()`.
    pub terms: Vec<BigComplex>,
    /// `H_n = Σ_{k≤n} a_k` at working precision.
    pub partials: Vec<BigComplex>,
    /// `log2(max |H_n| / |H_N|)`, zero when `H_N = 0`.
    pub cancellation_bits: f64,
    pub truncation: Option<SeriesTruncation>,
    /// The jet the run was computed from (order `N + 1` when available).
    pub jet: Jet,
}

impl HatRun {
    pub fn ctx(&self) -> &PrecisionContext {
        self.jet.ctx()
    }

    pub fn sum(&self) -> &BigComplex {
        &self.partials[self.order]
    }

    /// True when alternation consumed more than `bits - 32` bits.
    pub fn precision_warning(&self) -> bool {
        self.cancellation_bits > self.ctx().bits() as f64 - 32.0
    }

    /// `S_N = (-1)^N t^N f^(N+1)(t) / N!`, if the jet reaches order `N + 1`.
    pub fn tail_term(&self) -> Option<TailTerm> {
        (self.jet.order() > self.order).then(|| tail_from_jet(&self.jet, self.t.value(), self.order))
    }

    /// Largest `|H_n - H_(n-1) - a_n|` in units of the working precision at
    /// `|H_n|`; zero when the running sums are exact.
    pub fn partial_consistency_ulps(&self) -> f64 {
        let wctx = self.ctx().widened();
        let mut worst = 0.0f64;
        for n in 1..=self.order {
            let diff = &(&self.partials[n] - &self.partials[n - 1]) - &self.terms[n];
            if diff.is_zero() {
                continue;
            }
            let ulp = wctx.ulp(&self.partials[n].abs());
            let r = Float::with_val(64, diff.abs() / ulp).to_f64();
            worst = worst.max(r);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailTerm {
    pub order: usize,
    pub value: BigComplex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FknValue {
    pub k: usize,
    pub n: usize,
    pub value: BigComplex,
}

/// Hat-series terms `(-1)^n t^n c_n` for `n ≤ order`.
pub fn hat_terms(jet: &Jet, t: &BigReal, order: usize) -> Vec<BigComplex> {
    let bits = jet.ctx().bits();
    (0..=order)
        .map(|n| {
            let mut p = powi(t, n, bits);
            if n % 2 == 1 {
                p = -p;
            }
            jet.coeff(n).scale(&p, bits)
        })
        .collect()
}

fn partial_sums(terms: &[BigComplex], wide: u32) -> Vec<BigComplex> {
    let mut acc = BigComplex::zero(wide);
    terms
        .iter()
        .map(|a| {
            acc.add_assign_ref(a);
            acc.clone()
        })
        .collect()
}

fn cancellation_bits(partials: &[BigComplex]) -> f64 {
    let last = partials.last().expect("at least one partial sum").abs();
    if last.is_zero() {
        return 0.0;
    }
    let max = partials
        .iter()
        .map(|p| log2_abs(&p.abs()))
        .fold(f64::NEG_INFINITY, f64::max);
    (max - log2_abs(&last)).max(0.0)
}

/// Jet of order `N + 1` when possible, else order `N`.
fn evaluate_with_margin(
    catalog: &Catalog,
    spec: &FunctionSpec,
    t: &Scalar,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<(Jet, Option<SeriesTruncation>)> {
    match catalog.evaluate(spec, t, order + 1, ctx) {
        Ok(e) => Ok((e.jet, e.truncation)),
        Err(Error::OrderCap { .. }) | Err(Error::TruncationBudget { .. }) => {
            let e = catalog.evaluate(spec, t, order, ctx)?;
            Ok((e.jet, e.truncation))
        }
        Err(e) => Err(e),
    }
}

fn run_from_jet(
    subject: Subject,
    t: &Scalar,
    order: usize,
    jet: Jet,
    truncation: Option<SeriesTruncation>,
) -> HatRun {
    let terms = hat_terms(&jet, t.value(), order);
    let partials = partial_sums(&terms, jet.ctx().working_bits());
    let cancellation_bits = cancellation_bits(&partials);
    HatRun {
        subject,
        t: t.clone(),
        order,
        terms,
        partials,
        cancellation_bits,
        truncation,
        jet,
    }
}

pub fn hat_run(
    catalog: &Catalog,
    spec: &FunctionSpec,
    t: &Scalar,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<HatRun> {
    let (jet, truncation) = evaluate_with_margin(catalog, spec, t, order, ctx)?;
    Ok(run_from_jet(
        Subject::Function(spec.clone()),
        t,
        order,
        jet,
        truncation,
    ))
}

fn tail_from_jet(jet: &Jet, t: &BigReal, order: usize) -> TailTerm {
    // f^(N+1)/N! = (N+1) c_(N+1)
    let bits = jet.ctx().bits();
    let wide = jet.ctx().working_bits();
    let mut p = powi(t, order, wide) * (order as u32 + 1);
    if order % 2 == 1 {
        p = -p;
    }
    TailTerm {
        order,
        value: jet.coeff(order + 1).scale(&p, bits),
    }
}

pub fn tail_term(
    catalog: &Catalog,
    spec: &FunctionSpec,
    t: &Scalar,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<TailTerm> {
    let jet = catalog.jet_of(spec, t, order + 1, ctx)?;
    Ok(tail_from_jet(&jet, t.value(), order))
}

/// `(H_N(t+h) - H_N(t-h)) / 2h - S_N(t)`.
pub fn telescoping_residual(
    catalog: &Catalog,
    spec: &FunctionSpec,
    t: &Scalar,
    order: usize,
    h: &Scalar,
    ctx: &PrecisionContext,
) -> Result<BigComplex> {
    let wide = ctx.working_bits();
    let hi = hat_run(catalog, spec, &t.add(h, ctx), order, ctx)?;
    let lo = hat_run(catalog, spec, &t.sub(h, ctx), order, ctx)?;
    let tail = tail_term(catalog, spec, t, order, ctx)?;
    let two_h = Float::with_val(wide, h.value() * 2u32);
    let diff = (hi.sum() - lo.sum()).with_prec(wide);
    let slope = BigComplex::new(
        Float::with_val(wide, &diff.re / &two_h),
        Float::with_val(wide, &diff.im / &two_h),
    );
    Ok(&slope - &tail.value.with_prec(wide))
}

/// `f_(k,n)(t) = (-1)^n t^n f^(n+k)(t) / n!`.
pub fn fkn(
    catalog: &Catalog,
    spec: &FunctionSpec,
    t: &Scalar,
    k: usize,
    n: usize,
    ctx: &PrecisionContext,
) -> Result<FknValue> {
    let jet = catalog.jet_of(spec, t, n + k, ctx)?;
    Ok(fkn_from_jet(&jet, t.value(), k, n))
}

fn fkn_from_jet(jet: &Jet, t: &BigReal, k: usize, n: usize) -> FknValue {
    let wide = jet.ctx().working_bits();
    // f^(n+k)/n! = c_(n+k) (n+k)!/n!
    let mut falling = rug::Integer::from(1);
    for j in n + 1..=n + k {
        falling *= j as u32;
    }
    let mut p = Float::with_val(wide, powi(t, n, wide) * &falling);
    if n % 2 == 1 {
        p = -p;
    }
    FknValue {
        k,
        n,
        value: jet.coeff(n + k).scale(&p, jet.ctx().bits()),
    }
}

/// `|D_h f_(k-1,n)(t) - (f_(k,n)(t) - f_(k,n-1)(t))|` with a central
/// difference of step `h`; `O(h²)` for smooth `f`.
pub fn fkn_recurrence_check(
    catalog: &Catalog,
    spec: &FunctionSpec,
    t: &Scalar,
    k: usize,
    n: usize,
    h: &Scalar,
    ctx: &PrecisionContext,
) -> Result<BigReal> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument("recurrence needs k ≥ 1 and n ≥ 1".into()));
    }
    if h.value().cmp0() != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument("step h must be positive".into()));
    }
    let wide = ctx.working_bits();
    let at = |x: &Scalar| -> Result<FknValue> {
        let jet = catalog.jet_of(spec, x, n + k - 1, ctx)?;
        Ok(fkn_from_jet(&jet, x.value(), k - 1, n))
    };
    let plus = at(&t.add(h, ctx))?;
    let minus = at(&t.sub(h, ctx))?;
    let jet = catalog.jet_of(spec, t, n + k, ctx)?;
    let f_kn = fkn_from_jet(&jet, t.value(), k, n);
    let f_kn1 = fkn_from_jet(&jet, t.value(), k, n - 1);
    let two_h = Float::with_val(wide, h.value() * 2u32);
    let diff = (&plus.value - &minus.value).with_prec(wide);
    let slope = BigComplex::new(
        Float::with_val(wide, &diff.re / &two_h),
        Float::with_val(wide, &diff.im / &two_h),
    );
    let rhs = (&f_kn.value - &f_kn1.value).with_prec(wide);
    Ok((&slope - &rhs).abs())
}

/// Worst per-term disagreement of an identity, in units of the last place
/// of the per-term magnitude scale.
#[derive(Debug, Clone)]
pub struct Residual {
    pub check: &'static str,
    pub max_abs: BigReal,
    pub max_ulps: f64,
}

impl Residual {
    fn measure(
        check: &'static str,
        lhs: &[BigComplex],
        rhs: &[BigComplex],
        scales: &[BigReal],
        ctx: &PrecisionContext,
    ) -> Residual {
        let mut max_abs = Float::with_val(64, 0);
        let mut max_ulps = 0.0f64;
        for ((l, r), s) in lhs.iter().zip(rhs).zip(scales) {
            let d = (&l.with_prec(ctx.working_bits()) - &r.with_prec(ctx.working_bits())).abs();
            if d.is_zero() {
                continue;
            }
            if d > max_abs {
                max_abs = Float::with_val(64, &d);
            }
            let ulps = Float::with_val(64, &d / ctx.ulp(s)).to_f64();
            max_ulps = max_ulps.max(ulps);
        }
        Residual {
            check,
            max_abs,
            max_ulps,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlgebraReport {
    pub linearity: Residual,
    pub product: Residual,
    pub scale: Residual,
    /// `H_N` of the product and of `f`, `g` separately.
    pub product_sum: BigComplex,
    pub f_sum: BigComplex,
    pub g_sum: BigComplex,
}

/// Checks, term by term at `t`:
/// linearity `ĥ(af+bg) = aĥf + bĥg`, the product as a Cauchy convolution of
/// hat terms, and `ĝ(t) = ĥf(ct)` for `g(s) = f(cs)`.
#[allow(clippy::too_many_arguments)]
pub fn algebra_checks(
    catalog: &Catalog,
    f: &FunctionSpec,
    g: &FunctionSpec,
    a: &BigReal,
    b: &BigReal,
    c: &Scalar,
    t: &Scalar,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<AlgebraReport> {
    let bits = ctx.bits();
    let wide = ctx.working_bits();
    let x = t.value();
    let jf = catalog.jet_of(f, t, order, ctx)?;
    let jg = catalog.jet_of(g, t, order, ctx)?;
    let tf = hat_terms(&jf, x, order);
    let tg = hat_terms(&jg, x, order);
    let ca = BigComplex::from_real(ctx.real(a));
    let cb = BigComplex::from_real(ctx.real(b));

    // Linearity.
    let lin = Jet::linear(&ca, &jf, &cb, &jg)?;
    let lhs = hat_terms(&lin, x, order);
    let mut rhs = Vec::with_capacity(order + 1);
    let mut scales = Vec::with_capacity(order + 1);
    for (p, q) in tf.iter().zip(&tg) {
        let mut acc = BigComplex::zero(wide);
        acc.add_product(&ca, p);
        acc.add_product(&cb, q);
        rhs.push(acc.with_prec(bits));
        let s = Float::with_val(wide, a.abs_ref()) * p.abs() + Float::with_val(wide, b.abs_ref()) * q.abs();
        scales.push(s);
    }
    let linearity = Residual::measure("linearity", &lhs, &rhs, &scales, ctx);

    // Product as a convolution of hat terms (t^i t^j = t^n).
    let prod = jf.mul(&jg)?;
    let lhs = hat_terms(&prod, x, order);
    let mut rhs = Vec::with_capacity(order + 1);
    let mut scales = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mut acc = BigComplex::zero(wide);
        let mut s = Float::with_val(wide, 0);
        for i in 0..=n {
            acc.add_product(&tf[i], &tg[n - i]);
            s += tf[i].abs() * tg[n - i].abs();
        }
        rhs.push(acc.with_prec(bits));
        scales.push(s);
    }
    let product = Residual::measure("product", &lhs, &rhs, &scales, ctx);
    let product_sum = partial_sums(&lhs, wide).pop().expect("non-empty");

    // Scale: terms of s ↦ f(cs) at t against terms of f at ct.
    let ct = scaled_point(c, t, ctx);
    let jf_ct = catalog.jet_of(f, &ct, order, ctx)?;
    let jscaled = jf_ct.rescale_argument(c.value(), x)?;
    // Powers of exactly tagged points are taken at working precision, so the
    // rounding of the points themselves does not compound over `n`.
    let at_wide = |p: &Scalar| p.exact().map_or_else(|| p.value().clone(), |e| e.to_real(wide));
    let lhs = hat_terms(&jscaled, &at_wide(t), order);
    let rhs = hat_terms(&jf_ct, &at_wide(&ct), order);
    let scales: Vec<BigReal> = rhs.iter().map(BigComplex::abs).collect();
    let scale = Residual::measure("scale", &lhs, &rhs, &scales, ctx);

    Ok(AlgebraReport {
        linearity,
        product,
        scale,
        product_sum,
        f_sum: partial_sums(&tf, wide).pop().expect("non-empty"),
        g_sum: partial_sums(&tg, wide).pop().expect("non-empty"),
    })
}

/// `c·t`, exact when both factors are exact and at least one is rational.
fn scaled_point(c: &Scalar, t: &Scalar, ctx: &PrecisionContext) -> Scalar {
    if let (Some(ce), Some(te)) = (c.exact(), t.exact()) {
        if ce.unit() == Unit::One {
            return t.mul_rational(ce.ratio(), ctx);
        }
        if te.unit() == Unit::One {
            return c.mul_rational(te.ratio(), ctx);
        }
    }
    Scalar::from_real(ctx.real(c.value() * t.value()))
}

/// Closed-form `F(x) = ∫_0^x f` for the supported functions.
fn antiderivative_value(f: &FunctionSpec, x: &Scalar, ctx: &PrecisionContext) -> Result<BigReal> {
    let wide = ctx.working_bits();
    let v = Float::with_val(wide, x.value());
    Ok(match f {
        FunctionSpec::Cos => v.sin(),
        FunctionSpec::Sin => 1 - v.cos(),
        FunctionSpec::Exp => v.exp_m1(),
        FunctionSpec::Poly(p) => match x.exact().filter(|e| e.unit() == Unit::One) {
            Some(e) => {
                let mut acc = Rational::new();
                let mut pow = e.ratio().clone();
                for (k, pk) in p.iter().enumerate() {
                    acc += Rational::from(pk * &pow) / (k as u32 + 1);
                    pow *= e.ratio();
                }
                Float::with_val(wide, acc)
            }
            None => {
                let mut acc = Float::with_val(wide, 0);
                let mut pow = v.clone();
                for (k, pk) in p.iter().enumerate() {
                    acc += Float::with_val(wide, &pow * pk) / (k as u32 + 1);
                    pow *= &v;
                }
                acc
            }
        },
        other => return Err(Error::UnsupportedAntiderivative(other.to_string())),
    })
}

/// Hat run of `F(x) = ∫_0^x f` at `x`: `F`'s jet is `(F(x), c_0, c_1/2, …)`
/// built from the jet of `f`.
pub fn antiderivative_check(
    catalog: &Catalog,
    f: &FunctionSpec,
    x: &Scalar,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<HatRun> {
    let value = antiderivative_value(f, x, ctx)?;
    let jf = catalog.jet_of(f, x, order, ctx)?;
    let bits = ctx.bits();
    let mut coeffs = Vec::with_capacity(order + 2);
    coeffs.push(BigComplex::from_real(Float::with_val(bits, &value)));
    for n in 1..=order + 1 {
        let c = jf.coeff(n - 1);
        coeffs.push(BigComplex::new(
            Float::with_val(bits, &c.re / n as u32),
            Float::with_val(bits, &c.im / n as u32),
        ));
    }
    let jet = Jet::from_coeffs(x.value(), coeffs, ctx)?;
    Ok(run_from_jet(
        Subject::Antiderivative(f.clone()),
        x,
        order,
        jet,
        None,
    ))
}

/// `f(0) - H_N(t)`: zero wherever the hat series converges to `f(0)`.
pub fn residual_operator(run: &HatRun, catalog: &Catalog) -> Result<BigComplex> {
    let ctx = *run.ctx();
    let spec = match &run.subject {
        Subject::Function(s) => s,
        Subject::Antiderivative(_) => {
            return Ok(-run.sum().with_prec(ctx.working_bits()));
        }
    };
    let f0 = catalog.jet_of(spec, &Scalar::from_i64(0, &ctx), 0, &ctx)?;
    Ok(&f0.coeff(0).with_prec(ctx.working_bits()) - run.sum())
}
