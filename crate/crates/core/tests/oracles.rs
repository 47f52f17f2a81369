//! Library output against references computed here: closed forms evaluated
//! with MPFR, exact rational arithmetic, and finite differences.

use hatlab::catalog::{BumpSeries, LacunaryBase};
use hatlab::hatseries::hat_run;
use hatlab::numerics::{factorial, format_real, parse_real};
use hatlab::{make_context, parse_scalar, BigComplex, Catalog, FunctionSpec, PrecisionContext, Scalar};
use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

fn ctx(bits: u32) -> PrecisionContext {
    make_context(bits, 32).unwrap()
}

fn spec(s: &str) -> FunctionSpec {
    FunctionSpec::parse(s).unwrap()
}

fn rational_point(p: i64, q: u64, c: &PrecisionContext) -> Scalar {
    Scalar::from_rational(Rational::from((p, q)), c)
}

/// `|got - want|` in ulps of `scale` at `bits`.
fn ulps(got: &Float, want: &Float, scale: &Float, bits: u32) -> f64 {
    let d = Float::with_val(bits + 64, got - want).abs();
    if d.is_zero() {
        return 0.0;
    }
    let ulp = make_context(bits, 32).unwrap().ulp(scale);
    Float::with_val(64, d / ulp).to_f64()
}

fn series(text: &str) -> BumpSeries {
    match spec(text) {
        FunctionSpec::BumpSeries(b) => b,
        _ => unreachable!(),
    }
}

#[test]
fn exponential_and_trig_coefficients() {
    let c = ctx(256);
    let cat = Catalog::default();
    let w = 400;
    for t in [rational_point(7, 3, &c), rational_point(-5, 8, &c), rational_point(1, 10, &c)] {
        // The jets are taken at the point as represented.
        let x = Float::with_val(w, t.value());
        let e = x.clone().exp();
        let (s, co) = x.clone().sin_cos(Float::new(w));
        let jets = [
            cat.jet_of(&spec("exp"), &t, 30, &c).unwrap(),
            cat.jet_of(&spec("sin"), &t, 30, &c).unwrap(),
            cat.jet_of(&spec("cos"), &t, 30, &c).unwrap(),
        ];
        for n in 0..=30usize {
            let nf = Float::with_val(w, factorial(n));
            // sin^(n) = sin(x + nπ/2), cos^(n) = cos(x + nπ/2)
            let (ds, dc) = match n % 4 {
                0 => (s.clone(), co.clone()),
                1 => (co.clone(), -s.clone()),
                2 => (-s.clone(), -co.clone()),
                _ => (-co.clone(), s.clone()),
            };
            for (jet, want) in jets.iter().zip([e.clone(), ds, dc]) {
                let want = want / &nf;
                let got = &jet.coeff(n).re;
                assert!(ulps(got, &want, &want, 256) <= 1.0, "n = {n} at {t}: {got} vs {want}");
                assert!(jet.coeff(n).im.is_zero());
            }
        }
    }
}

#[test]
fn rational_coefficients_are_exact_up_to_rounding() {
    let c = ctx(256);
    let cat = Catalog::default();
    for (p, q) in [(1, 3), (-3, 5), (5, 2), (-9, 10)] {
        let point = rational_point(p, q as u64, &c);
        let jet = cat.jet_of(&spec("rational1p"), &point, 80, &c).unwrap();
        // Exact coefficients at the represented point.
        let t = point.value().to_rational().unwrap();
        let base = Rational::from(&t + 1u32).recip();
        for n in 0..=80usize {
            let mut want = base.clone().pow(n as u32 + 1);
            if n % 2 == 1 {
                want = -want;
            }
            let want = Float::with_val(400, &want);
            assert!(ulps(&jet.coeff(n).re, &want, &want, 256) <= 1.0, "n = {n}, t = {p}/{q}");
        }
    }
}

#[test]
fn polynomial_coefficients_are_exact() {
    let c = ctx(128);
    let cat = Catalog::default();
    let coeffs = [3i64, -1, 0, 4, 2];
    let t = Rational::from((2, 7));
    let jet = cat.jet_of(&spec("poly:3,-1,0,4,2"), &rational_point(2, 7, &c), 6, &c).unwrap();
    for k in 0..=6usize {
        // c_k = Σ_j binom(j, k) p_j t^(j-k)
        let mut want = Rational::new();
        for (j, pj) in coeffs.iter().enumerate().skip(k) {
            let b = Integer::from(Integer::binomial_u(j as u32, k as u32));
            want += Rational::from(b * pj) * t.clone().pow((j - k) as u32);
        }
        assert_eq!(jet.coeff(k).re, Float::with_val(128, &want), "k = {k}");
    }
}

#[test]
fn flat_exponential_low_derivatives() {
    let c = ctx(256);
    let cat = Catalog::default();
    let w = 400;
    for (p, q) in [(1i64, 2u64), (-3, 4), (2, 1)] {
        let jet = cat.jet_of(&spec("flatexp:s=2"), &rational_point(p, q, &c), 2, &c).unwrap();
        let x = Float::with_val(w, Rational::from((p, q)));
        let e = Float::with_val(w, -x.clone().square().recip()).exp();
        // f' = 2x^-3 e^(-1/x²), f'' = (4x^-6 - 6x^-4) e^(-1/x²)
        let d1 = Float::with_val(w, x.clone().pow(-3)) * 2u32 * &e;
        let d2 = (Float::with_val(w, x.clone().pow(-6)) * 4u32 - Float::with_val(w, x.clone().pow(-4)) * 6u32) * &e / 2u32;
        for (k, want) in [(0, e.clone()), (1, d1), (2, d2)] {
            assert!(ulps(&jet.coeff(k).re, &want, &want, 256) <= 2.0, "k = {k} at {p}/{q}");
        }
    }
}

#[test]
fn dyadic_bump_value_at_half_period() {
    // Only n = 0 contributes at t = 1/2, where β(1/2) = e^(-4) e^(-4).
    let c = ctx(256);
    let (jet, tr) = Catalog::default()
        .series_family_jet(&series("bumpseries:a=invfact,s=2,l=1,u=floor"), &rational_point(1, 2, &c), 0, &c)
        .unwrap();
    let want = Float::with_val(300, -8).exp();
    assert!(ulps(&jet.coeff(0).re, &want, &want, 256) <= 1.0);
    assert!(tr.exact_tail);
    assert_eq!(tr.outer_terms, 1);
}

#[test]
fn lacunary_derivatives_at_origin() {
    let c = ctx(256);
    let cat = Catalog::default();
    let zero = Scalar::from_i64(0, &c);
    for (base, shift) in [(LacunaryBase::Two, 1i32), (LacunaryBase::Half, -1)] {
        let (jet, tr) = cat.lacunary_jet(base, &zero, 10, &c).unwrap();
        assert!(tr.certified());
        for n in 0..=10usize {
            let freq = Float::with_val(300, Float::with_val(300, 1) << (shift * n as i32));
            // Σ_m e^(b^m·n) over m ≥ 0 for base 2 (= e^(2^n)); m ≥ 1 for base ½.
            let mag = match base {
                LacunaryBase::Two => freq.exp(),
                LacunaryBase::Half => freq.exp_m1(),
            };
            let d = jet.derivative(n);
            let (re, im) = if n % 2 == 0 { (&d.re, &d.im) } else { (&d.im, &d.re) };
            let sign = if n % 4 < 2 { 1 } else { -1 };
            let want = Float::with_val(300, &mag * sign);
            assert!(ulps(re, &want, &mag, 250) <= 4.0, "{base:?} n = {n}: {re} vs {want}");
            assert!(im.is_zero(), "{base:?} n = {n}");
        }
    }
}

/// Central-difference estimates of `f^(k)(t)`, `k ≤ 4`, from values at
/// `t + jh`, `j = -2..=2`.
fn central_differences(v: &[BigComplex; 5], h_log2: u32) -> [BigComplex; 5] {
    let [m2, m1, z, p1, p2] = v;
    let comb = |w: &[(i32, &BigComplex)], div: u32, pow: u32| {
        let bits = z.prec();
        let mut re = Float::with_val(bits, 0);
        let mut im = Float::with_val(bits, 0);
        for (k, c) in w {
            re += Float::with_val(bits, &c.re * *k);
            im += Float::with_val(bits, &c.im * *k);
        }
        BigComplex::new((re / div) << (h_log2 * pow), (im / div) << (h_log2 * pow))
    };
    [
        z.clone(),
        comb(&[(1, p1), (-1, m1)], 2, 1),
        comb(&[(1, p1), (-2, z), (1, m1)], 1, 2),
        comb(&[(1, p2), (-2, p1), (2, m1), (-1, m2)], 2, 3),
        comb(&[(1, p2), (-4, p1), (6, z), (-4, m1), (1, m2)], 1, 4),
    ]
}

fn assert_matches_differences(name: &str, jet: &hatlab::Jet, fd: &[BigComplex; 5]) {
    for (k, est) in fd.iter().enumerate() {
        let d = jet.derivative(k);
        let err = Float::with_val(64, Float::with_val(1024, &d.re - &est.re).abs() + Float::with_val(1024, &d.im - &est.im).abs());
        let rel = err / Float::with_val(64, d.abs());
        assert!(rel.to_f64() <= 1e-25, "{name} k = {k}: relative error {}", rel.to_f64());
    }
}

#[test]
fn bump_series_matches_finite_differences() {
    let c = ctx(256);
    let fine = ctx(1024);
    let cat = Catalog::default();
    let b = series("bumpseries:a=invfact,s=2,l=1,u=floor");
    let h = Rational::from((Integer::from(1), Integer::from(1) << 100));
    for t in [Rational::from((1, 3)), Rational::from((2, 5))] {
        let jet = cat.series_family_jet(&b, &Scalar::from_rational(t.clone(), &c), 4, &c).unwrap().0;
        let values: Vec<BigComplex> = (-2..=2)
            .map(|j| {
                let x = Scalar::from_rational(&t + Rational::from(&h * j), &fine);
                cat.series_family_jet(&b, &x, 0, &fine).unwrap().0.coeff(0).clone()
            })
            .collect();
        let fd = central_differences(&values.try_into().unwrap(), 100);
        assert_matches_differences(&format!("bump at {t}"), &jet, &fd);
    }
}

#[test]
fn lacunary_series_matches_finite_differences() {
    let c = ctx(256);
    let fine = ctx(1024);
    let cat = Catalog::default();
    let h = Rational::from((Integer::from(1), Integer::from(1) << 100));
    let t = Rational::from((1, 3));
    let jet = cat.lacunary_jet(LacunaryBase::Two, &Scalar::from_rational(t.clone(), &c), 4, &c).unwrap().0;
    let values: Vec<BigComplex> = (-2..=2)
        .map(|j| {
            let x = Scalar::from_rational(&t + Rational::from(&h * j), &fine);
            cat.lacunary_jet(LacunaryBase::Two, &x, 0, &fine).unwrap().0.coeff(0).clone()
        })
        .collect();
    let fd = central_differences(&values.try_into().unwrap(), 100);
    assert_matches_differences("lacunary at 1/3", &jet, &fd);
}

#[test]
fn exponential_partial_sums_match_closed_form() {
    // H_N(t) = e^t Σ_{n≤N} (-t)^n / n!
    let c = ctx(256);
    let t = rational_point(-3, 2, &c);
    let run = hat_run(&Catalog::default(), &spec("exp"), &t, 40, &c).unwrap();
    let w = 400;
    let x = Float::with_val(w, -1.5);
    let e = x.clone().exp();
    let mut acc = Float::with_val(w, 0);
    let mut largest = Float::with_val(64, 0);
    for n in 0..=40usize {
        let term = Float::with_val(w, (-x.clone()).pow(n as u32)) / Float::with_val(w, factorial(n)) * &e;
        largest = largest.max(&Float::with_val(64, term.abs_ref()));
        acc += term;
        // Each term is rounded once to the run's precision.
        assert!(ulps(&run.partials[n].re, &acc, &largest, c.bits()) <= (n + 1) as f64, "n = {n}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rational_labels_round_trip(p in -10_000i64..10_000, q in 1u64..10_000) {
        let c = ctx(128);
        let s = rational_point(p, q, &c);
        let back = parse_scalar(&s.label(), &c).unwrap();
        prop_assert_eq!(back.exact(), s.exact());
        prop_assert_eq!(back.value(), s.value());
    }

    #[test]
    fn real_text_round_trips_bitwise(x in prop::num::f64::NORMAL, bits in 53u32..600) {
        let v = Float::with_val(bits, x) / 3u32;
        let back = parse_real(&format_real(&v), bits).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn exponential_hat_series_is_constant(p in -40i64..=40, q in 20u64..=40) {
        let c = ctx(256);
        let run = hat_run(&Catalog::default(), &spec("exp"), &rational_point(p, q, &c), 60, &c).unwrap();
        let err = Float::with_val(256, &run.sum().re - 1u32).abs();
        prop_assert!(err.to_f64() <= 1e-30);
    }

    #[test]
    fn rational_partial_sums_follow_geometric_law(p in -40i64..=300, n in 0usize..60) {
        // H_N = 1 - (t/(1+t))^(N+1)
        let c = ctx(256);
        let point = rational_point(p, 100, &c);
        let t = point.value().to_rational().unwrap();
        let run = hat_run(&Catalog::default(), &spec("rational1p"), &point, n, &c).unwrap();
        let r = &t / Rational::from(&t + 1u32);
        let want = Float::with_val(400, 1u32 - r.pow(n as u32 + 1));
        let scale = run.partials.iter().map(|h| h.re.clone().abs()).fold(Float::with_val(64, 1), |a, b| a.max(&b));
        prop_assert!(ulps(&run.sum().re, &want, &scale, c.bits()) <= (n + 2) as f64);
    }

    #[test]
    fn hat_runs_are_deterministic(p in -20i64..=20, q in 1u64..=9) {
        let c = ctx(192);
        let t = rational_point(p, q, &c);
        let cat = Catalog::default();
        let a = hat_run(&cat, &spec("cos"), &t, 30, &c).unwrap();
        let b = hat_run(&Catalog::default(), &spec("cos"), &t, 30, &c).unwrap();
        prop_assert_eq!(a.partials, b.partials);
        prop_assert_eq!(a.cancellation_bits.to_bits(), b.cancellation_bits.to_bits());
    }

    #[test]
    fn jet_division_inverts_multiplication(p in -9i64..=30) {
        let c = ctx(256);
        let t = rational_point(p, 10, &c);
        let cat = Catalog::default();
        let f = cat.jet_of(&spec("exp"), &t, 20, &c).unwrap();
        let g = cat.jet_of(&spec("rational1p"), &t, 20, &c).unwrap();
        let back = f.mul(&g).unwrap().div(&g).unwrap();
        // Convolution errors scale with the largest products, not with c_k.
        let largest = |j: &hatlab::Jet| j.coeffs().iter().map(|c| c.abs()).fold(Float::with_val(64, 0), |a, b| a.max(&b));
        let scale = largest(&f) * largest(&g) / g.coeff(0).abs();
        for k in 0..=20 {
            prop_assert!(ulps(&back.coeff(k).re, &f.coeff(k).re, &scale, 256) <= 64.0);
        }
    }
}
