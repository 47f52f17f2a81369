//! Acceptance suite: one PASS/FAIL line per criterion at the pinned
//! tolerances. Runs as a plain binary so the lines always reach the output.
//!
//! Reference values come from closed forms evaluated here with MPFR
//! directly, never from the library's own evaluation paths.

use std::process::ExitCode;
use std::time::Instant;

use hatlab::catalog::{BumpSeries, LacunaryBase};
use hatlab::diagnostics::{classify_point, necessary_condition_test, radius_estimate, Case, TermLimit};
use hatlab::harness::{emit, parse_points, run_experiment, ExperimentConfig, ExperimentId, Format};
use hatlab::hatseries::{algebra_checks, antiderivative_check, hat_run, HatRun};
use hatlab::jet::Jet;
use hatlab::numerics::{make_context, parse_scalar, BigComplex, PrecisionContext, Scalar};
use hatlab::numerics::factorial;
use hatlab::{Catalog, FunctionSpec};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Criteria that cannot hold as literally stated, with the reason.
const KNOWN_UNATTAINABLE: &[(usize, &str)] = &[(
    9,
    "cancellation_bits = log2(max|H_n|/|H_N|) is unbounded when f(0) = 0: for sin the exact \
     H_N is the truncation remainder (about 1e-144 near t = 0.1), below working precision, so \
     every accurate evaluation exceeds bits - 32",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

/// A hat run whose cancellation is audited by criterion 9.
struct Audit {
    label: String,
    bits: u32,
    cancellation_bits: f64,
}

#[derive(Default)]
struct Ledger {
    audits: Vec<Audit>,
}

impl Ledger {
    fn record(&mut self, label: impl Into<String>, run: &HatRun) {
        self.audits.push(Audit {
            label: label.into(),
            bits: run.ctx().bits(),
            cancellation_bits: run.cancellation_bits,
        });
    }
}

fn ctx(bits: u32) -> PrecisionContext {
    make_context(bits, 32).unwrap()
}

fn spec(s: &str) -> FunctionSpec {
    FunctionSpec::parse(s).unwrap()
}

fn point(s: &str, c: &PrecisionContext) -> Scalar {
    parse_scalar(s, c).unwrap()
}

fn f64_of(x: &Float) -> f64 {
    x.to_f64()
}

fn criterion_1(ledger: &mut Ledger) -> Outcome {
    let c = ctx(256);
    let cat = Catalog::default();
    let start = Instant::now();
    let grid = parse_points("-2:2:20", &c).unwrap();
    // f(0) for each function.
    let cases = [("exp", 1), ("sin", 0), ("cos", 1), ("poly:1,2,3", 1)];
    let mut worst = (0.0f64, String::new());
    for (name, f0) in cases {
        let f = spec(name);
        for t in &grid {
            let run = hat_run(&cat, &f, t, 60, &c).unwrap();
            let dev = Float::with_val(c.working_bits(), &run.sum().re - f0).abs();
            let err = f64_of(&(dev + run.sum().im.clone().abs()));
            if err >= worst.0 {
                worst = (err, format!("{name} at t = {t}"));
            }
            ledger.record(format!("{name} t={t} N=60"), &run);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst.0 <= 1e-30 && secs <= 10.0,
        detail: format!(
            "max |H_60 - f(0)| = {:.3e} ({}) <= 1e-30 over 4 functions x 20 points; {secs:.2} s <= 10 s",
            worst.0, worst.1
        ),
    }
}

fn criterion_2(ledger: &mut Ledger) -> Outcome {
    let cat = Catalog::default();
    let f = spec("rational1p");
    let mut notes = Vec::new();
    let mut pass = true;

    // H_3(1) = 1/2 + 1/4 + 1/8 + 1/16.
    let c = ctx(256);
    let run = hat_run(&cat, &f, &point("1", &c), 3, &c).unwrap();
    let exact = run.sum().re == Rational::from((15, 16)) && run.sum().im.is_zero();
    pass &= exact;
    notes.push(format!("H_3(1) = {} (15/16 exact: {exact})", run.sum().re.to_f64()));
    ledger.record("rational1p t=1 N=3", &run);

    // |H_N - 1| = |t/(1+t)|^(N+1) exactly; the bound leaves a factor 2(1+t)/t.
    let c512 = ctx(512);
    for t in ["0.5", "1", "2"] {
        let tp = point(t, &c512);
        let run = hat_run(&cat, &f, &tp, 200, &c512).unwrap();
        let err = Float::with_val(512, &run.sum().re - 1u32).abs();
        let q = tp.exact().unwrap().ratio().clone();
        let r = &q / Rational::from(&q + 1u32);
        let bound = Float::with_val(512, r.pow(200u32)) * 2u32;
        let ok = err <= bound;
        pass &= ok;
        notes.push(format!("t={t}: |H_200-1| = {:.3e} <= {:.3e}: {ok}", err.to_f64(), bound.to_f64()));
        ledger.record(format!("rational1p t={t} N=200"), &run);
    }

    // t = -1/2: every term is 2(-1)^n.
    let half = point("-1/2", &c);
    let run = hat_run(&cat, &f, &half, 200, &c).unwrap();
    let alternates = run
        .partials
        .iter()
        .enumerate()
        .all(|(n, p)| p.im.is_zero() && p.re == if n % 2 == 0 { 2 } else { 0 });
    pass &= alternates;
    notes.push(format!("t=-1/2 partials alternate 2,0 exactly: {alternates}"));
    ledger.record("rational1p t=-1/2 N=200", &run);

    let t06 = point("-0.6", &c);
    let run = hat_run(&cat, &f, &t06, 200, &c).unwrap();
    let nc = necessary_condition_test(&run, 1.0 / 3.0).unwrap();
    let class = classify_point(&cat, &f, &t06, 200, 0.1, &c).unwrap();
    let ok = nc.verdict == TermLimit::Fails && class.case == Case::Diverges;
    pass &= ok;
    notes.push(format!("t=-0.6: term limit {}, classification {}", nc.verdict, class.case));
    ledger.record("rational1p t=-0.6 N=200", &run);

    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion_3(ledger: &mut Ledger) -> Outcome {
    let c = ctx(256);
    let wide = c.working_bits();
    let cat = Catalog::default();
    let f = spec("exp");
    let t = point("1/2", &c);
    let half = Float::with_val(wide, 0.5);
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [4usize, 8, 12] {
        // S_N = (-1)^N t^N e^t / N! for the exponential.
        let mut s_n = half.clone().exp() * half.clone().pow(n as u32);
        s_n /= Float::with_val(wide, factorial(n));
        if n % 2 == 1 {
            s_n = -s_n;
        }
        let mut scaled = Vec::new();
        for k in [20u32, 21, 22] {
            let h = Scalar::from_rational(Rational::from((Integer::from(1), Integer::from(1) << k)), &c);
            let hi = hat_run(&cat, &f, &t.add(&h, &c), n, &c).unwrap();
            let lo = hat_run(&cat, &f, &t.sub(&h, &c), n, &c).unwrap();
            ledger.record(format!("exp t=1/2+2^-{k} N={n}"), &hi);
            ledger.record(format!("exp t=1/2-2^-{k} N={n}"), &lo);
            let diff = Float::with_val(wide, &hi.sum().re - &lo.sum().re);
            let fd = Float::with_val(wide, diff << (k - 1));
            let r = Float::with_val(wide, fd - &s_n).abs();
            scaled.push(Float::with_val(64, r << (2 * k)).to_f64());
        }
        let max = scaled.iter().cloned().fold(0.0, f64::max);
        let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let ok = min > 0.0 && max / min <= 2.0;
        pass &= ok;
        notes.push(format!("N={n}: residual/h^2 in [{min:.4e}, {max:.4e}], ratio {:.4}", max / min));
    }
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion_4(ledger: &mut Ledger) -> Outcome {
    let c = ctx(256);
    let cat = Catalog::default();
    let (a, b) = (c.real(2), c.real(-3));
    let scale = Scalar::from_i64(3, &c);
    let mut worst = [0.0f64; 3];
    for (f, g) in [("exp", "cos"), ("sin", "cos"), ("poly:1,-2,0,5", "exp")] {
        for t in ["1/3", "1/2", "1", "-0.7", "1.9"] {
            let r = algebra_checks(&cat, &spec(f), &spec(g), &a, &b, &scale, &point(t, &c), 40, &c).unwrap();
            worst[0] = worst[0].max(r.linearity.max_ulps);
            worst[1] = worst[1].max(r.product.max_ulps);
            worst[2] = worst[2].max(r.scale.max_ulps);
        }
    }
    let mut anti = 0.0f64;
    for f in ["cos", "exp"] {
        for x in ["1/2", "1"] {
            let run = antiderivative_check(&cat, &spec(f), &point(x, &c), 40, &c).unwrap();
            anti = anti.max(run.sum().abs().to_f64());
            ledger.record(format!("int({f}) x={x} N=40"), &run);
        }
    }
    Outcome {
        pass: worst[0] <= 8.0 && worst[2] <= 8.0 && worst[1] <= 64.0 && anti <= 1e-30,
        detail: format!(
            "linearity {} ulp <= 8, scale {} ulp <= 8, product {} ulp <= 64 (N=40); max |H_40(F)| = {:.3e} <= 1e-30",
            worst[0], worst[2], worst[1], anti
        ),
    }
}

fn criterion_5() -> Outcome {
    let c = ctx(256);
    let cat = Catalog::default();
    let f = spec("rational1p");
    let delta = 0.1;
    let mut worst_rel = 0.0f64;
    let mut misclassified = Vec::new();
    let mut checked = 0;
    for t in parse_points("-0.9:3:25", &c).unwrap() {
        let x = t.value().to_f64();
        let truth = (1.0 + x).abs();
        let est = radius_estimate(&cat, &f, &t, 200, &c).unwrap();
        worst_rel = worst_rel.max((est.r_hat / truth - 1.0).abs());
        let q = truth / x.abs();
        let expected = if x == 0.0 || q > 1.0 + delta {
            Some(Case::ConvergesToTaylor)
        } else if q < 1.0 - delta {
            Some(Case::Diverges)
        } else {
            None
        };
        if let Some(e) = expected {
            checked += 1;
            let got = classify_point(&cat, &f, &t, 200, delta, &c).unwrap().case;
            if got != e {
                misclassified.push(format!("{t}: {got} vs {e}"));
            }
        }
    }
    Outcome {
        pass: worst_rel <= 0.05 && misclassified.is_empty(),
        detail: format!(
            "max |R_hat/|1+t| - 1| = {worst_rel:.4} <= 0.05 over 25 points; {} misclassified of {checked} outside the band {:?}",
            misclassified.len(),
            misclassified
        ),
    }
}

fn criterion_6() -> Outcome {
    let c = ctx(256);
    let cat = Catalog::default();
    let start = Instant::now();
    let zero = Scalar::from_i64(0, &c);
    let (jet, tr) = cat.lacunary_jet(LacunaryBase::Two, &zero, 10, &c).unwrap();
    let mut worst = 0.0f64;
    for n in 0..=10usize {
        let e = Float::with_val(300, Float::with_val(300, 1) << n as u32).exp();
        // i^n e^(2^n)
        let (re, im) = match n % 4 {
            0 => (e.clone(), Float::new(300)),
            1 => (Float::new(300), e.clone()),
            2 => (-e.clone(), Float::new(300)),
            _ => (Float::new(300), -e.clone()),
        };
        let d = jet.derivative(n);
        let dr = Float::with_val(300, &d.re - &re);
        let di = Float::with_val(300, &d.im - &im);
        let err = (dr.square() + di.square()).sqrt() / &e;
        worst = worst.max(err.to_f64());
    }
    let mut radius = Vec::new();
    let mut radius_ok = true;
    for (base, name) in [(LacunaryBase::Two, "2"), (LacunaryBase::Half, "half")] {
        let f = FunctionSpec::Lacunary(base);
        for t in ["pi/8", "pi/4"] {
            let est = radius_estimate(&cat, &f, &point(t, &c), 16, &c).unwrap();
            let ok = match base {
                LacunaryBase::Two => est.r_hat <= 0.05,
                LacunaryBase::Half => est.r_hat >= 1e6,
            };
            radius_ok &= ok;
            radius.push(format!("base {name} t={t}: R_hat = {:e}", est.r_hat));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-10 && tr.certified() && radius_ok && secs <= 60.0,
        detail: format!(
            "max rel error vs i^n e^(2^n), n <= 10: {worst:.3e} <= 1e-10, certified: {}; {} (base 2 <= 0.05, half >= 1e6); {secs:.2} s <= 60 s",
            tr.certified(),
            radius.join(", ")
        ),
    }
}

/// `β(y) = e^(-1/y²) e^(-1/(1-y)²)` built from jet primitives at `c`.
fn beta_oracle(y: &Rational, order: usize, c: &PrecisionContext) -> Vec<BigComplex> {
    let yv = Float::with_val(c.working_bits(), y);
    let id = Jet::identity(&yv, order, c);
    let one = Jet::constant_real(&yv, &c.real(1), order, c);
    let alpha = |z: &Jet| one.div(&z.mul(z).unwrap()).unwrap().neg().exp();
    let left = alpha(&id);
    let right = alpha(&one.sub(&id).unwrap());
    left.mul(&right).unwrap().coeffs().to_vec()
}

fn criterion_7() -> Outcome {
    let c = ctx(256);
    let high = ctx(256 + 128);
    let cat = Catalog::default();
    let FunctionSpec::BumpSeries(b) = spec("bumpseries:a=invfact,s=2,l=1,u=floor") else {
        unreachable!()
    };
    let b: BumpSeries = b;
    let mut pass = true;
    let mut notes = Vec::new();
    for t in ["1/2", "3/4"] {
        let tp = point(t, &c);
        let q = tp.exact().unwrap().ratio().clone();
        // K: the first n at which 2^n t is an integer.
        let k_terms = (0u32..).find(|&n| Rational::from(&q << n).is_integer()).unwrap() as usize;
        let mut mismatched = Vec::new();
        let mut exact_tail = true;
        let mut oracle_ulps = 0.0f64;
        for order in 0..=40usize {
            let (jet, tr) = cat.series_family_jet(&b, &tp, order, &c).unwrap();
            let (finite, _) = cat.series_family_jet_fixed(&b, &tp, order, &c, k_terms).unwrap();
            let (longer, _) = cat.series_family_jet_fixed(&b, &tp, order, &c, 64).unwrap();
            exact_tail &= tr.exact_tail && tr.outer_terms == k_terms;
            if jet != finite || jet != longer {
                mismatched.push(order);
            }
            // Independent check of the K-term sum Σ (1/n!) 2^(nk) β^(k)(frac(2^n t)).
            let wide = high.working_bits();
            let mut sums = vec![Float::with_val(wide, 0); order + 1];
            for n in 0..k_terms as u32 {
                let x = Rational::from(&q << n);
                let frac = &x - x.clone().floor();
                let coeffs = beta_oracle(&frac, order, &high);
                let w = Float::with_val(wide, factorial(n as usize)).recip();
                for (k, ck) in coeffs.iter().enumerate() {
                    sums[k] += Float::with_val(wide, &ck.re * &w) << (n as usize * k) as u32;
                }
            }
            let scale = sums.iter().map(|s| s.clone().abs()).max_by(|a, b| a.total_cmp(b)).unwrap();
            let ulp = c.ulp(&scale);
            for (k, s) in sums.iter().enumerate() {
                let err = Float::with_val(wide, &jet.coeff(k).re - s).abs() + jet.coeff(k).im.clone().abs();
                oracle_ulps = oracle_ulps.max(Float::with_val(64, err / &ulp).to_f64());
            }
        }
        let ok = mismatched.is_empty() && exact_tail && oracle_ulps <= 4.0;
        pass &= ok;
        notes.push(format!(
            "t={t}: orders 0..=40 bit-identical to the {k_terms}-term and 64-term partial sums: {} (exact tail: {exact_tail}); \
             independent oracle within {oracle_ulps:.1} ulp of the coefficient scale (<= 4)",
            mismatched.is_empty()
        ));
    }

    // Non-dyadic: the certificate must cover the change from doubling.
    let third = point("1/3", &c);
    let order = 12;
    let (jet, tr) = cat.series_family_jet(&b, &third, order, &c).unwrap();
    let (more, _) = cat.series_family_jet_fixed(&b, &third, order, &c, 2 * tr.outer_terms).unwrap();
    let mut holds = tr.certified();
    for k in 0..=order {
        let diff = Float::with_val(64, &jet.coeff(k).re - &more.coeff(k).re).abs();
        let allowed = Float::with_val(64, &tr.coefficient_tails[k]) + c.ulp(&jet.coeff(k).re) * 2u32;
        holds &= diff <= allowed;
    }
    pass &= holds;
    notes.push(format!(
        "t=1/3 order {order}: {} -> {} outer terms, tail bound {:.3e} <= target {:.3e}, per-coefficient bounds hold: {holds}",
        tr.outer_terms,
        2 * tr.outer_terms,
        tr.tail_bound.to_f64(),
        tr.target.to_f64()
    ));
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion_8() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for id in [ExperimentId::C, ExperimentId::D, ExperimentId::H] {
        let cfg = ExperimentConfig::new(id);
        let mut outputs = Vec::new();
        for round in 0..2 {
            let dir = root.path().join(format!("{id}-{round}"));
            let result = run_experiment(&cfg).unwrap();
            let files = emit(&result, Format::Csv, &dir).unwrap();
            let contents: Vec<(String, Vec<u8>)> = files
                .iter()
                .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(f).unwrap()))
                .collect();
            outputs.push((result.verdicts.len(), contents));
        }
        let identical = outputs[0].1 == outputs[1].1;
        let mut labelled = true;
        let mut well_formed = true;
        for (_, bytes) in &outputs[0].1 {
            let text = String::from_utf8(bytes.clone()).unwrap();
            labelled &= text.lines().any(|l| l == "# label: exploratory");
            let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
            let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
            let width = rdr.headers().map(|h| h.len()).unwrap_or(0);
            well_formed &= width > 0 && rdr.records().all(|r| r.map(|r| r.len() == width).unwrap_or(false));
        }
        let no_assertions = outputs[0].0 == 0;
        let ok = identical && labelled && well_formed && no_assertions;
        pass &= ok;
        notes.push(format!(
            "{id}: {} files, byte-identical {identical}, labelled {labelled}, well-formed {well_formed}, assertion rows {}",
            outputs[0].1.len(),
            outputs[0].0
        ));
    }
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion_9(ledger: &Ledger) -> Outcome {
    let finite = ledger.audits.iter().all(|a| a.cancellation_bits.is_finite());
    let over: Vec<&Audit> = ledger
        .audits
        .iter()
        .filter(|a| a.cancellation_bits > a.bits as f64 - 32.0)
        .collect();
    let worst = ledger.audits.iter().map(|a| a.cancellation_bits).fold(0.0, f64::max);
    let mut detail = format!(
        "{} runs audited, all report cancellation_bits: {finite}; max {worst:.1}; {} over bits - 32",
        ledger.audits.len(),
        over.len()
    );
    if !over.is_empty() {
        let names: Vec<String> = over
            .iter()
            .take(6)
            .map(|a| format!("{} ({:.1} > {})", a.label, a.cancellation_bits, a.bits - 32))
            .collect();
        detail.push_str(&format!(": {}{}", names.join(", "), if over.len() > 6 { ", ..." } else { "" }));
    }
    Outcome {
        pass: finite && over.is_empty(),
        detail,
    }
}

fn main() -> ExitCode {
    let timed = |o: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let out = o();
        (out, start.elapsed().as_secs_f64())
    };
    let mut outcomes = Vec::new();
    let mut push = |n: usize, name: &'static str, (o, secs): (Outcome, f64)| outcomes.push((n, name, o, secs));
    let ledger = std::cell::RefCell::new(Ledger::default());
    push(1, "analytic constancy", timed(&|| criterion_1(&mut ledger.borrow_mut())));
    push(2, "rational family", timed(&|| criterion_2(&mut ledger.borrow_mut())));
    push(3, "telescoping law", timed(&|| criterion_3(&mut ledger.borrow_mut())));
    push(4, "identity suite", timed(&|| criterion_4(&mut ledger.borrow_mut())));
    push(5, "radius estimation", timed(&criterion_5));
    push(6, "lacunary closed form", timed(&criterion_6));
    push(7, "dyadic structure", timed(&criterion_7));
    push(8, "exploratory outputs", timed(&criterion_8));
    push(9, "numeric hygiene", timed(&|| criterion_9(&ledger.borrow())));
    let mut failed = false;
    for (n, name, o, secs) in &outcomes {
        let known = KNOWN_UNATTAINABLE.iter().find(|(k, _)| k == n);
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} ({name}): {status} | {} [{secs:.2} s]", o.detail);
        match (o.pass, known) {
            (false, Some((_, why))) => println!("  known unattainable: {why}"),
            (false, None) => failed = true,
            (true, Some(_)) => {
                println!("  listed as unattainable but passed; update the list");
                failed = true;
            }
            (true, None) => {}
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
