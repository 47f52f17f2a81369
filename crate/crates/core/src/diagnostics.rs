//! Convergence inference from jets and hat runs.
//!
//! Nothing here proves anything: radii come from a root test over a finite
//! window and verdicts compare them against fixed, reported thresholds.

use std::fmt;

use rayon::prelude::*;

use crate::catalog::{Catalog, FunctionSpec};
use crate::error::{Error, Result};
use crate::hatseries::{hat_run, HatRun};
use crate::jet::Jet;
use crate::numerics::{ln_abs, log2_abs, PrecisionContext, Scalar};

/// Raw radius estimates above this are reported as effectively infinite.
pub const INFINITE_RADIUS: f64 = 1e6;
/// Window growth that counts as divergence of the terms.
pub const GROWTH_FACTOR: f64 = 1e6;
pub const DEFAULT_DELTA: f64 = 0.1;
/// Slope of `ln ρ_n` against `ln n` separating the trends.
pub const TREND_SLOPE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Stable,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Stable => "stable",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RadiusEstimate {
    pub t: Scalar,
    pub order: usize,
    pub window: (usize, usize),
    /// `(n, ln |c_n|^(1/n))` for the nonzero coefficients in the window.
    pub ln_rho: Vec<(usize, f64)>,
    /// Reciprocal of the window maximum of `ρ_n` (`+∞` if none is nonzero).
    pub raw_r_hat: f64,
    /// `raw_r_hat`, or `+∞` when flagged effectively infinite.
    pub r_hat: f64,
    pub trend: Trend,
    pub effectively_infinite: bool,
}

/// Window `[⌈2N/3⌉, N]` of a root test at order `N`.
pub fn radius_window(order: usize) -> (usize, usize) {
    ((2 * order).div_ceil(3), order)
}

/// Root-test radius from an existing jet.
pub fn radius_from_jet(spec: &FunctionSpec, t: &Scalar, jet: &Jet) -> Result<RadiusEstimate> {
    let order = jet.order();
    if order < 12 {
        return Err(Error::InvalidArgument(format!(
            "radius estimation needs order ≥ 12, got {order}"
        )));
    }
    let (lo, hi) = radius_window(order);
    let ln_rho: Vec<(usize, f64)> = (lo.max(1)..=hi)
        .filter(|&n| !jet.coeff(n).is_zero())
        .map(|n| (n, ln_abs(&jet.coeff(n).abs()) / n as f64))
        .collect();
    if ln_rho.is_empty() {
        if spec.is_polynomial() {
            return Ok(RadiusEstimate {
                t: t.clone(),
                order,
                window: (lo, hi),
                ln_rho,
                raw_r_hat: f64::INFINITY,
                r_hat: f64::INFINITY,
                trend: Trend::Stable,
                effectively_infinite: true,
            });
        }
        return Err(Error::InconclusiveWindow { lo, hi });
    }
    let max_ln = ln_rho.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let raw_r_hat = (-max_ln).exp();
    let trend = trend_of(&ln_rho);
    let effectively_infinite = trend == Trend::Decreasing || raw_r_hat > INFINITE_RADIUS;
    Ok(RadiusEstimate {
        t: t.clone(),
        order,
        window: (lo, hi),
        ln_rho,
        raw_r_hat,
        r_hat: if effectively_infinite { f64::INFINITY } else { raw_r_hat },
        trend,
        effectively_infinite,
    })
}

/// Least-squares slope of `y` against `ln n`.
fn trend_of(points: &[(usize, f64)]) -> Trend {
    if points.len() < 2 {
        return Trend::Stable;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let slope = least_squares(&xs, &ys).0;
    if slope < -TREND_SLOPE {
        Trend::Decreasing
    } else if slope > TREND_SLOPE {
        Trend::Increasing
    } else {
        Trend::Stable
    }
}

/// `(slope, intercept)` of the least-squares line.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

pub fn radius_estimate(
    catalog: &Catalog,
    spec: &FunctionSpec,
    t: &Scalar,
    order: usize,
    ctx: &PrecisionContext,
) -> Result<RadiusEstimate> {
    if order < 12 {
        return Err(Error::InvalidArgument(format!(
            "radius estimation needs order ≥ 12, got {order}"
        )));
    }
    let jet = catalog.jet_of(spec, t, order, ctx)?;
    radius_from_jet(spec, t, &jet)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    Diverges,
    ConvergesToTaylor,
    BoundaryIndeterminate,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Diverges => "diverges",
            Case::ConvergesToTaylor => "converges_to_Tt0",
            Case::BoundaryIndeterminate => "boundary_indeterminate",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub t: Scalar,
    pub case: Case,
    pub r_hat: f64,
    pub abs_t: f64,
    pub delta: f64,
    pub reason: Option<String>,
}

/// Three-way verdict from an estimated radius.
pub fn classify_radius(t: &Scalar, r_hat: f64, delta: f64) -> Classification {
    let abs_t = t.value().to_f64().abs();
    let case = if abs_t == 0.0 || r_hat > (1.0 + delta) * abs_t {
        Case::ConvergesToTaylor
    } else if r_hat < (1.0 - delta) * abs_t {
        Case::Diverges
    } else {
        Case::BoundaryIndeterminate
    };
    Classification {
        t: t.clone(),
        case,
        r_hat,
        abs_t,
        delta,
        reason: (abs_t == 0.0).then(|| "t = 0: the series reduces to f(0)".to_string()),
    }
}

pub fn classify_point(
    catalog: &Catalog,
    spec: &FunctionSpec,
    t: &Scalar,
    order: usize,
    delta: f64,
    ctx: &PrecisionContext,
) -> Result<Classification> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must lie in [0, 1), got {delta}")));
    }
    if t.is_zero() {
        return Ok(classify_radius(t, f64::INFINITY, delta));
    }
    match radius_estimate(catalog, spec, t, order, ctx) {
        Ok(r) => Ok(classify_radius(t, r.r_hat, delta)),
        Err(Error::InconclusiveWindow { lo, hi }) => Ok(Classification {
            t: t.clone(),
            case: Case::BoundaryIndeterminate,
            r_hat: f64::NAN,
            abs_t: t.value().to_f64().abs(),
            delta,
            reason: Some(format!("inconclusive radius: coefficients {lo}..={hi} all vanish")),
        }),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermLimit {
    Passes,
    Fails,
    Inconclusive,
}

impl fmt::Display for TermLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TermLimit::Passes => "passes",
            TermLimit::Fails => "fails",
            TermLimit::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone)]
pub struct NecessaryCondition {
    pub verdict: TermLimit,
    pub window: (usize, usize),
    /// `log2(|a_hi| / |a_lo|)`.
    pub log2_growth: f64,
    pub growth_threshold: f64,
    pub note: Option<String>,
}

/// Term-limit test: the terms of a convergent series must tend to zero.
///
/// Over the last `window_fraction` of the run: fails when the magnitudes are
/// nondecreasing and either grow by [`GROWTH_FACTOR`] or stay above
/// `2^(-bits/4)`; passes when every magnitude is below `2^(-bits/4)`.
pub fn necessary_condition_test(run: &HatRun, window_fraction: f64) -> Result<NecessaryCondition> {
    if run.order < 12 {
        return Err(Error::InvalidArgument(format!(
            "term-limit test needs order ≥ 12, got {}",
            run.order
        )));
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidArgument("window fraction must lie in (0, 1]".into()));
    }
    let n = run.order;
    let lo = ((1.0 - window_fraction) * n as f64).ceil() as usize;
    let lo = lo.min(n - 1);
    let bits = run.ctx().bits() as f64;
    let mags: Vec<f64> = run.terms[lo..=n].iter().map(|a| log2_abs(&a.abs())).collect();
    let small = -bits / 4.0;
    // Nondecreasing up to a relative slack of 2^(-bits/2).
    let slack = (2f64.powf(-bits / 2.0)).ln_1p() / std::f64::consts::LN_2;
    let nondecreasing = mags.windows(2).all(|w| w[1] >= w[0] - slack);
    let growth = mags[mags.len() - 1] - mags[0];
    let max = mags.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let alternating = run.terms[lo..=n]
        .windows(2)
        .all(|w| w[0].re.is_sign_negative() != w[1].re.is_sign_negative() && !w[0].re.is_zero());

    let (verdict, note) = if nondecreasing && mags[0].is_finite() && growth >= GROWTH_FACTOR.log2() {
        (TermLimit::Fails, Some("term magnitudes grow across the window".to_string()))
    } else if nondecreasing && mags[0].is_finite() && mags[0] > small {
        let note = if alternating {
            "terms do not decay; partial sums oscillate"
        } else {
            "terms do not decay"
        };
        (TermLimit::Fails, Some(note.to_string()))
    } else if max <= small {
        (TermLimit::Passes, None)
    } else {
        (TermLimit::Inconclusive, None)
    };
    Ok(NecessaryCondition {
        verdict,
        window: (lo, n),
        log2_growth: growth,
        growth_threshold: GROWTH_FACTOR,
        note,
    })
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    pub grid: Vec<Scalar>,
    pub order: usize,
    /// Fit `ln |f^(n)(t)| ≤ ln C + n ln M`, `C` raised to the upper envelope.
    pub ln_c_hat: f64,
    pub ln_m_hat: f64,
    pub fit_points: usize,
    pub zero_derivatives: usize,
    /// `max |f^(n+1)/f^(n)|` over non-excluded entries.
    pub ratio_sup: f64,
    pub ratio_exclusions: usize,
    /// `ln max_N |Σ_{n≤N} (-1)^n f^(n)(t)|`.
    pub ln_dirichlet_sup: f64,
    pub term_limits: Vec<TermLimit>,
}

impl BoundReport {
    pub fn c_hat(&self) -> f64 {
        self.ln_c_hat.exp()
    }

    pub fn m_hat(&self) -> f64 {
        self.ln_m_hat.exp()
    }

    pub fn dirichlet_sup(&self) -> f64 {
        self.ln_dirichlet_sup.exp()
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub fn bound_report(
    catalog: &Catalog,
    spec: &FunctionSpec,
    grid: &[Scalar],
    order: usize,
    ctx: &PrecisionContext,
) -> Result<BoundReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("bound report needs a non-empty grid".into()));
    }
    if order < 4 {
        return Err(Error::InvalidArgument(format!("bound report needs order ≥ 4, got {order}")));
    }
    let runs: Vec<HatRun> = grid
        .par_iter()
        .map(|t| hat_run(catalog, spec, t, order, ctx).map_err(|e| e.at_point("bound report", t)))
        .collect::<Result<_>>()?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut zeros = 0usize;
    let mut ratio_sup = 0.0f64;
    let mut exclusions = 0usize;
    let mut ln_dirichlet = f64::NEG_INFINITY;
    let mut term_limits = Vec::with_capacity(runs.len());
    let wide = ctx.working_bits();
    let half_bits_ln = ctx.bits() as f64 / 2.0 * std::f64::consts::LN_2;

    for run in &runs {
        let ln_d: Vec<f64> = (0..=order)
            .map(|n| ln_abs(&run.jet.coeff(n).abs()) + ln_factorial(n))
            .collect();
        let ln_scale = ln_d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (n, &y) in ln_d.iter().enumerate() {
            if y.is_finite() {
                xs.push(n as f64);
                ys.push(y);
            } else {
                zeros += 1;
            }
        }
        for n in 0..order {
            if !(ln_d[n] > ln_scale - half_bits_ln) {
                exclusions += 1;
                continue;
            }
            ratio_sup = ratio_sup.max((ln_d[n + 1] - ln_d[n]).exp());
        }
        let mut acc = crate::numerics::BigComplex::zero(wide);
        for n in 0..=order {
            let d = run.jet.derivative(n);
            if n % 2 == 1 {
                acc = &acc - &d;
            } else {
                acc = &acc + &d;
            }
            ln_dirichlet = ln_dirichlet.max(ln_abs(&acc.abs()));
        }
        term_limits.push(if order >= 12 {
            necessary_condition_test(run, 1.0 / 3.0)?.verdict
        } else {
            TermLimit::Inconclusive
        });
    }

    let (ln_m_hat, ln_c_hat) = if xs.is_empty() {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    } else {
        let (slope, _) = least_squares(&xs, &ys);
        let envelope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| y - slope * x)
            .fold(f64::NEG_INFINITY, f64::max);
        (slope, envelope)
    };
    Ok(BoundReport {
        grid: grid.to_vec(),
        order,
        ln_c_hat,
        ln_m_hat,
        fit_points: xs.len(),
        zero_derivatives: zeros,
        ratio_sup,
        ratio_exclusions: exclusions,
        ln_dirichlet_sup: ln_dirichlet,
        term_limits,
    })
}

#[derive(Debug, Clone)]
pub struct GridRadiusSummary {
    pub estimates: Vec<RadiusEstimate>,
    /// Points whose estimate failed, with the reason.
    pub failures: Vec<(Scalar, String)>,
    /// `max 1/R_hat` over the grid (0 when every radius is infinite).
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub r: f64,
    pub s: f64,
}

pub fn grid_radius_summary(
    catalog: &Catalog,
    spec: &FunctionSpec,
    grid: &[Scalar],
    order: usize,
    ctx: &PrecisionContext,
) -> Result<GridRadiusSummary> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("radius summary needs a non-empty grid".into()));
    }
    let results: Vec<Result<RadiusEstimate>> = grid
        .par_iter()
        .map(|t| radius_estimate(catalog, spec, t, order, ctx))
        .collect();
    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    for (t, r) in grid.iter().zip(results) {
        match r {
            Ok(e) => estimates.push(e),
            Err(e) => failures.push((t.clone(), e.to_string())),
        }
    }
    let inv: Vec<f64> = estimates.iter().map(|e| 1.0 / e.r_hat).collect();
    let alpha_hat = inv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let beta_hat = inv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GridRadiusSummary {
        estimates,
        failures,
        alpha_hat,
        beta_hat,
        r: 1.0 / alpha_hat,
        s: 1.0 / beta_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{make_context, parse_scalar};

    fn ctx() -> PrecisionContext {
        make_context(256, 32).unwrap()
    }

    fn pt(s: &str, c: &PrecisionContext) -> Scalar {
        parse_scalar(s, c).unwrap()
    }

    #[test]
    fn window_bounds() {
        assert_eq!(radius_window(12), (8, 12));
        assert_eq!(radius_window(200), (134, 200));
        assert_eq!(radius_window(13), (9, 13));
    }

    #[test]
    fn rational_radius_is_pole_distance() {
        let c = ctx();
        let cat = Catalog::default();
        let r = radius_estimate(&cat, &FunctionSpec::RationalOnePlus, &pt("1", &c), 200, &c).unwrap();
        assert!((r.r_hat / 2.0 - 1.0).abs() < 0.005, "{}", r.r_hat);
        assert_eq!(r.trend, Trend::Stable);
    }

    #[test]
    fn entire_functions_are_flagged() {
        let c = ctx();
        let cat = Catalog::default();
        let r = radius_estimate(&cat, &FunctionSpec::Exp, &pt("1/2", &c), 60, &c).unwrap();
        assert!(r.effectively_infinite && r.r_hat.is_infinite());
        assert_eq!(r.trend, Trend::Decreasing);
        let p = FunctionSpec::parse("poly:1,2,3").unwrap();
        let r = radius_estimate(&cat, &p, &pt("1", &c), 12, &c).unwrap();
        assert!(r.effectively_infinite);
        let flat = FunctionSpec::parse("flatexp:s=2").unwrap();
        assert!(matches!(
            radius_estimate(&cat, &flat, &pt("0", &c), 12, &c),
            Err(Error::InconclusiveWindow { .. })
        ));
        assert!(radius_estimate(&cat, &FunctionSpec::Exp, &pt("1", &c), 11, &c).is_err());
    }

    #[test]
    fn lacunary_radius_collapses() {
        let c = ctx();
        let cat = Catalog::default();
        let s = FunctionSpec::parse("lacunary:base=2").unwrap();
        let r = radius_estimate(&cat, &s, &pt("0", &c), 14, &c).unwrap();
        assert_eq!(r.trend, Trend::Increasing);
        assert!(r.r_hat < 0.05, "{}", r.r_hat);
    }

    #[test]
    fn rational_classification_examples() {
        let c = ctx();
        let cat = Catalog::default();
        let f = FunctionSpec::RationalOnePlus;
        let case = |t: &str| classify_point(&cat, &f, &pt(t, &c), 200, DEFAULT_DELTA, &c).unwrap().case;
        assert_eq!(case("1"), Case::ConvergesToTaylor);
        assert_eq!(case("-0.6"), Case::Diverges);
        assert_eq!(case("-1/2"), Case::BoundaryIndeterminate);
        assert_eq!(case("0"), Case::ConvergesToTaylor);
    }

    #[test]
    fn necessary_condition_verdicts() {
        let c = ctx();
        let cat = Catalog::default();
        let f = FunctionSpec::RationalOnePlus;
        let run = hat_run(&cat, &f, &pt("-0.6", &c), 60, &c).unwrap();
        assert_eq!(necessary_condition_test(&run, 1.0 / 3.0).unwrap().verdict, TermLimit::Fails);
        let run = hat_run(&cat, &FunctionSpec::Exp, &pt("1", &c), 60, &c).unwrap();
        assert_eq!(necessary_condition_test(&run, 1.0 / 3.0).unwrap().verdict, TermLimit::Passes);
        let run = hat_run(&cat, &f, &pt("-1/2", &c), 60, &c).unwrap();
        let nc = necessary_condition_test(&run, 1.0 / 3.0).unwrap();
        assert_eq!(nc.verdict, TermLimit::Fails);
        assert!(nc.note.unwrap().contains("oscillate"));
    }

    #[test]
    fn exp_bounds() {
        let c = ctx();
        let cat = Catalog::default();
        let grid: Vec<Scalar> = ["-1", "-1/2", "0", "1/2", "1"].iter().map(|s| pt(s, &c)).collect();
        let rep = bound_report(&cat, &FunctionSpec::Exp, &grid, 20, &c).unwrap();
        assert!((rep.m_hat() - 1.0).abs() < 1e-6, "{}", rep.m_hat());
        assert!((rep.c_hat() - std::f64::consts::E).abs() < 1e-6);
        assert!((rep.ratio_sup - 1.0).abs() < 1e-9);
        assert!(rep.dirichlet_sup() <= std::f64::consts::E * (1.0 + 1e-12));
        assert!(rep.term_limits.iter().all(|v| *v != TermLimit::Fails));
    }

    #[test]
    fn square_bounds_exclude_vanishing_orders() {
        let c = ctx();
        let cat = Catalog::default();
        let grid = vec![pt("1/2", &c), pt("1", &c)];
        let p = FunctionSpec::parse("poly:0,0,1").unwrap();
        let rep = bound_report(&cat, &p, &grid, 6, &c).unwrap();
        assert_eq!(rep.zero_derivatives, 2 * 4);
        assert!(rep.ratio_exclusions >= 2 * 3);
    }

    #[test]
    fn rational_grid_summary() {
        let c = ctx();
        let cat = Catalog::default();
        let grid: Vec<Scalar> = ["0.5", "1", "2"].iter().map(|s| pt(s, &c)).collect();
        let g = grid_radius_summary(&cat, &FunctionSpec::RationalOnePlus, &grid, 200, &c).unwrap();
        let want = [1.5, 2.0, 3.0];
        for (e, w) in g.estimates.iter().zip(want) {
            assert!((e.r_hat / w - 1.0).abs() < 0.01);
        }
        assert!((g.r / 1.5 - 1.0).abs() < 0.01);
        assert!(g.r <= g.s);
        let g = grid_radius_summary(&cat, &FunctionSpec::Exp, &grid, 40, &c).unwrap();
        assert!(g.r.is_infinite() && g.s.is_infinite());
    }
}
