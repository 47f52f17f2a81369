//! Lacunary series `f(t) = Σ e^(i ω_m t) / m!` with `ω_m = 2^m` (`m ≥ 0`) or
//! `ω_m = 2^-m` (`m ≥ 1`).
//!
//! `c_n = (i^n / n!) Σ_m ω_m^n e^(i ω_m t) / m!`; the powers of two are
//! exact exponent shifts, so the only rounding is in the phases, the
//! reciprocal factorials and the accumulation.

use rug::{Float, Rational};

use super::spec::LacunaryBase;
use super::{Limits, SeriesTruncation};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::numerics::{factorial, BigComplex, BigReal, PrecisionContext, Scalar, Unit};

/// Successive phases `e^(i ω_m t)`.
enum Phases {
    Unity,
    /// `ω_m t = ρ_m π`, kept reduced mod 2 exactly.
    PiMultiple(Rational),
    /// `ω_m t` mod 2π at a precision that absorbs the doubling.
    Angle { theta: BigReal, two_pi: BigReal },
    /// Shrinking frequencies: `t·2^-m` directly.
    Shrinking(BigReal),
}

impl Phases {
    fn new(base: LacunaryBase, t: &Scalar, first_m: u32, max_m: usize, wide: u32) -> Phases {
        if t.is_zero() {
            return Phases::Unity;
        }
        let exact = t.exact_or_binary();
        match (base, exact.unit()) {
            (_, Unit::Pi) => {
                let rho = match base {
                    LacunaryBase::Two => exact.ratio().clone(),
                    LacunaryBase::Half => Rational::from(exact.ratio() >> first_m),
                };
                Phases::PiMultiple(reduce_mod2(rho))
            }
            (LacunaryBase::Two, Unit::One) => {
                let prec = wide + 64 + u32::try_from(max_m).unwrap_or(u32::MAX / 2).min(u32::MAX / 4);
                let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
                let theta = Float::with_val(prec, exact.ratio());
                let theta = reduce_angle(theta, &two_pi);
                Phases::Angle { theta, two_pi }
            }
            (LacunaryBase::Half, Unit::One) => {
                Phases::Shrinking(Float::with_val(wide, exact.ratio()) >> first_m)
            }
        }
    }

    fn current(&self, wide: u32) -> BigComplex {
        match self {
            Phases::Unity => BigComplex::from_real(Float::with_val(wide, 1)),
            Phases::PiMultiple(rho) => {
                // Quarter turns are exact.
                let quarter = Rational::from(rho * 2u32);
                if quarter.denom() == &1u32 {
                    let k = quarter.numer().to_u32().expect("reduced mod 4") as usize;
                    return BigComplex::from_real(Float::with_val(wide, 1)).mul_i_pow(k);
                }
                let pi = Float::with_val(wide + 32, rug::float::Constant::Pi);
                let angle = Float::with_val(wide + 32, pi * rho);
                BigComplex::cis(&angle, wide)
            }
            Phases::Angle { theta, .. } => BigComplex::cis(&Float::with_val(wide + 32, theta), wide),
            Phases::Shrinking(theta) => BigComplex::cis(theta, wide),
        }
    }

    fn advance(&mut self, base: LacunaryBase) {
        match self {
            Phases::Unity => {}
            Phases::PiMultiple(rho) => {
                let next = match base {
                    LacunaryBase::Two => Rational::from(&*rho << 1u32),
                    LacunaryBase::Half => Rational::from(&*rho >> 1u32),
                };
                *rho = reduce_mod2(next);
            }
            Phases::Angle { theta, two_pi } => {
                *theta <<= 1u32;
                if *theta >= *two_pi {
                    *theta -= &*two_pi;
                }
            }
            Phases::Shrinking(theta) => *theta >>= 1u32,
        }
    }
}

fn reduce_mod2(r: Rational) -> Rational {
    let half = Rational::from(&r / 2u32);
    let floor = Rational::from(half.floor_ref());
    r - floor * 2u32
}

fn reduce_angle(theta: BigReal, two_pi: &BigReal) -> BigReal {
    let prec = theta.prec();
    let turns = Float::with_val(prec, &theta / two_pi).floor();
    Float::with_val(prec, theta - turns * two_pi)
}

/// `log2` of `Σ_{m≥j} ω_m^n / m!` for the first discarded index `j`, or `+∞`
/// while the term ratio is not yet below one.
fn log2_tail(base: LacunaryBase, n: usize, j: usize, log2_fact_j: f64) -> f64 {
    let (log_first, log_ratio) = match base {
        LacunaryBase::Two => ((n * j) as f64 - log2_fact_j, n as f64 - ((j + 1) as f64).log2()),
        LacunaryBase::Half => (-((n * j) as f64) - log2_fact_j, -(n as f64) - ((j + 1) as f64).log2()),
    };
    if log_ratio >= -1e-12 {
        return f64::INFINITY;
    }
    log_first - (1.0 - 2f64.powf(log_ratio)).log2()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + 2f64.powf(lo - hi)).log2()
}

fn exp2_real(log2: f64) -> BigReal {
    if log2.is_infinite() && log2 > 0.0 {
        return Float::with_val(64, rug::float::Special::Infinity);
    }
    if log2 == f64::NEG_INFINITY {
        return Float::with_val(64, 0);
    }
    Float::with_val(64, log2).exp2()
}

pub(super) fn lacunary_jet(
    limits: &Limits,
    base: LacunaryBase,
    t: &Scalar,
    order: usize,
    ctx: &PrecisionContext,
    fixed_terms: Option<usize>,
) -> Result<(Jet, SeriesTruncation)> {
    if order > limits.max_order {
        return Err(Error::OrderCap {
            order,
            cap: limits.max_order,
            reason: "outer-series order limit",
        });
    }
    if base == LacunaryBase::Two && order > limits.lacunary_max_order {
        return Err(Error::OrderCap {
            order,
            cap: limits.lacunary_max_order,
            reason: "exponential outer-term cost",
        });
    }
    let budget = fixed_terms.unwrap_or(limits.max_outer_terms);
    // Rough outer-term need for base 2: the terms peak near m = 2^n.
    let estimate = match base {
        LacunaryBase::Two => ((1usize << order) as f64 * std::f64::consts::E) as usize + 256,
        LacunaryBase::Half => 256,
    };
    if fixed_terms.is_none() && base == LacunaryBase::Two && (1usize << order) > budget {
        return Err(Error::TruncationBudget {
            order,
            needed: estimate,
            limit: budget,
        });
    }

    let wide = ctx.working_bits();
    let fact_prec = wide + 32;
    let first_m: u32 = match base {
        LacunaryBase::Two => 0,
        LacunaryBase::Half => 1,
    };
    let mut max_m = estimate.min(budget) + first_m as usize;
    let mut phases = Phases::new(base, t, first_m, max_m, wide);
    let target_log2 = -(ctx.working_bits() as f64);

    let mut sums = vec![BigComplex::zero(wide); order + 1];
    let mut mass = vec![f64::NEG_INFINITY; order + 1];
    let mut tails = vec![f64::INFINITY; order + 1];
    let mut inv_fact = Float::with_val(fact_prec, 1);
    let mut log2_fact = 0.0f64;
    for k in 2..=first_m {
        inv_fact /= k;
        log2_fact += (k as f64).log2();
    }

    let mut m = first_m as usize;
    let mut used = 0usize;
    loop {
        if used >= budget {
            if fixed_terms.is_some() {
                break;
            }
            return Err(Error::TruncationBudget {
                order,
                needed: estimate.max(used + 1),
                limit: budget,
            });
        }
        if m > max_m {
            // Past the planned precision for doubling angles: restart them.
            max_m = 2 * m;
            if let Phases::Angle { .. } = phases {
                phases = Phases::new(base, t, first_m, max_m, wide);
                for _ in first_m as usize..m {
                    phases.advance(base);
                }
            }
        }
        let weight = phases.current(wide).scale(&inv_fact, wide);
        for (n, sum) in sums.iter_mut().enumerate() {
            let shift = i32::try_from(m * n).expect("shift fits");
            let term = match base {
                LacunaryBase::Two => weight.shl(shift),
                LacunaryBase::Half => weight.shl(-shift),
            };
            sum.add_assign_ref(&term);
            let log_mag = match base {
                LacunaryBase::Two => (m * n) as f64,
                LacunaryBase::Half => -((m * n) as f64),
            } - log2_fact;
            mass[n] = log_add(mass[n], log_mag);
        }
        used += 1;
        m += 1;
        inv_fact /= m as u32;
        log2_fact += (m as f64).log2();
        phases.advance(base);

        let mut done = true;
        for n in 0..=order {
            tails[n] = log2_tail(base, n, m, log2_fact);
            if !(tails[n] <= target_log2 + mass[n]) {
                done = false;
            }
        }
        if done && fixed_terms.is_none() {
            break;
        }
    }

    let worst = (0..=order)
        .map(|n| tails[n] - mass[n])
        .fold(f64::NEG_INFINITY, f64::max);
    let coeffs: Vec<BigComplex> = sums
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let f = Float::with_val(wide, factorial(n));
            s.mul_i_pow(n).div_at(&BigComplex::from_real(f), wide)
        })
        .collect();
    let coefficient_tails = (0..=order)
        .map(|n| {
            let l = tails[n] - log_factorial2(n);
            exp2_real(l)
        })
        .collect();
    let truncation = SeriesTruncation {
        outer_terms: used,
        tail_bound: exp2_real(worst),
        target: super::target_for(ctx),
        coefficient_tails,
        bound_safety: 1,
        exact_tail: false,
    };
    let jet = Jet::from_coeffs(t.value(), coeffs, ctx)?;
    Ok((jet, truncation))
}

fn log_factorial2(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).log2()).sum()
}
