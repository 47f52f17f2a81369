//! Truncated Taylor jets.
//!
//! A [`Jet`] of order `N` at center `t` stores `c_n = f^(n)(t) / n!` for
//! `n = 0..=N`. Products are Cauchy convolutions; `exp`, `sin`/`cos` and
//! division use the standard first-order recurrences, so computing at order
//! `N + 1` and dropping the last coefficient reproduces the order-`N` jet
//! exactly. Recurrences run at the context's working precision and results
//! are rounded to `ctx.bits()`.

use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{factorial, powi, BigComplex, BigReal, PrecisionContext};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    center: BigReal,
    coeffs: Vec<BigComplex>,
    ctx: PrecisionContext,
}

impl Jet {
    /// Jet of the identity function: `(t, 1, 0, …, 0)`.
    pub fn identity(center: &BigReal, order: usize, ctx: &PrecisionContext) -> Jet {
        let mut coeffs = vec![BigComplex::zero(ctx.bits()); order + 1];
        coeffs[0] = BigComplex::from_real(ctx.real(center));
        if order >= 1 {
            coeffs[1] = BigComplex::from_real(ctx.real(1));
        }
        Jet {
            center: ctx.real(center),
            coeffs,
            ctx: *ctx,
        }
    }

    /// Jet of a constant function: `(value, 0, …, 0)`.
    pub fn constant(
        center: &BigReal,
        value: &BigComplex,
        order: usize,
        ctx: &PrecisionContext,
    ) -> Jet {
        let mut coeffs = vec![BigComplex::zero(ctx.bits()); order + 1];
        coeffs[0] = value.with_prec(ctx.bits());
        Jet {
            center: ctx.real(center),
            coeffs,
            ctx: *ctx,
        }
    }

    pub fn constant_real(
        center: &BigReal,
        value: &BigReal,
        order: usize,
        ctx: &PrecisionContext,
    ) -> Jet {
        Self::constant(center, &BigComplex::from_real(value.clone()), order, ctx)
    }

    pub fn zero(center: &BigReal, order: usize, ctx: &PrecisionContext) -> Jet {
        Jet {
            center: ctx.real(center),
            coeffs: vec![BigComplex::zero(ctx.bits()); order + 1],
            ctx: *ctx,
        }
    }

    /// Builds a jet from scaled coefficients, rounding each to `ctx.bits()`.
    pub fn from_coeffs(
        center: &BigReal,
        coeffs: Vec<BigComplex>,
        ctx: &PrecisionContext,
    ) -> Result<Jet> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "a jet needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite jet coefficient".into()));
        }
        Ok(Jet {
            center: ctx.real(center),
            coeffs: coeffs.iter().map(|c| c.with_prec(ctx.bits())).collect(),
            ctx: *ctx,
        })
    }

    pub fn center(&self) -> &BigReal {
        &self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigComplex] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &BigComplex {
        &self.coeffs[n]
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    /// Raw derivative `f^(n)(t) = c_n · n!`.
    pub fn derivative(&self, n: usize) -> BigComplex {
        let k = self.ctx.real(factorial(n));
        self.coeffs[n].scale(&k, self.ctx.bits())
    }

    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order(), "cannot truncate to a higher order");
        Jet {
            center: self.center.clone(),
            coeffs: self.coeffs[..=order].to_vec(),
            ctx: self.ctx,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.coeffs.iter().all(BigComplex::is_zero)
    }

    /// Largest `|Im c_n| / |c_n|` over nonzero coefficients.
    pub fn max_imaginary_ratio(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| {
                let im = Float::with_val(64, c.im.abs_ref());
                (im / c.abs()).to_f64()
            })
            .fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::JetMismatch("precision contexts differ"));
        }
        if self.order() != other.order() {
            return Err(Error::JetMismatch("orders differ"));
        }
        if self.center != other.center {
            return Err(Error::JetMismatch("centers differ"));
        }
        Ok(())
    }

    fn with_coeffs(&self, coeffs: Vec<BigComplex>) -> Jet {
        Jet {
            center: self.center.clone(),
            coeffs,
            ctx: self.ctx,
        }
    }

    fn round_out(&self, coeffs: Vec<BigComplex>) -> Jet {
        let bits = self.ctx.bits();
        self.with_coeffs(coeffs.iter().map(|c| c.with_prec(bits)).collect())
    }

    /// Coefficient-wise `a·x + b·y`.
    pub fn linear(a: &BigComplex, x: &Jet, b: &BigComplex, y: &Jet) -> Result<Jet> {
        x.check_compatible(y)?;
        let bits = x.ctx.bits();
        let real = a.is_real() && b.is_real() && x.is_real() && y.is_real();
        let coeffs = x
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(xn, yn)| {
                if real {
                    let re = Float::with_val(bits, a.re.mul_add_mul_ref(&xn.re, &b.re, &yn.re));
                    BigComplex::from_real(re)
                } else {
                    let wide = x.ctx.working_bits();
                    let mut acc = BigComplex::zero(wide);
                    acc.add_product(a, xn);
                    acc.add_product(b, yn);
                    acc.with_prec(bits)
                }
            })
            .collect();
        Ok(x.with_coeffs(coeffs))
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        let one = BigComplex::from_real(self.ctx.real(1));
        Jet::linear(&one, self, &one, other)
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        let one = BigComplex::from_real(self.ctx.real(1));
        let minus_one = BigComplex::from_real(self.ctx.real(-1));
        Jet::linear(&one, self, &minus_one, other)
    }

    pub fn scale(&self, k: &BigComplex) -> Jet {
        let bits = self.ctx.bits();
        self.with_coeffs(self.coeffs.iter().map(|c| c.mul_at(k, bits)).collect())
    }

    pub fn neg(&self) -> Jet {
        self.with_coeffs(self.coeffs.iter().cloned().map(|c| -c).collect())
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(BigComplex::is_real)
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let wide = self.ctx.working_bits();
        let n_max = self.order();
        let mut out = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let mut acc = BigComplex::zero(wide);
            for i in 0..=n {
                let (a, b) = (&self.coeffs[i], &other.coeffs[n - i]);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                acc.add_product(a, b);
            }
            out.push(acc);
        }
        Ok(self.round_out(out))
    }

    /// Quotient `self / other` via `z_n = (x_n - Σ_{k≥1} y_k z_{n-k}) / y_0`.
    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let y0 = other.coeffs[0].abs();
        let scale = other
            .coeffs
            .iter()
            .map(BigComplex::abs)
            .max_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        let threshold = Float::with_val(self.ctx.bits(), &scale >> (self.ctx.bits() as i32 - 8));
        if y0.is_zero() || y0 < threshold {
            return Err(Error::NearZeroDivision);
        }
        let wide = self.ctx.working_bits();
        let y0 = other.coeffs[0].with_prec(wide);
        let mut z: Vec<BigComplex> = Vec::with_capacity(self.coeffs.len());
        for n in 0..self.coeffs.len() {
            let mut acc = self.coeffs[n].with_prec(wide);
            let mut conv = BigComplex::zero(wide);
            for k in 1..=n {
                let yk = &other.coeffs[k];
                if yk.is_zero() {
                    continue;
                }
                conv.add_product(yk, &z[n - k]);
            }
            acc = &acc - &conv;
            z.push(acc.div_at(&y0, wide));
        }
        Ok(self.round_out(z))
    }

    /// `exp ∘ self`.
    pub fn exp(&self) -> Jet {
        let wide = self.ctx.working_bits();
        let mut z: Vec<BigComplex> = Vec::with_capacity(self.coeffs.len());
        z.push(self.coeffs[0].exp_at(wide));
        for n in 1..self.coeffs.len() {
            let mut acc = BigComplex::zero(wide);
            for k in 1..=n {
                let xk = &self.coeffs[k];
                if xk.is_zero() {
                    continue;
                }
                let weighted = xk.scale(&Float::with_val(wide, k), wide);
                acc.add_product(&weighted, &z[n - k]);
            }
            let nn = Float::with_val(wide, n);
            z.push(BigComplex::new(
                Float::with_val(wide, &acc.re / &nn),
                Float::with_val(wide, &acc.im / &nn),
            ));
        }
        self.round_out(z)
    }

    /// `(sin ∘ self, cos ∘ self)` from the coupled recurrences
    /// `n s_n = Σ k x_k c_{n-k}`, `n c_n = -Σ k x_k s_{n-k}`.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let wide = self.ctx.working_bits();
        let (s0, c0) = self.coeffs[0].sin_cos_at(wide);
        let mut s = vec![s0];
        let mut c = vec![c0];
        for n in 1..self.coeffs.len() {
            let mut s_acc = BigComplex::zero(wide);
            let mut c_acc = BigComplex::zero(wide);
            for k in 1..=n {
                let xk = &self.coeffs[k];
                if xk.is_zero() {
                    continue;
                }
                let weighted = xk.scale(&Float::with_val(wide, k), wide);
                s_acc.add_product(&weighted, &c[n - k]);
                c_acc.add_product(&weighted, &s[n - k]);
            }
            let nn = Float::with_val(wide, n);
            s.push(BigComplex::new(
                Float::with_val(wide, &s_acc.re / &nn),
                Float::with_val(wide, &s_acc.im / &nn),
            ));
            c.push(BigComplex::new(
                -Float::with_val(wide, &c_acc.re / &nn),
                -Float::with_val(wide, &c_acc.im / &nn),
            ));
        }
        (self.round_out(s), self.round_out(c))
    }

    /// Re-expresses the jet of `f` at `a·t` as the jet of `g(s) = f(a·s)`
    /// at `s = t`: `c_n ← aⁿ c_n`.
    pub fn rescale_argument(&self, a: &BigReal, t: &BigReal) -> Result<Jet> {
        // The center may come from an exactly tagged product, so allow the
        // one rounding that separates it from `a·t` computed here.
        let expected = self.ctx.working(a * t);
        let gap = Float::with_val(self.ctx.working_bits(), &expected - &self.center).abs();
        if gap > self.ctx.ulp(&self.center) {
            return Err(Error::JetMismatch("jet is not centered at a·t"));
        }
        let bits = self.ctx.bits();
        let wide = self.ctx.working_bits();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                if n == 0 {
                    return c.clone();
                }
                let an = powi(a, n, wide);
                c.scale(&an, bits)
            })
            .collect();
        Ok(Jet {
            center: self.ctx.real(t),
            coeffs,
            ctx: self.ctx,
        })
    }

    /// Terms `c_n (x - t)^n` of the Taylor series at the center, evaluated at
    /// `x`. At `x = 0` these are the hat-series terms.
    pub fn taylor_terms_at(&self, x: &BigReal) -> Vec<BigComplex> {
        let bits = self.ctx.bits();
        let offset = self.ctx.working(x - &self.center);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| {
                let p = powi(&offset, n, bits);
                c.scale(&p, bits)
            })
            .collect()
    }
}

pub fn jet_seed_identity(center: &BigReal, order: usize, ctx: &PrecisionContext) -> Jet {
    Jet::identity(center, order, ctx)
}

pub fn jet_seed_constant(
    center: &BigReal,
    value: &BigComplex,
    order: usize,
    ctx: &PrecisionContext,
) -> Jet {
    Jet::constant(center, value, order, ctx)
}
