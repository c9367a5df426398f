//! Normal-form arithmetic in the algebras `A_c` and their q-analogs.
//!
//! Every element is a finite sum of terms `x^j R(z)` (or `x^j R(Z)`), with the
//! product rule `(x^j R)(x^k S) = x^{j+k} R(shift by k) S`. The shift is
//! `z ↦ z + k` in the filtered case and `Z ↦ q^{2k} Z` in the q case.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{BalancedLaurent, Laurent, Poly};
use crate::scalar::{real, real_pow, Real};

/// Absolute guard band used when comparing parameters against lattices.
pub const GENERICITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Filtered,
    Q,
}

/// Coefficient ring of a normal-form term.
pub trait Coefficient: Clone + Debug + PartialEq + Send + Sync + 'static {
    type Real: Real;
    /// Data the shift needs: nothing for polynomials, `q` for Laurent polynomials.
    type Ctx: Clone + Debug + PartialEq + Send + Sync;

    const VARIANT: Variant;

    fn zero() -> Self;
    fn constant(c: Complex<Self::Real>) -> Self;
    /// `z` resp. `Z`.
    fn generator() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn scaled(&self, c: Complex<Self::Real>) -> Self;
    fn norm(&self) -> Self::Real;
    /// Largest `|coeff|·r^k` (resp. `|coeff|·r^{|k|}`), a sup-norm proxy on the disk
    /// (resp. annulus) of radius `r`.
    fn norm_on(&self, radius: Self::Real) -> Self::Real;
    fn eval(&self, z: Complex<Self::Real>) -> Complex<Self::Real>;
    /// Eigenvalue of `R(z)` on the monomial `x^s`.
    fn act_on_power(&self, s: Complex<Self::Real>, ctx: &Self::Ctx) -> Complex<Self::Real>;
    /// `R(z + k)` resp. `R(q^{2k} Z)`; `k` may be a half-integer.
    fn weight_shift(&self, k: Self::Real, ctx: &Self::Ctx) -> Self;
    /// `conj(R)(-z)` resp. `conj(R)(Z^{-1})`.
    fn star_reflect(&self) -> Self;
    fn div_rem(&self, d: &Self) -> Option<(Self, Self)>;
    /// `l`-th point of the root progression starting at parameter `c`.
    fn progression_root(c: Complex<Self::Real>, l: i64, ctx: &Self::Ctx) -> Complex<Self::Real>;
    /// Monic (balanced, in the q case) polynomial with the given roots.
    fn monic_from_roots(roots: &[Complex<Self::Real>]) -> Self;
    /// Value of [`Coefficient::monic_from_roots`] at `z`, evaluated in product form.
    fn eval_monic_roots(roots: &[Complex<Self::Real>], z: Complex<Self::Real>) -> Complex<Self::Real>;
    /// Divides by the monic polynomial with the given simple roots, one linear
    /// factor at a time. Returns the quotient and the worst remainder relative
    /// normwise at that root; `None` if a Laurent input mixes exponent parities.
    fn deflate(&self, roots: &[Complex<Self::Real>]) -> Option<(Self, Self::Real)>;
    fn leading(&self) -> Complex<Self::Real>;
    /// Coefficient of the lowest power present.
    fn lowest(&self) -> Complex<Self::Real>;
    /// Polynomial degree; `None` for Laurent coefficients and for zero.
    fn poly_degree(&self) -> Option<usize>;
    /// Builds the algebra of this variant with parameters `c`.
    fn make_algebra(c: Vec<Complex<Self::Real>>, ctx: &Self::Ctx) -> Result<Algebra<Self>>;
}

impl<T: Real> Coefficient for Poly<T> {
    type Real = T;
    type Ctx = ();
    const VARIANT: Variant = Variant::Filtered;

    fn zero() -> Self {
        Poly::zero()
    }
    fn constant(c: Complex<T>) -> Self {
        Poly::constant(c)
    }
    fn generator() -> Self {
        Poly::var()
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn scaled(&self, c: Complex<T>) -> Self {
        self.scale(c)
    }
    fn norm(&self) -> T {
        self.norm_max()
    }
    fn norm_on(&self, radius: T) -> T {
        let mut w = T::one();
        let mut m = T::zero();
        for c in self.coeffs() {
            m = m.max(c.norm() * w);
            w = w * radius;
        }
        m
    }
    fn eval(&self, z: Complex<T>) -> Complex<T> {
        Poly::eval(self, z)
    }
    fn act_on_power(&self, s: Complex<T>, _: &()) -> Complex<T> {
        Poly::eval(self, s)
    }
    fn weight_shift(&self, k: T, _: &()) -> Self {
        self.shift(real(k))
    }
    fn star_reflect(&self) -> Self {
        Poly::star_reflect(self)
    }
    fn div_rem(&self, d: &Self) -> Option<(Self, Self)> {
        if d.is_zero() {
            None
        } else {
            Some(Poly::div_rem(self, d))
        }
    }
    fn progression_root(c: Complex<T>, l: i64, _: &()) -> Complex<T> {
        c + T::from_i64(l).unwrap()
    }
    fn monic_from_roots(roots: &[Complex<T>]) -> Self {
        Poly::from_roots(roots, Complex::one())
    }
    fn eval_monic_roots(roots: &[Complex<T>], z: Complex<T>) -> Complex<T> {
        roots.iter().fold(Complex::<T>::one(), |acc, &r| acc * (z - r))
    }
    fn deflate(&self, roots: &[Complex<T>]) -> Option<(Self, T)> {
        let (q, worst) = deflate_coeffs(self.coeffs(), roots);
        Some((Poly::from_coeffs(q), worst))
    }
    fn leading(&self) -> Complex<T> {
        Poly::leading(self)
    }
    fn lowest(&self) -> Complex<T> {
        self.coeffs().iter().copied().find(|c| !c.is_zero()).unwrap_or_else(Complex::zero)
    }
    fn poly_degree(&self) -> Option<usize> {
        self.degree()
    }
    fn make_algebra(c: Vec<Complex<T>>, _: &()) -> Result<Algebra<Self>> {
        Algebra::filtered(c)
    }
}

impl<T: Real> Coefficient for Laurent<T> {
    type Real = T;
    type Ctx = T;
    const VARIANT: Variant = Variant::Q;

    fn zero() -> Self {
        Laurent::zero()
    }
    fn constant(c: Complex<T>) -> Self {
        Laurent::constant(c)
    }
    fn generator() -> Self {
        Laurent::monomial(1, Complex::one())
    }
    fn is_zero(&self) -> bool {
        Laurent::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn scaled(&self, c: Complex<T>) -> Self {
        self.scale(c)
    }
    fn norm(&self) -> T {
        self.norm_max()
    }
    fn norm_on(&self, radius: T) -> T {
        let half = T::lit(0.5);
        self.terms2().into_iter().fold(T::zero(), |m, (e2, c)| {
            m.max(c.norm() * radius.powf(half * T::from_i64(e2.abs()).unwrap()))
        })
    }
    fn eval(&self, z: Complex<T>) -> Complex<T> {
        Laurent::eval(self, z)
    }
    fn act_on_power(&self, s: Complex<T>, q: &T) -> Complex<T> {
        // Z^{e2/2} acts on x^s by q^{e2·s}
        let lq = q.ln();
        self.terms2()
            .into_iter()
            .map(|(e2, c)| c * (s * lq * T::from_i64(e2).unwrap()).exp())
            .fold(Complex::zero(), |a, b| a + b)
    }
    fn weight_shift(&self, k: T, q: &T) -> Self {
        self.scale_arg_real(q.powf(k + k))
    }
    fn star_reflect(&self) -> Self {
        Laurent::star_reflect(self)
    }
    fn div_rem(&self, d: &Self) -> Option<(Self, Self)> {
        Laurent::div_rem(self, d)
    }
    fn progression_root(c: Complex<T>, l: i64, q: &T) -> Complex<T> {
        let two = T::lit(2.0);
        real_pow(*q, (c + T::from_i64(l).unwrap()) * two)
    }
    fn monic_from_roots(roots: &[Complex<T>]) -> Self {
        BalancedLaurent::from_roots(roots, Complex::one())
            .expect("progression roots are nonzero")
            .into_laurent()
    }
    fn eval_monic_roots(roots: &[Complex<T>], z: Complex<T>) -> Complex<T> {
        let prod = roots.iter().fold(Complex::<T>::one(), |acc, &r| acc * (z - r));
        let n = roots.len() as i32;
        let scale = if n % 2 == 0 { z.powi(-n / 2) } else { z.sqrt().powi(-n) };
        prod * scale
    }
    fn deflate(&self, roots: &[Complex<T>]) -> Option<(Self, T)> {
        if self.is_zero() {
            return Some((Laurent::zero(), T::zero()));
        }
        let n = roots.len() as i64;
        // a quotient of either parity is fine: weight spaces live in M[√Z]
        self.parity()?;
        let p: Vec<_> = self.terms_dense_step2();
        let (q, worst) = deflate_coeffs(&p, roots);
        // self = Z^{lo2/2} p, divisor = Z^{-n/2} Π(Z - r)
        let mut v = Vec::with_capacity(2 * q.len());
        for (k, &c) in q.iter().enumerate() {
            if k > 0 {
                v.push(Complex::zero());
            }
            v.push(c);
        }
        Some((Laurent::from_parts(self.lo2() + n, v), worst))
    }
    fn leading(&self) -> Complex<T> {
        Laurent::leading(self)
    }
    fn lowest(&self) -> Complex<T> {
        Laurent::lowest(self)
    }
    fn poly_degree(&self) -> Option<usize> {
        None
    }
    fn make_algebra(c: Vec<Complex<T>>, q: &T) -> Result<Algebra<Self>> {
        Algebra::q_deformed(c, *q)
    }
}

/// Synthetic division by `(z - r)` for each root, constant term first.
///
/// The reported residual is the normwise backward error `|p(r)| / (‖p‖∞ Σ|r|^k)`.
fn deflate_coeffs<T: Real>(coeffs: &[Complex<T>], roots: &[Complex<T>]) -> (Vec<Complex<T>>, T) {
    let mut a = coeffs.to_vec();
    let mut worst = T::zero();
    // forward deflation is stable for the smallest roots first
    let mut roots = roots.to_vec();
    roots.sort_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap_or(std::cmp::Ordering::Equal));
    for r in roots {
        if a.is_empty() {
            break;
        }
        let n = a.len();
        let norm = a.iter().fold(T::zero(), |m, c| m.max(c.norm()));
        let mut q = vec![Complex::zero(); n - 1];
        let mut acc = Complex::zero();
        let mut powers = T::zero();
        for k in (0..n).rev() {
            acc = acc * r + a[k];
            powers = powers * r.norm() + T::one();
            if k > 0 {
                q[k - 1] = acc;
            }
        }
        if norm > T::zero() {
            worst = worst.max(acc.norm() / (norm * powers));
        }
        a = q;
    }
    (a, worst)
}

/// Finite sum of normal-form terms `x^j R_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Element<C: Coefficient> {
    ctx: C::Ctx,
    terms: BTreeMap<i64, C>,
}

impl<C: Coefficient> Element<C> {
    pub fn zero(ctx: &C::Ctx) -> Self {
        Element { ctx: ctx.clone(), terms: BTreeMap::new() }
    }

    pub fn one(ctx: &C::Ctx) -> Self {
        Self::term(ctx, 0, C::constant(Complex::one()))
    }

    /// The single term `x^j R`.
    pub fn term(ctx: &C::Ctx, j: i64, r: C) -> Self {
        let mut e = Self::zero(ctx);
        if !r.is_zero() {
            e.terms.insert(j, r);
        }
        e
    }

    pub fn from_terms(ctx: &C::Ctx, terms: impl IntoIterator<Item = (i64, C)>) -> Self {
        let mut e = Self::zero(ctx);
        for (j, r) in terms {
            e.add_term(j, r);
        }
        e
    }

    pub fn ctx(&self) -> &C::Ctx {
        &self.ctx
    }

    pub fn terms(&self) -> &BTreeMap<i64, C> {
        &self.terms
    }

    pub fn coefficient(&self, j: i64) -> C {
        self.terms.get(&j).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, j: i64, r: C) {
        let sum = match self.terms.get(&j) {
            Some(old) => old.plus(&r),
            None => r,
        };
        if sum.is_zero() {
            self.terms.remove(&j);
        } else {
            self.terms.insert(j, sum);
        }
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.ctx == o.ctx {
            Ok(())
        } else {
            Err(Error::VariantMismatch)
        }
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = self.clone();
        for (&j, r) in &o.terms {
            out.add_term(j, r.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.try_add(&o.scale(-Complex::one()))
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let mut out = Self::zero(&self.ctx);
        for (&j, r) in &self.terms {
            for (&k, s) in &o.terms {
                let shifted = r.weight_shift(C::Real::from_i64(k).unwrap(), &self.ctx);
                out.add_term(j + k, shifted.times(s));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex<C::Real>) -> Self {
        Self::from_terms(&self.ctx, self.terms.iter().map(|(&j, r)| (j, r.scaled(c))))
    }

    /// Right multiplication by the coefficient `x^0 S`.
    pub fn mul_coefficient(&self, s: &C) -> Self {
        Self::from_terms(&self.ctx, self.terms.iter().map(|(&j, r)| (j, r.times(s))))
    }

    /// Largest coefficient modulus over all terms.
    pub fn norm(&self) -> C::Real {
        self.terms.values().fold(C::Real::zero(), |m, r| m.max(r.norm()))
    }

    /// Largest [`Coefficient::norm_on`] over all terms.
    pub fn norm_on(&self, radius: C::Real) -> C::Real {
        self.terms.values().fold(C::Real::zero(), |m, r| m.max(r.norm_on(radius)))
    }

    /// `x^k`-components of the image of `x^s`, as `k ↦ value`.
    pub fn act_on_power(&self, s: Complex<C::Real>) -> BTreeMap<i64, Complex<C::Real>> {
        self.terms.iter().map(|(&j, r)| (j, r.act_on_power(s, &self.ctx))).collect()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(&self.ctx);
        for _ in 0..k {
            acc = acc.try_mul(self).expect("same context");
        }
        acc
    }
}

impl<C: Coefficient> std::ops::Add for &Element<C> {
    type Output = Element<C>;
    fn add(self, o: &Element<C>) -> Element<C> {
        self.try_add(o).expect("elements of different algebras")
    }
}

impl<C: Coefficient> std::ops::Sub for &Element<C> {
    type Output = Element<C>;
    fn sub(self, o: &Element<C>) -> Element<C> {
        self.try_sub(o).expect("elements of different algebras")
    }
}

impl<C: Coefficient> std::ops::Mul for &Element<C> {
    type Output = Element<C>;
    fn mul(self, o: &Element<C>) -> Element<C> {
        self.try_mul(o).expect("elements of different algebras")
    }
}

/// `A_c` or its q-analog, with its generators and defining polynomial.
#[derive(Clone, Debug)]
pub struct Algebra<C: Coefficient> {
    params: Vec<Complex<C::Real>>,
    ctx: C::Ctx,
    defining: C,
    u: Element<C>,
    v: Element<C>,
    cartan: Element<C>,
}

/// Rejects parameter pairs whose difference lies within the guard band of `lattice`.
fn check_generic<T: Real>(c: &[Complex<T>], distance: impl Fn(Complex<T>) -> T) -> Result<()> {
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let d = distance(c[i] - c[j]);
            if d.to_f64_lossy() <= GENERICITY_TOL {
                return Err(Error::GenericityViolation { i, j, distance: d.to_f64_lossy() });
            }
        }
    }
    Ok(())
}

fn frac_distance<T: Real>(x: T) -> T {
    (x - x.round()).abs()
}

/// Distance from `d` to the integer lattice.
pub fn integer_lattice_distance<T: Real>(d: Complex<T>) -> T {
    frac_distance(d.re).hypot(d.im)
}

/// Distance from `d` to `ℤ + (πi/ln q)ℤ`.
pub fn q_lattice_distance<T: Real>(d: Complex<T>, q: T) -> T {
    let period = T::PI() / q.ln().abs();
    let im = d.im - period * (d.im / period).round();
    frac_distance(d.re).hypot(im)
}

impl<T: Real> Algebra<Poly<T>> {
    /// `A_c` realized by `v = x`, `z = x∂_x`, `u = x^{-1}Π(z - c_i)`.
    pub fn filtered(c: Vec<Complex<T>>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::InvalidInput("at least one parameter is required".into()));
        }
        check_generic(&c, integer_lattice_distance)?;
        let half = T::lit(0.5);
        let shifted: Vec<_> = c.iter().map(|&ci| ci - half).collect();
        let defining = Poly::from_roots(&shifted, Complex::one());
        let u = Element::term(&(), -1, Poly::from_roots(&c, Complex::one()));
        let v = Element::term(&(), 1, Poly::one());
        let cartan = Element::term(&(), 0, Poly::var());
        Ok(Algebra { params: c, ctx: (), defining, u, v, cartan })
    }

    /// Filtration degree `max(n·j + 2·deg R)`; `None` for the zero element.
    pub fn filtration_degree(&self, e: &Element<Poly<T>>) -> Option<i64> {
        let n = self.n() as i64;
        e.terms().iter().map(|(&j, r)| n * j + 2 * r.degree_or_zero() as i64).max()
    }
}

impl<T: Real> Algebra<Laurent<T>> {
    /// q-analog realized by `u = x`, `Z = D` and the normalized `v`.
    pub fn q_deformed(c: Vec<Complex<T>>, q: T) -> Result<Self> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::InvalidQ { q: q.to_f64_lossy() });
        }
        let n = c.len();
        if n == 0 || n % 2 == 1 {
            return Err(Error::ParityViolation { n });
        }
        check_generic(&c, |d| q_lattice_distance(d, q))?;
        let sum: Complex<T> = c.iter().fold(Complex::zero(), |a, &b| a + b);
        if integer_lattice_distance(sum).to_f64_lossy() > GENERICITY_TOL {
            return Err(Error::SumNotInteger { sum_re: sum.re.to_f64_lossy(), sum_im: sum.im.to_f64_lossy() });
        }
        let m = (n / 2) as i64;
        let sigma = sum.re.round();
        let kappa = q.powf(-sigma);
        let two = T::lit(2.0);

        let roots: Vec<_> = c.iter().map(|&ci| real_pow(q, ci * two)).collect();
        let raw = BalancedLaurent::from_roots(&roots, real(kappa)).unwrap().into_laurent();
        let v = Element::term(&q, -1, raw);

        let shifted: Vec<_> = c.iter().map(|&ci| real_pow(q, ci * two - T::one())).collect();
        let lead = kappa * q.powi(m as i32);
        let defining = BalancedLaurent::from_roots(&shifted, real(lead)).unwrap().into_laurent();

        let u = Element::term(&q, 1, Laurent::one());
        let cartan = Element::term(&q, 0, Laurent::monomial(1, Complex::one()));
        Ok(Algebra { params: c, ctx: q, defining, u, v, cartan })
    }

    pub fn q(&self) -> T {
        self.ctx
    }
}

impl<C: Coefficient> Algebra<C> {
    pub fn variant(&self) -> Variant {
        C::VARIANT
    }

    pub fn n(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[Complex<C::Real>] {
        &self.params
    }

    pub fn ctx(&self) -> &C::Ctx {
        &self.ctx
    }

    pub fn defining_poly(&self) -> &C {
        &self.defining
    }

    pub fn u(&self) -> &Element<C> {
        &self.u
    }

    pub fn v(&self) -> &Element<C> {
        &self.v
    }

    /// `z` in the filtered case, `Z` in the q case.
    pub fn cartan(&self) -> &Element<C> {
        &self.cartan
    }

    /// The generator `x` of weight +1 (`v` filtered, `u` in the q case).
    pub fn raising(&self) -> &Element<C> {
        match C::VARIANT {
            Variant::Filtered => &self.v,
            Variant::Q => &self.u,
        }
    }

    /// The generator of weight −1 (`u` filtered, `v` in the q case).
    pub fn lowering(&self) -> &Element<C> {
        match C::VARIANT {
            Variant::Filtered => &self.u,
            Variant::Q => &self.v,
        }
    }

    pub fn one(&self) -> Element<C> {
        Element::one(&self.ctx)
    }

    pub fn zero(&self) -> Element<C> {
        Element::zero(&self.ctx)
    }

    pub fn term(&self, j: i64, r: C) -> Element<C> {
        Element::term(&self.ctx, j, r)
    }

    /// `q^k` in the q case, 1 in the filtered case.
    pub fn ctx_shift_factor(&self, k: C::Real) -> Complex<C::Real> {
        C::generator().weight_shift(k / C::Real::lit(2.0), &self.ctx).leading()
    }

    /// Coefficient `L_k` in `lowering^k = x^{-k} L_k`.
    pub fn lowering_power_coefficient(&self, k: u32) -> C {
        let base = self.lowering().coefficient(-1);
        let mut acc = C::constant(Complex::one());
        for l in 0..k {
            let s = C::Real::from_u32(l).unwrap();
            acc = acc.times(&base.weight_shift(-s, &self.ctx));
        }
        acc
    }

    /// Named coefficientwise residuals of the defining relations.
    pub fn relation_residuals(&self) -> Vec<(&'static str, C::Real)> {
        let half = C::Real::lit(0.5);
        // uv = P(z + 1/2) filtered, P(q^{-1}Z) in the q case; vu the other way
        let toward = match C::VARIANT {
            Variant::Filtered => half,
            Variant::Q => -half,
        };
        let p_plus = self.term(0, self.defining.weight_shift(toward, &self.ctx));
        let p_minus = self.term(0, self.defining.weight_shift(-toward, &self.ctx));
        let uv = &self.u * &self.v;
        let vu = &self.v * &self.u;
        let mut out = vec![("uv", (&uv - &p_plus).norm()), ("vu", (&vu - &p_minus).norm())];
        match C::VARIANT {
            Variant::Filtered => {
                let z = &self.cartan;
                let zu = &(&(z * &self.u) - &(&self.u * z)) + &self.u;
                let zv = &(&(z * &self.v) - &(&self.v * z)) - &self.v;
                out.push(("[z,u]+u", zu.norm()));
                out.push(("[z,v]-v", zv.norm()));
            }
            Variant::Q => {
                let z_inv = self.term(0, C::generator().star_reflect());
                let lhs = &(&self.cartan * &self.u) * &z_inv;
                // q^2 read off as the leading coefficient of Z shifted once
                let q2 = self.cartan.coefficient(0).weight_shift(C::Real::one(), &self.ctx).leading();
                out.push(("ZuZ^-1-q^2u", (&lhs - &self.u.scale(q2)).norm()));
            }
        }
        out
    }

    /// Largest defining-relation residual.
    pub fn max_relation_residual(&self) -> C::Real {
        self.relation_residuals().into_iter().fold(C::Real::zero(), |m, (_, r)| m.max(r))
    }
}
