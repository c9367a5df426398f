//! Dense complex polynomials and Laurent polynomials with half-integer exponents.
//!
//! `Poly` stores coefficients constant term first. `Laurent` stores doubled
//! exponents so that `Z^{1/2}` bookkeeping is plain integer arithmetic.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Poly<T> {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Complex::one())
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The polynomial `c·z^k`.
    pub fn monomial(k: usize, c: Complex<T>) -> Self {
        let mut v = vec![Complex::zero(); k + 1];
        v[k] = c;
        Self::from_coeffs(v)
    }

    /// The identity polynomial `z`.
    pub fn var() -> Self {
        Self::monomial(1, Complex::one())
    }

    pub fn from_coeffs(mut coeffs: Vec<Complex<T>>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&x| Complex::new(T::lit(x), T::zero())).collect())
    }

    /// Monic-times-`leading` polynomial with exactly the given roots.
    ///
    /// Panics if `leading` is zero.
    pub fn from_roots(roots: &[Complex<T>], leading: Complex<T>) -> Self {
        assert!(!leading.is_zero(), "leading coefficient must be nonzero");
        Self::from_coeffs(expand_roots(roots, leading))
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex<T> {
        self.coeffs.get(k).copied().unwrap_or_else(Complex::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial mapped to 0.
    pub fn degree_or_zero(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn leading(&self) -> Complex<T> {
        self.coeffs.last().copied().unwrap_or_else(Complex::zero)
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs.iter().rev().fold(Complex::zero(), |acc, &c| acc * z + c)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn conj(&self) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    /// `p(z + delta)` by repeated synthetic division (Taylor shift).
    pub fn shift(&self, delta: Complex<T>) -> Self {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for k in (i..n.saturating_sub(1)).rev() {
                let hi = a[k + 1];
                a[k] = a[k] + delta * hi;
            }
        }
        Self::from_coeffs(a)
    }

    /// `p(lambda·z)`.
    pub fn scale_arg(&self, lambda: Complex<T>) -> Self {
        let mut pow = Complex::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &c in &self.coeffs {
            out.push(c * pow);
            pow = pow * lambda;
        }
        Self::from_coeffs(out)
    }

    /// `conj(p)(-z)`.
    pub fn star_reflect(&self) -> Self {
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { c.conj() } else { -c.conj() })
            .collect();
        Self::from_coeffs(out)
    }

    pub fn derivative(&self) -> Self {
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * T::from_usize(k).unwrap())
            .collect();
        Self::from_coeffs(out)
    }

    /// Long division: `self = q·d + r` with `deg r < deg d`. Panics on `d = 0`.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let dd = d.coeffs.len() - 1;
        if self.coeffs.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let lead = d.leading();
        let mut r = self.coeffs.clone();
        let mut q = vec![Complex::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let f = r[k + dd] / lead;
            q[k] = f;
            for (i, &dc) in d.coeffs.iter().enumerate() {
                r[k + i] = r[k + i] - f * dc;
            }
            r[k + dd] = Complex::zero();
        }
        r.truncate(dd);
        (Self::from_coeffs(q), Self::from_coeffs(r))
    }

    /// Largest coefficient modulus.
    pub fn norm_max(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Drops trailing coefficients whose modulus is at most `tol·‖p‖`.
    pub fn trim_relative(&self, tol: T) -> Self {
        let cut = tol * self.norm_max();
        let mut v = self.coeffs.clone();
        while v.last().is_some_and(|c| c.norm() <= cut) {
            v.pop();
        }
        Self::from_coeffs(v)
    }
}

fn expand_roots<T: Real>(roots: &[Complex<T>], leading: Complex<T>) -> Vec<Complex<T>> {
    // constant term first; multiply by (z - r) one root at a time
    let mut c = vec![leading];
    for &r in roots {
        let mut next = vec![Complex::zero(); c.len() + 1];
        for (k, &a) in c.iter().enumerate() {
            next[k + 1] = next[k + 1] + a;
            next[k] = next[k] - a * r;
        }
        c = next;
    }
    c
}

fn add_vecs<T: Real>(a: &[Complex<T>], b: &[Complex<T>], sign: T) -> Vec<Complex<T>> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            let x = a.get(k).copied().unwrap_or_else(Complex::zero);
            let y = b.get(k).copied().unwrap_or_else(Complex::zero);
            x + y * sign
        })
        .collect()
}

fn mul_vecs<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

impl<T: Real> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, o: &Poly<T>) -> Poly<T> {
        Poly::from_coeffs(add_vecs(&self.coeffs, &o.coeffs, T::one()))
    }
}

impl<T: Real> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, o: &Poly<T>) -> Poly<T> {
        Poly::from_coeffs(add_vecs(&self.coeffs, &o.coeffs, -T::one()))
    }
}

impl<T: Real> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, o: &Poly<T>) -> Poly<T> {
        Poly::from_coeffs(mul_vecs(&self.coeffs, &o.coeffs))
    }
}

impl<T: Real> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        self.scale(-Complex::one())
    }
}

/// Laurent polynomial in `Z^{1/2}`: `coeffs[k]` multiplies `Z^{(lo2 + k)/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent<T> {
    lo2: i64,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Laurent<T> {
    pub fn zero() -> Self {
        Laurent { lo2: 0, coeffs: Vec::new() }
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::from_parts(0, vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex::one())
    }

    /// `c·Z^{e2/2}`.
    pub fn monomial2(e2: i64, c: Complex<T>) -> Self {
        Self::from_parts(e2, vec![c])
    }

    /// `c·Z^e` for an integer exponent.
    pub fn monomial(e: i64, c: Complex<T>) -> Self {
        Self::monomial2(2 * e, c)
    }

    pub fn from_parts(lo2: i64, mut coeffs: Vec<Complex<T>>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        let lead_zeros = coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead_zeros == coeffs.len() {
            return Self::zero();
        }
        coeffs.drain(..lead_zeros);
        Laurent { lo2: lo2 + lead_zeros as i64, coeffs }
    }

    /// Builds from `(doubled exponent, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms2(terms: &[(i64, Complex<T>)]) -> Self {
        let Some(lo) = terms.iter().map(|t| t.0).min() else {
            return Self::zero();
        };
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut v = vec![Complex::zero(); (hi - lo + 1) as usize];
        for &(e, c) in terms {
            v[(e - lo) as usize] = v[(e - lo) as usize] + c;
        }
        Self::from_parts(lo, v)
    }

    /// Integer-exponent Laurent polynomial `Z^{shift}·p(Z)`.
    pub fn from_poly(p: &Poly<T>, shift: i64) -> Self {
        let mut v = Vec::with_capacity(2 * p.coeffs().len());
        for (k, &c) in p.coeffs().iter().enumerate() {
            if k > 0 {
                v.push(Complex::zero());
            }
            v.push(c);
        }
        Self::from_parts(2 * shift, v)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest doubled exponent (0 for the zero polynomial).
    pub fn lo2(&self) -> i64 {
        self.lo2
    }

    /// Highest doubled exponent (0 for the zero polynomial).
    pub fn hi2(&self) -> i64 {
        if self.is_zero() {
            0
        } else {
            self.lo2 + self.coeffs.len() as i64 - 1
        }
    }

    pub fn coeff2(&self, e2: i64) -> Complex<T> {
        let k = e2 - self.lo2;
        if k < 0 {
            return Complex::zero();
        }
        self.coeffs.get(k as usize).copied().unwrap_or_else(Complex::zero)
    }

    /// Nonzero `(doubled exponent, coefficient)` pairs in increasing order.
    pub fn terms2(&self) -> Vec<(i64, Complex<T>)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, &c)| (self.lo2 + k as i64, c))
            .collect()
    }

    pub fn leading(&self) -> Complex<T> {
        self.coeffs.last().copied().unwrap_or_else(Complex::zero)
    }

    pub fn lowest(&self) -> Complex<T> {
        self.coeffs.first().copied().unwrap_or_else(Complex::zero)
    }

    pub fn is_balanced(&self) -> bool {
        self.lo2 == -self.hi2()
    }

    /// Common exponent parity (0 integer, 1 half-integer); `None` if mixed.
    pub fn parity(&self) -> Option<i64> {
        let mut par = None;
        for (e, _) in self.terms2() {
            let p = e.rem_euclid(2);
            match par {
                None => par = Some(p),
                Some(q) if q != p => return None,
                _ => {}
            }
        }
        Some(par.unwrap_or(0))
    }

    /// Evaluates with the principal branch of `Z^{1/2}`.
    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        if self.is_zero() {
            return Complex::zero();
        }
        if self.parity() == Some(0) {
            let mut acc = Complex::zero();
            for (e2, c) in self.terms2().into_iter().rev() {
                let _ = e2;
                acc = acc + c * z.powi((e2 / 2) as i32);
            }
            return acc;
        }
        let s = z.sqrt();
        let body = self.coeffs.iter().rev().fold(Complex::<T>::zero(), |acc, &c| acc * s + c);
        body * s.powi(self.lo2 as i32)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::from_parts(self.lo2, self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Multiplies by `Z^{e2/2}`.
    pub fn shift_exp2(&self, e2: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Laurent { lo2: self.lo2 + e2, coeffs: self.coeffs.clone() }
    }

    /// `p(lambda·Z)`, using `lambda^{1/2}` on the principal branch for half-integer exponents.
    pub fn scale_arg(&self, lambda: Complex<T>) -> Self {
        let s = lambda.sqrt();
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * s.powi((self.lo2 + k as i64) as i32))
            .collect();
        Self::from_parts(self.lo2, out)
    }

    /// `p(lambda·Z)` for positive real `lambda`, exact in the sense of real powers.
    pub fn scale_arg_real(&self, lambda: T) -> Self {
        let s = lambda.sqrt();
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * s.powi((self.lo2 + k as i64) as i32))
            .collect();
        Self::from_parts(self.lo2, out)
    }

    /// `conj(p)(Z^{-1})`.
    pub fn star_reflect(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        Self::from_parts(-self.hi2(), coeffs)
    }

    pub fn norm_max(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Coefficients of `Z^{lo2/2}, Z^{lo2/2 + 1}, …` (every other stored slot).
    pub fn terms_dense_step2(&self) -> Vec<Complex<T>> {
        self.coeffs.iter().step_by(2).copied().collect()
    }

    /// Splits a single-parity Laurent polynomial as `Z^{lo2/2}·p(Z)`.
    fn as_shifted_poly(&self) -> Option<(i64, Poly<T>)> {
        if self.is_zero() {
            return Some((0, Poly::zero()));
        }
        self.parity()?;
        let coeffs = self.coeffs.iter().step_by(2).copied().collect();
        Some((self.lo2, Poly::from_coeffs(coeffs)))
    }

    /// Division `self = q·d + r` performed on the polynomial parts in `Z`.
    ///
    /// Both operands must have a single exponent parity.
    pub fn div_rem(&self, d: &Self) -> Option<(Self, Self)> {
        let (a2, n) = self.as_shifted_poly()?;
        let (b2, dp) = d.as_shifted_poly()?;
        if dp.is_zero() {
            return None;
        }
        if n.is_zero() {
            return Some((Self::zero(), Self::zero()));
        }
        let (q, r) = n.div_rem(&dp);
        let q_l = poly_to_laurent2(&q, a2 - b2);
        let r_l = poly_to_laurent2(&r, a2);
        Some((q_l, r_l))
    }
}

/// `Z^{lo2/2}·p(Z)`.
fn poly_to_laurent2<T: Real>(p: &Poly<T>, lo2: i64) -> Laurent<T> {
    let mut v = Vec::with_capacity(2 * p.coeffs().len());
    for (k, &c) in p.coeffs().iter().enumerate() {
        if k > 0 {
            v.push(Complex::zero());
        }
        v.push(c);
    }
    Laurent::from_parts(lo2, v)
}

impl<T: Real> Add for &Laurent<T> {
    type Output = Laurent<T>;
    fn add(self, o: &Laurent<T>) -> Laurent<T> {
        laurent_combine(self, o, T::one())
    }
}

impl<T: Real> Sub for &Laurent<T> {
    type Output = Laurent<T>;
    fn sub(self, o: &Laurent<T>) -> Laurent<T> {
        laurent_combine(self, o, -T::one())
    }
}

impl<T: Real> Neg for &Laurent<T> {
    type Output = Laurent<T>;
    fn neg(self) -> Laurent<T> {
        self.scale(-Complex::one())
    }
}

impl<T: Real> Mul for &Laurent<T> {
    type Output = Laurent<T>;
    fn mul(self, o: &Laurent<T>) -> Laurent<T> {
        if self.is_zero() || o.is_zero() {
            return Laurent::zero();
        }
        Laurent::from_parts(self.lo2 + o.lo2, mul_vecs(&self.coeffs, &o.coeffs))
    }
}

fn laurent_combine<T: Real>(a: &Laurent<T>, b: &Laurent<T>, sign: T) -> Laurent<T> {
    if a.is_zero() {
        return b.scale(Complex::new(sign, T::zero()));
    }
    if b.is_zero() {
        return a.clone();
    }
    let lo = a.lo2.min(b.lo2);
    let hi = a.hi2().max(b.hi2());
    let v = (lo..=hi).map(|e| a.coeff2(e) + b.coeff2(e) * sign).collect();
    Laurent::from_parts(lo, v)
}

/// Laurent polynomial of the form `a·Z^N + … + b·Z^{-N}`, `N` possibly half-integer.
#[derive(Clone, Debug, PartialEq)]
pub struct BalancedLaurent<T>(Laurent<T>);

impl<T: Real> BalancedLaurent<T> {
    /// `leading·Z^{-N/2}·Π(Z - r)` for the `N` given roots.
    pub fn from_roots(roots: &[Complex<T>], leading: Complex<T>) -> Result<Self> {
        if roots.iter().any(|r| r.is_zero()) {
            return Err(Error::ZeroRoot);
        }
        let p = Poly::from_roots(roots, leading);
        Ok(BalancedLaurent(poly_to_laurent2(&p, -(roots.len() as i64))))
    }

    pub fn as_laurent(&self) -> &Laurent<T> {
        &self.0
    }

    pub fn into_laurent(self) -> Laurent<T> {
        self.0
    }

    /// Doubled top exponent `2N`.
    pub fn span2(&self) -> i64 {
        self.0.hi2()
    }
}

impl<T: Real> TryFrom<Laurent<T>> for BalancedLaurent<T> {
    type Error = Error;
    fn try_from(l: Laurent<T>) -> Result<Self> {
        if l.is_balanced() && l.parity().is_some() {
            Ok(BalancedLaurent(l))
        } else {
            Err(Error::InvalidInput("Laurent polynomial is not balanced".into()))
        }
    }
}
