//! The bimodules `M_{c,c'}` of operators sending each `x^{c'_i}C[x]` into `x^{c_i}C[x]`.
//!
//! The weight-`j` part is `x^j R_j · C[z]` (resp. `C[Z^{±1}]`), with `R_j` monic and
//! its roots read off from arithmetic progressions of the parameters.

use std::collections::HashMap;
use std::sync::RwLock;

use num_complex::Complex;
use num_traits::{FromPrimitive, One};

use crate::algebra::{Algebra, Coefficient, Element, Variant, GENERICITY_TOL};
use crate::error::{Error, Result};
use crate::scalar::{as_integer, Real};

/// Relative remainder accepted by the divisibility test.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug)]
pub struct Bimodule<C: Coefficient> {
    left: Algebra<C>,
    right: Algebra<C>,
    gaps: Vec<i64>,
    rj: RwLock<HashMap<i64, C>>,
}

impl<C: Coefficient> Clone for Bimodule<C> {
    fn clone(&self) -> Self {
        Bimodule {
            left: self.left.clone(),
            right: self.right.clone(),
            gaps: self.gaps.clone(),
            rj: RwLock::new(self.rj.read().unwrap().clone()),
        }
    }
}

impl<C: Coefficient> Bimodule<C> {
    /// `M_{c,c'}` for left parameters `c` and right parameters `c'`.
    pub fn new(c: Vec<Complex<C::Real>>, c_prime: Vec<Complex<C::Real>>, ctx: &C::Ctx) -> Result<Self> {
        if c.len() != c_prime.len() {
            return Err(Error::LengthMismatch { left: c.len(), right: c_prime.len() });
        }
        let tol = C::Real::lit(GENERICITY_TOL);
        let gaps = c
            .iter()
            .zip(&c_prime)
            .enumerate()
            .map(|(i, (&a, &b))| as_integer(a - b, tol).ok_or(Error::NonIntegerGap { i }))
            .collect::<Result<Vec<_>>>()?;
        let left = C::make_algebra(c, ctx)?;
        let right = C::make_algebra(c_prime, ctx)?;
        Ok(Bimodule { left, right, gaps, rj: RwLock::new(HashMap::new()) })
    }

    /// The regular bimodule `A_c = M_{c,c}`.
    pub fn regular(alg: &Algebra<C>) -> Self {
        let gaps = vec![0; alg.n()];
        Bimodule { left: alg.clone(), right: alg.clone(), gaps, rj: RwLock::new(HashMap::new()) }
    }

    /// `M_{c',c}`, the bimodule the conjugation lands in.
    pub fn swapped(&self) -> Self {
        Bimodule {
            left: self.right.clone(),
            right: self.left.clone(),
            gaps: self.gaps.iter().map(|d| -d).collect(),
            rj: RwLock::new(HashMap::new()),
        }
    }

    pub fn variant(&self) -> Variant {
        C::VARIANT
    }

    pub fn left(&self) -> &Algebra<C> {
        &self.left
    }

    pub fn right(&self) -> &Algebra<C> {
        &self.right
    }

    pub fn ctx(&self) -> &C::Ctx {
        self.left.ctx()
    }

    pub fn n(&self) -> usize {
        self.gaps.len()
    }

    /// Integer gaps `c_i - c'_i`.
    pub fn gaps(&self) -> &[i64] {
        &self.gaps
    }

    pub fn is_regular(&self) -> bool {
        self.gaps.iter().all(|&d| d == 0)
    }

    /// Roots of `R_j`: `progression(c'_i, l)` for `0 ≤ l < c_i - c'_i - j`.
    pub fn rj_roots(&self, j: i64) -> Vec<Complex<C::Real>> {
        let mut roots = Vec::new();
        for (i, &d) in self.gaps.iter().enumerate() {
            for l in 0..(d - j).max(0) {
                roots.push(C::progression_root(self.right.params()[i], l, self.ctx()));
            }
        }
        roots
    }

    pub fn rj(&self, j: i64) -> C {
        if let Some(r) = self.rj.read().unwrap().get(&j) {
            return r.clone();
        }
        let r = C::monic_from_roots(&self.rj_roots(j));
        self.rj.write().unwrap().entry(j).or_insert(r).clone()
    }

    /// `R_j(z)` evaluated in product form.
    pub fn rj_at(&self, j: i64, z: Complex<C::Real>) -> Complex<C::Real> {
        C::eval_monic_roots(&self.rj_roots(j), z)
    }

    /// Roots of `L_j = R_j / R_{j+1}`: the last point of each progression.
    pub fn lj_roots(&self, j: i64) -> Vec<Complex<C::Real>> {
        self.gaps
            .iter()
            .enumerate()
            .filter(|(_, &d)| d - j - 1 >= 0)
            .map(|(i, &d)| C::progression_root(self.right.params()[i], d - j - 1, self.ctx()))
            .collect()
    }

    /// `L_j = R_j / R_{j+1}`.
    pub fn lj(&self, j: i64) -> C {
        C::monic_from_roots(&self.lj_roots(j))
    }

    /// Quotient of a weight-`j` coefficient by `R_j`, with its relative remainder.
    fn divide_rj(&self, j: i64, r: &C) -> Result<C> {
        let bad = |remainder: f64| Error::MembershipViolation { weight: j, remainder };
        let (q, rel) = r.deflate(&self.rj_roots(j)).ok_or_else(|| bad(1.0))?;
        if rel.to_f64_lossy() > MEMBERSHIP_TOL {
            return Err(bad(rel.to_f64_lossy()));
        }
        Ok(q)
    }

    /// Checks every term's divisibility by `R_j`.
    ///
    /// Division is synthetic, one root at a time; each remainder is measured
    /// against the Horner magnitude bound at that root.
    pub fn check_membership(&self, e: &Element<C>) -> Result<()> {
        for (&j, r) in e.terms() {
            self.divide_rj(j, r)?;
        }
        Ok(())
    }

    pub fn membership(&self, e: &Element<C>) -> bool {
        self.check_membership(e).is_ok()
    }

    /// Writes a member as `Σ x^j R_j Q_j`, returning the quotients `Q_j`.
    pub fn reduced_coefficients(&self, e: &Element<C>) -> Result<Vec<(i64, C)>> {
        e.terms().iter().map(|(&j, r)| Ok((j, self.divide_rj(j, r)?))).collect()
    }

    /// `x^j R_j · z^k` for `k = 0..=D` (filtered) or `x^j R_j · Z^k` for `k = -D..=D` (q).
    pub fn basis(&self, j: i64, degree: usize) -> Vec<Element<C>> {
        self.basis_monomials(degree)
            .into_iter()
            .map(|mono| Element::term(self.ctx(), j, self.rj(j).times(&mono)))
            .collect()
    }

    /// The monomials `z^k` resp. `Z^k` multiplying `R_j` in [`Self::basis`].
    pub fn basis_monomials(&self, degree: usize) -> Vec<C> {
        let gen = C::generator();
        match C::VARIANT {
            Variant::Filtered => {
                let mut out = vec![C::constant(Complex::one())];
                for k in 1..=degree {
                    out.push(out[k - 1].times(&gen));
                }
                out
            }
            Variant::Q => {
                let inv = gen.star_reflect();
                let d = degree as i64;
                (-d..=d)
                    .map(|k| {
                        let (base, reps) = if k < 0 { (&inv, -k) } else { (&gen, k) };
                        (0..reps).fold(C::constant(Complex::one()), |acc, _| acc.times(base))
                    })
                    .collect()
            }
        }
    }

    /// Product `M_{c,c'} × M_{c',c} → A_c`, with the landing membership asserted.
    pub fn morita_mul(&self, m: &Element<C>, n: &Element<C>) -> Result<Element<C>> {
        let p = m.try_mul(n)?;
        Bimodule::regular(&self.left).check_membership(&p)?;
        Ok(p)
    }

    /// Half-integer parameter shift `m ↦ x^r m x^r` with `r = twice_r / 2`.
    pub fn shift_parameters(&self, twice_r: i64) -> Result<ParameterShift<C>> {
        let r = C::Real::from_i64(twice_r).unwrap() / C::Real::lit(2.0);
        let c: Vec<_> = self.left.params().iter().map(|&x| x + r).collect();
        let cp: Vec<_> = self.right.params().iter().map(|&x| x - r).collect();
        let target = Bimodule::new(c, cp, self.ctx())?;
        Ok(ParameterShift { target, twice_r, r })
    }
}

/// The isomorphism `M_{c,c'} → M_{c+r,c'-r}`, `m ↦ x^r m x^r`.
#[derive(Clone, Debug)]
pub struct ParameterShift<C: Coefficient> {
    target: Bimodule<C>,
    twice_r: i64,
    r: C::Real,
}

impl<C: Coefficient> ParameterShift<C> {
    pub fn target(&self) -> &Bimodule<C> {
        &self.target
    }

    pub fn apply(&self, m: &Element<C>) -> Element<C> {
        let ctx = m.ctx();
        Element::from_terms(
            ctx,
            m.terms().iter().map(|(&j, r)| (j + self.twice_r, r.weight_shift(self.r, ctx))),
        )
    }

    /// `x^r g x^{-r}`: the image of a left multiplier.
    pub fn left_image(&self, g: &Element<C>) -> Element<C> {
        let ctx = g.ctx();
        Element::from_terms(ctx, g.terms().iter().map(|(&j, r)| (j, r.weight_shift(-self.r, ctx))))
    }

    /// `x^{-r} g x^r`: the image of a right multiplier.
    pub fn right_image(&self, g: &Element<C>) -> Element<C> {
        let ctx = g.ctx();
        Element::from_terms(ctx, g.terms().iter().map(|(&j, r)| (j, r.weight_shift(self.r, ctx))))
    }
}
