//! Antilinear conjugations `ρ: A_c → A_{c'}` and the induced isomorphism
//! `φ: M_{c,c'} → M_{c',c}`, `x^j R_j R ↦ x^{-j} S_{-j} R^*`.
//!
//! Filtered: `v ↦ a u`, `u ↦ b v`, `z ↦ -z`, with `a = ε iⁿ e^{-πiτ}`, `ab = (-1)^n`.
//! q: `u ↦ a v`, `v ↦ b u`, `Z ↦ Z^{-1}`, with `a = |a| e^{2πis}`, `ab = 1`.

use std::collections::HashMap;
use std::sync::RwLock;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Coefficient, Element, Variant, GENERICITY_TOL};
use crate::bimodule::Bimodule;
use crate::error::{Error, Result};
use crate::poly::{Laurent, Poly};
use crate::scalar::{i_pow, sign_pow, Real};

/// Scalars selecting `a` and `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoChoice {
    /// `a = ε iⁿ e^{-πiτ}`; the twist is `t = e^{2πiτ}`.
    Filtered { epsilon: i8, tau: f64 },
    /// `a = |a| e^{2πis}`, `b = 1/a`.
    Q { abs_a: f64, s: f64 },
}

/// Finds `σ` with `c_i + conj(c'_{σ(i)}) = 1`.
pub fn find_pairing<T: Real>(c: &[Complex<T>], c_prime: &[Complex<T>]) -> Result<Vec<usize>> {
    let tol = T::lit(GENERICITY_TOL);
    let mut sigma = Vec::with_capacity(c.len());
    for (i, &ci) in c.iter().enumerate() {
        let hits: Vec<usize> = c_prime
            .iter()
            .enumerate()
            .filter(|(_, cj)| (ci + cj.conj() - T::one()).norm() <= tol)
            .map(|(j, _)| j)
            .collect();
        match hits.as_slice() {
            [] => return Err(Error::NoPairing { i }),
            [j] if sigma.contains(j) => return Err(Error::AmbiguousPairing { i }),
            [j] => sigma.push(*j),
            _ => return Err(Error::AmbiguousPairing { i }),
        }
    }
    Ok(sigma)
}

#[derive(Debug)]
pub struct Conjugation<C: Coefficient> {
    module: Bimodule<C>,
    choice: RhoChoice,
    a: Complex<C::Real>,
    b: Complex<C::Real>,
    sigma: Vec<usize>,
    base_scalar: Complex<C::Real>,
    sj: RwLock<HashMap<i64, C>>,
}

impl<C: Coefficient> Clone for Conjugation<C> {
    fn clone(&self) -> Self {
        Conjugation {
            module: self.module.clone(),
            choice: self.choice,
            a: self.a,
            b: self.b,
            sigma: self.sigma.clone(),
            base_scalar: self.base_scalar,
            sj: RwLock::new(self.sj.read().unwrap().clone()),
        }
    }
}

impl<T: Real> Conjugation<Poly<T>> {
    pub fn filtered(module: Bimodule<Poly<T>>, epsilon: i8, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidTau { tau });
        }
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::InvalidInput(format!("epsilon must be ±1, got {epsilon}")));
        }
        let n = module.n() as i64;
        let unit = i_pow::<T>(n) * T::from_i8(epsilon).unwrap();
        let phase = T::PI() * T::lit(tau);
        let a = unit * Complex::new(phase.cos(), -phase.sin());
        let b = unit * Complex::new(phase.cos(), phase.sin());
        Self::assemble(module, RhoChoice::Filtered { epsilon, tau }, a, b, filtered_base)
    }
}

impl<T: Real> Conjugation<Laurent<T>> {
    pub fn q_deformed(module: Bimodule<Laurent<T>>, abs_a: f64, s: f64) -> Result<Self> {
        if !(abs_a > 0.0) || !abs_a.is_finite() {
            return Err(Error::InvalidInput(format!("|a| must be positive, got {abs_a}")));
        }
        let angle = T::lit(2.0 * std::f64::consts::PI * s);
        let a = Complex::from_polar(T::lit(abs_a), angle);
        let b = a.inv();
        Self::assemble(module, RhoChoice::Q { abs_a, s }, a, b, q_base)
    }
}

fn s_roots<C: Coefficient>(m: &Bimodule<C>, j: i64) -> Vec<Complex<C::Real>> {
    let mut roots = Vec::new();
    for (i, &d) in m.gaps().iter().enumerate() {
        for l in 0..(-d - j).max(0) {
            roots.push(C::progression_root(m.left().params()[i], l, m.ctx()));
        }
    }
    roots
}

fn monic_s<C: Coefficient>(m: &Bimodule<C>, j: i64) -> C {
    C::monic_from_roots(&s_roots(m, j))
}

/// `C_0 = C_φ (-1)^{deg R_0}` with `C_φ = i^{Σ(c_i - c'_i)}`, the choice making the
/// rs-products real on their lines.
fn filtered_base<C: Coefficient>(m: &Bimodule<C>) -> Complex<C::Real> {
    let gap_sum: i64 = m.gaps().iter().sum();
    let deg_r0 = m.rj_roots(0).len() as i64;
    i_pow::<C::Real>(gap_sum) * sign_pow::<C::Real>(deg_r0)
}

/// Unimodular `C_0` making `R_0 S_0` real on the unit circle.
fn q_base<C: Coefficient>(m: &Bimodule<C>) -> Complex<C::Real> {
    let low = m.rj(0).times(&monic_s(m, 0)).lowest();
    let arg = low.im.atan2(low.re);
    Complex::from_polar(C::Real::one(), -arg / C::Real::lit(2.0))
}

impl<C: Coefficient> Conjugation<C> {
    fn assemble(
        module: Bimodule<C>,
        choice: RhoChoice,
        a: Complex<C::Real>,
        b: Complex<C::Real>,
        base: impl FnOnce(&Bimodule<C>) -> Complex<C::Real>,
    ) -> Result<Self> {
        let sigma = find_pairing(module.left().params(), module.right().params())?;
        let base_scalar = base(&module);
        Ok(Conjugation { module, choice, a, b, sigma, base_scalar, sj: RwLock::new(HashMap::new()) })
    }

    /// Same `a, b` on `M_{c',c}`; the composite with `self` is the twist.
    pub fn reverse(&self) -> Result<Self> {
        let module = self.module.swapped();
        match self.choice {
            RhoChoice::Filtered { .. } => Self::assemble(module, self.choice, self.a, self.b, filtered_base),
            RhoChoice::Q { .. } => Self::assemble(module, self.choice, self.a, self.b, q_base),
        }
    }

    pub fn module(&self) -> &Bimodule<C> {
        &self.module
    }

    pub fn choice(&self) -> RhoChoice {
        self.choice
    }

    pub fn a(&self) -> Complex<C::Real> {
        self.a
    }

    pub fn b(&self) -> Complex<C::Real> {
        self.b
    }

    /// `σ(i)` as 0-based indices into `c'`.
    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    /// Largest `|c_i + conj(c'_{σ(i)}) - 1|`.
    pub fn pairing_residual(&self) -> C::Real {
        let c = self.module.left().params();
        let cp = self.module.right().params();
        self.sigma
            .iter()
            .enumerate()
            .map(|(i, &j)| (c[i] + cp[j].conj() - C::Real::one()).norm())
            .fold(C::Real::zero(), |m, r| m.max(r))
    }

    /// Twist `t = conj(a)·b`, the eigenvalue of `ρ²` on weight 1.
    pub fn twist(&self) -> Complex<C::Real> {
        self.a.conj() * self.b
    }

    /// Roots of `S_j`: `progression(c_i, l)` for `0 ≤ l < c'_i - c_i - j`.
    pub fn sj_roots(&self, j: i64) -> Vec<Complex<C::Real>> {
        s_roots(&self.module, j)
    }

    /// Ratio `C_{-j-1} / C_{-j}` of consecutive `S` scalars, read off the leading
    /// coefficients of `M_{-j-1}(z)·L_j^*(z) = a·P_{c'}(shifted by -1/2 - j)`.
    fn scalar_step(&self, j: i64) -> Complex<C::Real> {
        let ctx = self.module.ctx();
        let half = C::Real::lit(0.5);
        let shift = -half - C::Real::from_i64(j).unwrap();
        let rhs = self.module.right().defining_poly().weight_shift(shift, ctx).leading();
        let lhs = self.module.lj(j).star_reflect().leading();
        self.a * rhs / lhs
    }

    /// Scalar `C_k` with `S_k = C_k · (monic S_k)`.
    pub fn sj_scalar(&self, k: i64) -> Complex<C::Real> {
        let mut c = self.base_scalar;
        if k < 0 {
            for idx in 0..-k {
                c = c * self.scalar_step(idx);
            }
        } else {
            for idx in 1..=k {
                c = c / self.scalar_step(-idx);
            }
        }
        c
    }

    pub fn sj(&self, k: i64) -> C {
        if let Some(s) = self.sj.read().unwrap().get(&k) {
            return s.clone();
        }
        let s = monic_s(&self.module, k).scaled(self.sj_scalar(k));
        self.sj.write().unwrap().entry(k).or_insert(s).clone()
    }

    /// `S_k(z)` evaluated in product form.
    pub fn sj_at(&self, k: i64, z: Complex<C::Real>) -> Complex<C::Real> {
        self.sj_scalar(k) * C::eval_monic_roots(&self.sj_roots(k), z)
    }

    /// `M_{-j-1} = S_{-j-1} / S_{-j}`, built from the one new root per index.
    pub fn mj(&self, j: i64) -> C {
        let m = &self.module;
        let roots: Vec<_> = m
            .gaps()
            .iter()
            .enumerate()
            .filter(|(_, &d)| -d + j >= 0)
            .map(|(i, &d)| C::progression_root(m.left().params()[i], -d + j, m.ctx()))
            .collect();
        C::monic_from_roots(&roots).scaled(self.sj_scalar(-j - 1) / self.sj_scalar(-j))
    }

    /// `ρ` from `source` to `target`, both built from the conjugate parameter sets.
    pub fn rho_between(&self, g: &Element<C>, source: &Algebra<C>, target: &Algebra<C>) -> Result<Element<C>> {
        let mut out = target.zero();
        for (&k, p) in g.terms() {
            let img = if k >= 0 {
                let mono = target.term(-k, target.lowering_power_coefficient(k as u32));
                mono.mul_coefficient(&p.star_reflect()).scale(pow_c(self.a, k))
            } else {
                let kk = (-k) as u32;
                let lk = source.lowering_power_coefficient(kk);
                let (quot, rem) = p.div_rem(&lk).expect("lowering coefficient is nonzero");
                let rel = rem.norm() / p.norm();
                if rel.to_f64_lossy() > crate::bimodule::MEMBERSHIP_TOL {
                    return Err(Error::MembershipViolation { weight: k, remainder: rel.to_f64_lossy() });
                }
                let mono = target.term(-k, C::constant(Complex::one()));
                mono.mul_coefficient(&quot.star_reflect()).scale(pow_c(self.b, -k))
            };
            out = out.try_add(&img)?;
        }
        Ok(out)
    }

    /// `ρ: A_c → A_{c'}`.
    pub fn rho(&self, g: &Element<C>) -> Result<Element<C>> {
        self.rho_between(g, self.module.left(), self.module.right())
    }

    /// `ρ: A_{c'} → A_c`, used for the right action.
    pub fn rho_right(&self, g: &Element<C>) -> Result<Element<C>> {
        self.rho_between(g, self.module.right(), self.module.left())
    }

    /// `φ(x^j R_j R) = x^{-j} S_{-j} R^*`, antilinear.
    pub fn apply_phi(&self, m: &Element<C>) -> Result<Element<C>> {
        let parts = self.module.reduced_coefficients(m)?;
        let ctx = self.module.ctx();
        Ok(Element::from_terms(
            ctx,
            parts.into_iter().map(|(j, q)| (-j, self.sj(-j).times(&q.star_reflect()))),
        ))
    }

    /// Radius of the region carrying the roots of every `R_j`, `S_j` with `|j|` up to `span`.
    ///
    /// Filtered coefficients are measured on the disk of that radius; q coefficients
    /// on the unit circle.
    pub fn residual_radius(&self, span: i64) -> C::Real {
        match C::VARIANT {
            Variant::Q => C::Real::one(),
            Variant::Filtered => {
                let m = &self.module;
                let params = m.left().params().iter().chain(m.right().params());
                let widest = params.fold(C::Real::zero(), |r, c| r.max(c.norm()));
                let gap = m.gaps().iter().fold(0, |g, d| g.max(d.abs()));
                widest + C::Real::from_i64(span + gap + 2).unwrap()
            }
        }
    }

    /// Residuals of `φ(g m) = ρ(g) φ(m)` and `φ(m g) = φ(m) ρ(g)` for the generators,
    /// relative to the sizes of both sides measured with [`Self::residual_radius`].
    pub fn intertwining_residuals(&self, m: &Element<C>) -> Result<Vec<(&'static str, C::Real)>> {
        let left = self.module.left();
        let right = self.module.right();
        let phi_m = self.apply_phi(m)?;
        let span = m.terms().keys().fold(0, |s, j| s.max(j.abs())) + 1;
        let radius = self.residual_radius(span);
        let base = phi_m.norm_on(radius).max(C::Real::one());
        let rel = |lhs: &Element<C>, rhs: &Element<C>| {
            (lhs - rhs).norm_on(radius) / base.max(lhs.norm_on(radius)).max(rhs.norm_on(radius))
        };
        let mut out = Vec::with_capacity(6);
        let names_l = ["phi(u m)", "phi(v m)", "phi(h m)"];
        let names_r = ["phi(m u)", "phi(m v)", "phi(m h)"];
        for (g, name) in [left.u(), left.v(), left.cartan()].into_iter().zip(names_l) {
            let lhs = self.apply_phi(&(g * m))?;
            let rhs = &self.rho(g)? * &phi_m;
            out.push((name, rel(&lhs, &rhs)));
        }
        for (g, name) in [right.u(), right.v(), right.cartan()].into_iter().zip(names_r) {
            let lhs = self.apply_phi(&(m * g))?;
            let rhs = &phi_m * &self.rho_right(g)?;
            out.push((name, rel(&lhs, &rhs)));
        }
        Ok(out)
    }

    /// The product that is real on the reference line (filtered) or circle (q), as a coefficient:
    /// `(a iⁿ)^{-j} R_j(t - j) S_{-j}(t)` or `a^{-j} R_j(q^{-j}Z) S_{-j}(q^j Z)`.
    pub fn rs_product(&self, j: i64) -> C {
        let ctx = self.module.ctx();
        let jr = C::Real::from_i64(j).unwrap();
        match C::VARIANT {
            Variant::Filtered => {
                let unit = self.a * i_pow::<C::Real>(self.module.n() as i64);
                let scale = pow_c(unit, -j);
                self.module.rj(j).weight_shift(-jr, ctx).times(&self.sj(-j)).scaled(scale)
            }
            Variant::Q => {
                let half = jr / C::Real::lit(2.0);
                let r = self.module.rj(j).weight_shift(-half, ctx);
                let s = self.sj(-j).weight_shift(half, ctx);
                r.times(&s).scaled(pow_c(self.a, -j))
            }
        }
    }

    /// Samples of [`Self::rs_product`]: at `t = j/2 + i·y` for each `y` (filtered)
    /// or at `z = e^{iθ}` for each `θ` (q). Returns `(point, value)` pairs.
    ///
    /// Values are computed in product form from the root sets.
    pub fn rs_product_profile(&self, j: i64, samples: &[C::Real]) -> Vec<(Complex<C::Real>, Complex<C::Real>)> {
        samples
            .iter()
            .map(|&s| {
                let pt = match C::VARIANT {
                    Variant::Filtered => Complex::new(C::Real::from_i64(j).unwrap() / C::Real::lit(2.0), s),
                    Variant::Q => Complex::from_polar(C::Real::one(), s),
                };
                (pt, self.rs_product_at(j, pt))
            })
            .collect()
    }

    /// [`Self::rs_product`] at one point, in product form.
    pub fn rs_product_at(&self, j: i64, pt: Complex<C::Real>) -> Complex<C::Real> {
        let jr = C::Real::from_i64(j).unwrap();
        let m = &self.module;
        match C::VARIANT {
            Variant::Filtered => {
                let unit = self.a * i_pow::<C::Real>(m.n() as i64);
                pow_c(unit, -j) * m.rj_at(j, pt - jr) * self.sj_at(-j, pt)
            }
            Variant::Q => {
                // both factors share parity, so their square-root branches cancel
                let lam = m.left().ctx_shift_factor(jr);
                pow_c(self.a, -j) * m.rj_at(j, pt / lam) * self.sj_at(-j, pt * lam)
            }
        }
    }
}

/// `z^k` for any integer `k`.
pub fn pow_c<T: Real>(z: Complex<T>, k: i64) -> Complex<T> {
    if k >= 0 {
        z.powi(k as i32)
    } else {
        z.inv().powi((-k) as i32)
    }
}
