//! Positivity of the invariant Hermitian form `(m, n) = T(m φ(n))` on a bimodule:
//! good and bad indices, cone dimensions, sign certificates for weights on the
//! critical lines (circles in the q case), and Gram matrices.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Coefficient, Element, Variant};
use crate::conjugation::{pow_c, Conjugation, RhoChoice};
use crate::error::{Error, Result};
use crate::poly::{Laurent, Poly};
use crate::qtrace::{eval_q_trace, eval_q_trace_of_product, CirclePlan, CircleSettings, ThetaQuotientWeight};
use crate::trace::{eval_trace, eval_trace_of_product, ContourPlan, QuadratureSettings, Weight};
use crate::C64;

/// Relative tolerance for Gram verdicts and sign checks.
pub const GRAM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhoSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl RhoSign {
    /// `ρ_+` when `ε = (-1)^n`.
    pub fn from_epsilon(epsilon: i8, n: usize) -> Self {
        let parity = if n % 2 == 0 { 1 } else { -1 };
        if epsilon == parity {
            RhoSign::Plus
        } else {
            RhoSign::Minus
        }
    }
}

/// Index classification and the dimension of the cone of positive forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub variant: Variant,
    pub n: usize,
    /// Good indices, 1-based.
    pub good: Vec<usize>,
    /// Bad indices, 1-based.
    pub bad: Vec<usize>,
    /// `Re c_i + Re c'_i` per index.
    pub index_sums: Vec<f64>,
    pub m: usize,
    pub n_even: bool,
    pub epsilon: Option<i8>,
    pub rho: Option<RhoSign>,
    pub tau_is_zero: Option<bool>,
    /// Dimension formula evaluated with the good count.
    pub dim_formula_m: i64,
    /// Same formula evaluated with `n`.
    pub dim_formula_n: i64,
    /// `max(dim_formula_m, 0)`.
    pub dim: usize,
    pub empty: bool,
}

pub fn is_good_sum(sum: f64) -> bool {
    sum > 0.0 && sum < 2.0
}

/// Dimension of the filtered cone for `k` indices.
pub fn filtered_dimension(k: usize, rho: RhoSign, tau_is_zero: bool) -> i64 {
    let k = k as i64;
    let even = k % 2 == 0;
    match (rho, tau_is_zero, even) {
        (RhoSign::Minus, _, true) => k - 1,
        (RhoSign::Minus, _, false) => k - 2,
        (RhoSign::Plus, false, true) => k - 1,
        (RhoSign::Plus, false, false) => k,
        (RhoSign::Plus, true, true) => k - 3,
        (RhoSign::Plus, true, false) => k - 2,
    }
}

/// `(good, bad, sums)` with 1-based indices; needs no conjugation.
pub fn index_classes(c: &[C64], c_prime: &[C64]) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let sums: Vec<f64> = c.iter().zip(c_prime).map(|(a, b)| a.re + b.re).collect();
    let good = (0..sums.len()).filter(|&i| is_good_sum(sums[i])).map(|i| i + 1).collect();
    let bad = (0..sums.len()).filter(|&i| !is_good_sum(sums[i])).map(|i| i + 1).collect();
    (good, bad, sums)
}

pub fn classify<C: Coefficient<Real = f64>>(conj: &Conjugation<C>) -> ConeReport {
    let module = conj.module();
    let n = module.n();
    let (good, bad, index_sums) = index_classes(module.left().params(), module.right().params());
    let m = good.len();
    let (epsilon, rho, tau_is_zero, fm, fnn) = match conj.choice() {
        RhoChoice::Filtered { epsilon, tau } => {
            let rho = RhoSign::from_epsilon(epsilon, n);
            let zero = tau == 0.0;
            (Some(epsilon), Some(rho), Some(zero), filtered_dimension(m, rho, zero), filtered_dimension(n, rho, zero))
        }
        RhoChoice::Q { .. } => (None, None, None, m as i64, n as i64),
    };
    ConeReport {
        variant: module.variant(),
        n,
        good,
        bad,
        index_sums,
        m,
        n_even: n % 2 == 0,
        epsilon,
        rho,
        tau_is_zero,
        dim_formula_m: fm,
        dim_formula_n: fnn,
        dim: fm.max(0) as usize,
        empty: fm <= 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Positive,
    Negative,
}

/// Why a weight fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// The weight has a pole on the lattice of a bad index (1-based).
    BadPole { index: usize, location: C64 },
    /// The phase-normalized integrand is negative or not real at `point`.
    Sign { j: i64, point: C64, value: C64 },
    /// `G` cannot be made real by a constant phase.
    GNotReal { imaginary: f64 },
    /// The lowest power of `G` has the wrong parity for the chosen `ρ`.
    GParity { lowest_order: usize },
    /// `G` has the wrong sign at the real point `x`.
    GSign { x: f64, value: f64 },
}

/// Samples of the phase-normalized integrand on one critical line or circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignProfile {
    pub j: i64,
    pub points: Vec<C64>,
    pub values: Vec<C64>,
    /// Largest `|value|`.
    pub scale: f64,
    /// Smallest real part, relative to `scale`.
    pub min_real: f64,
    /// Largest `|imaginary part|`, relative to `scale`.
    pub max_imag: f64,
}

/// Exact sign analysis of `G` on the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GSignCheck {
    /// `G` with the bad-index factors divided out, rotated to real coefficients.
    pub reduced: Vec<f64>,
    pub lowest_order: usize,
    pub real_roots: Vec<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    /// Unimodular `μ` making the `j = 0` integrand positive.
    pub phase: C64,
    pub profiles: Vec<SignProfile>,
    pub g_check: Option<GSignCheck>,
    pub witness: Option<Witness>,
    pub tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifySettings {
    /// Critical lines `Re t = j/2` for `j` in this range (filtered only; the q
    /// case always checks `j = 0, 1`).
    pub j_min: i64,
    pub j_max: i64,
    pub samples: usize,
    /// Half-length of the sampled part of each line; chosen from the decay
    /// rates when absent.
    pub half_width: Option<f64>,
    pub tol: f64,
}

impl Default for CertifySettings {
    fn default() -> Self {
        CertifySettings { j_min: -6, j_max: 6, samples: 512, half_width: None, tol: GRAM_TOL }
    }
}

fn negative(phase: C64, profiles: Vec<SignProfile>, g_check: Option<GSignCheck>, witness: Witness, tol: f64) -> Certificate {
    Certificate { verdict: Verdict::Negative, phase, profiles, g_check, witness: Some(witness), tolerance: tol }
}

/// Normalizes the profiles by the phase of the largest `j = 0` sample and
/// returns the first sign failure.
fn judge_profiles(raw: Vec<(i64, Vec<C64>, Vec<C64>)>, tol: f64) -> (C64, Vec<SignProfile>, Option<Witness>) {
    let anchor = raw.iter().find(|(j, _, _)| *j == 0).or(raw.first());
    let phase = anchor
        .and_then(|(_, _, v)| v.iter().filter(|x| x.is_finite()).max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()))
        .filter(|v| v.norm() > 0.0)
        .map(|v| v.conj() / v.norm())
        .unwrap_or(C64::new(1.0, 0.0));
    let mut witness = None;
    let mut profiles = Vec::with_capacity(raw.len());
    for (j, points, values) in raw {
        let values: Vec<C64> = values.into_iter().map(|v| v * phase).collect();
        let scale = values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.norm()));
        let floor = scale.max(f64::MIN_POSITIVE);
        let mut min_real = f64::INFINITY;
        let mut max_imag = 0.0f64;
        for (pt, v) in points.iter().zip(&values) {
            if !v.is_finite() {
                continue;
            }
            min_real = min_real.min(v.re / floor);
            max_imag = max_imag.max(v.im.abs() / floor);
            if witness.is_none() && (v.re < -tol * floor || v.im.abs() > tol * floor) {
                witness = Some(Witness::Sign { j, point: *pt, value: *v });
            }
        }
        profiles.push(SignProfile { j, points, values, scale, min_real, max_imag });
    }
    (phase, profiles, witness)
}

fn check_same_params(a: &[C64], b: &[C64]) -> Result<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).norm() > 1e-12) {
        return Err(Error::InvalidInput("weight and bimodule use different parameters".into()));
    }
    Ok(())
}

fn check_twist(weight_twist: C64, conj_twist: C64) -> Result<()> {
    if (weight_twist - conj_twist).norm() > 1e-8 * conj_twist.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "weight twist {weight_twist} does not match the conjugation twist {conj_twist}"
        )));
    }
    Ok(())
}

/// Filtered certificate: bad-pole test, sampled signs on `Re t = j/2`, and the
/// exact sign of `G` on the real line.
pub fn certify_weight(
    conj: &Conjugation<Poly<f64>>,
    weight: &Weight,
    settings: &CertifySettings,
) -> Result<Certificate> {
    let module = conj.module();
    check_same_params(module.left().params(), weight.algebra().params())?;
    check_twist(weight.twist(), conj.twist())?;
    let report = classify(conj);
    let tol = settings.tol;
    let params = module.left().params();
    let g = weight.g();

    let mut reduced = g.clone();
    for &i in &report.bad {
        let y = (C64::i() * 2.0 * PI * params[i - 1]).exp();
        let size: f64 = g.coeffs().iter().enumerate().map(|(k, c)| c.norm() * y.norm().max(1.0).powi(k as i32)).sum();
        if g.eval(y).norm() > 1e-10 * size {
            let w = Witness::BadPole { index: i, location: params[i - 1] };
            return Ok(negative(C64::new(1.0, 0.0), Vec::new(), None, w, tol));
        }
        reduced = reduced.div_rem(&Poly::from_roots(&[y], C64::new(1.0, 0.0))).0;
    }

    let (up, down) = weight.decay_rates();
    let half = settings.half_width.unwrap_or_else(|| (30.0 / up.min(down)).clamp(1.0, 60.0));
    let m = settings.samples.max(2);
    let mut raw = Vec::new();
    for j in settings.j_min..=settings.j_max {
        let jr = j as f64;
        let mut points = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for k in 0..m {
            let y = -half + 2.0 * half * (k as f64 + 0.5) / m as f64;
            let t = C64::new(jr / 2.0, y);
            // dt = i dy along the line
            let v = C64::i() * module.rj_at(j, t - jr) * conj.sj_at(-j, t) * weight.eval(t);
            points.push(t);
            values.push(v);
        }
        raw.push((j, points, values));
    }
    let (phase, profiles, witness) = judge_profiles(raw, tol);

    let rho = report.rho.expect("filtered report carries ρ");
    let g_check = g_sign_check(&reduced, rho);
    let witness = witness.or_else(|| g_check.as_ref().err().cloned());
    let g_check = match g_check {
        Ok(c) => Some(c),
        Err(_) => None,
    };
    Ok(match witness {
        Some(w) => negative(phase, profiles, g_check, w, tol),
        None => Certificate { verdict: Verdict::Positive, phase, profiles, g_check, witness: None, tolerance: tol },
    })
}

/// q certificate: bad-pole test and sampled signs on `|z| = q^j` for `j = 0, 1`.
pub fn certify_q_weight(
    conj: &Conjugation<Laurent<f64>>,
    weight: &ThetaQuotientWeight,
    settings: &CertifySettings,
) -> Result<Certificate> {
    let module = conj.module();
    check_same_params(module.left().params(), weight.algebra().params())?;
    if let Some(t) = weight.quasi_period() {
        check_twist(t, conj.twist())?;
    }
    let report = classify(conj);
    let tol = settings.tol;
    for (pole, &lattice) in weight.pole_lattice().iter().enumerate() {
        if report.bad.contains(&(lattice + 1)) {
            let w = Witness::BadPole { index: lattice + 1, location: weight.poles()[pole] };
            return Ok(negative(C64::new(1.0, 0.0), Vec::new(), None, w, tol));
        }
    }
    let q = module.left().q();
    let m = settings.samples.max(2);
    let mut raw = Vec::new();
    for j in 0..=1i64 {
        let lam = q.powi(j as i32);
        let aj = pow_c(conj.a(), j);
        let mut points = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for k in 0..m {
            let zeta = C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / m as f64);
            // R_j(q^{-j}ζ) S_{-j}(q^j ζ) w(q^j ζ); dz/(2πiz) = dθ/2π
            let v = aj * conj.rs_product_at(j, zeta) * weight.eval(zeta * lam);
            points.push(zeta * lam);
            values.push(v);
        }
        raw.push((j, points, values));
    }
    let (phase, profiles, witness) = judge_profiles(raw, tol);
    Ok(match witness {
        Some(w) => negative(phase, profiles, None, w, tol),
        None => Certificate { verdict: Verdict::Positive, phase, profiles, g_check: None, witness: None, tolerance: tol },
    })
}

/// `G` must be real up to a constant phase, with lowest power of the parity
/// `ρ` dictates, nonnegative on `ℝ` (`ρ_+`) or of the sign of `x` (`ρ_-`),
/// up to an overall sign.
pub fn g_sign_check(g: &Poly<f64>, rho: RhoSign) -> std::result::Result<GSignCheck, Witness> {
    let norm = g.norm_max();
    if norm == 0.0 {
        return Err(Witness::GSign { x: 0.0, value: 0.0 });
    }
    let lowest_order = g.coeffs().iter().position(|c| c.norm() > 1e-14 * norm).unwrap_or(0);
    let s = g.coeff(lowest_order);
    let rot = s.conj() / s.norm();
    let rotated: Vec<C64> = g.coeffs().iter().map(|c| c * rot).collect();
    let imaginary = rotated.iter().fold(0.0f64, |m, c| m.max(c.im.abs())) / norm;
    if imaginary > 1e-9 {
        return Err(Witness::GNotReal { imaginary });
    }
    let real: Vec<f64> = rotated.iter().map(|c| c.re).collect();
    let want_even = rho == RhoSign::Plus;
    if (lowest_order % 2 == 0) != want_even {
        return Err(Witness::GParity { lowest_order });
    }
    let roots = real_roots(&real);
    let mut cuts = roots.clone();
    cuts.push(0.0);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut tests = vec![cuts[0] - 1.0, cuts[cuts.len() - 1] + 1.0];
    tests.extend(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    for x in tests {
        let value = eval_real(&real, x);
        let size: f64 = real.iter().enumerate().map(|(k, c)| c.abs() * x.abs().powi(k as i32)).sum();
        let signed = if rho == RhoSign::Minus && x < 0.0 { -value } else { value };
        if signed < -1e-12 * size {
            return Err(Witness::GSign { x, value });
        }
    }
    Ok(GSignCheck { reduced: real, lowest_order, real_roots: roots, passed: true })
}

fn eval_real(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

fn trim(mut p: Vec<f64>, tol: f64) -> Vec<f64> {
    while p.len() > 1 && p[p.len() - 1].abs() <= tol {
        p.pop();
    }
    p
}

fn derivative(p: &[f64]) -> Vec<f64> {
    if p.len() <= 1 {
        return vec![0.0];
    }
    p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

/// Remainder of `a / b` for real coefficient lists (lowest first).
fn remainder(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db && r.len() > 1 {
        let k = r.len() - 1;
        let f = r[k] / lead;
        for i in 0..=db {
            r[k - db + i] -= f * b[i];
        }
        r.pop();
    }
    if r.is_empty() {
        vec![0.0]
    } else {
        r
    }
}

fn sturm_chain(p: &[f64]) -> Vec<Vec<f64>> {
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut chain = vec![p.to_vec(), derivative(p)];
    loop {
        let k = chain.len();
        if chain[k - 1].len() <= 1 {
            break;
        }
        let r: Vec<f64> = remainder(&chain[k - 2], &chain[k - 1]).into_iter().map(|c| -c).collect();
        let r = trim(r, 1e-13 * scale);
        if r.len() == 1 && r[0].abs() <= 1e-13 * scale {
            break;
        }
        chain.push(r);
    }
    chain
}

fn variations(chain: &[Vec<f64>], x: f64) -> usize {
    let signs: Vec<f64> = chain
        .iter()
        .map(|p| {
            if x.is_infinite() {
                let lead = p[p.len() - 1];
                let odd = (p.len() - 1) % 2 == 1;
                if x < 0.0 && odd {
                    -lead
                } else {
                    lead
                }
            } else {
                eval_real(p, x)
            }
        })
        .filter(|v| *v != 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

/// Distinct real roots of a real polynomial, isolated by Sturm counts and
/// refined by bisection.
pub fn real_roots(p: &[f64]) -> Vec<f64> {
    let scale = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let p = trim(p.to_vec(), 1e-14 * scale);
    if p.len() <= 1 {
        return Vec::new();
    }
    let chain = sturm_chain(&p);
    let lead = p[p.len() - 1];
    let bound = 1.0 + p[..p.len() - 1].iter().fold(0.0f64, |m, c| m.max((c / lead).abs()));
    let count = |a: f64, b: f64| variations(&chain, a).saturating_sub(variations(&chain, b));
    let mut roots = Vec::new();
    let mut stack = vec![(-bound, bound)];
    while let Some((a, b)) = stack.pop() {
        let n = count(a, b);
        if n == 0 {
            continue;
        }
        if b - a <= 1e-12 * bound {
            roots.push(0.5 * (a + b));
            continue;
        }
        let mid = 0.5 * (a + b);
        stack.push((a, mid));
        stack.push((mid, b));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Traces restricted to weight-zero coefficients.
pub trait CoefficientTrace<C: Coefficient> {
    fn algebra(&self) -> &Algebra<C>;
    fn trace_coefficient(&self, r: &C) -> Result<C64>;
    /// Trace of a product given factor by factor.
    fn trace_product(&self, factors: &[&C]) -> Result<C64>;
}

impl CoefficientTrace<Poly<f64>> for Weight {
    fn algebra(&self) -> &Algebra<Poly<f64>> {
        Weight::algebra(self)
    }
    fn trace_coefficient(&self, r: &Poly<f64>) -> Result<C64> {
        eval_trace(self, r)
    }
    fn trace_product(&self, factors: &[&Poly<f64>]) -> Result<C64> {
        Ok(eval_trace_of_product(self, factors, &ContourPlan::best(self), &QuadratureSettings::default())?.value)
    }
}

impl CoefficientTrace<Laurent<f64>> for ThetaQuotientWeight {
    fn algebra(&self) -> &Algebra<Laurent<f64>> {
        ThetaQuotientWeight::algebra(self)
    }
    fn trace_coefficient(&self, r: &Laurent<f64>) -> Result<C64> {
        eval_q_trace(self, r)
    }
    fn trace_product(&self, factors: &[&Laurent<f64>]) -> Result<C64> {
        Ok(eval_q_trace_of_product(self, factors, &CirclePlan::best(self), &CircleSettings::default())?.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GramVerdict {
    #[serde(rename = "PD")]
    PositiveDefinite,
    #[serde(rename = "PSD-boundary")]
    Boundary,
    #[serde(rename = "INDEFINITE")]
    Indefinite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub j: i64,
    pub degree: usize,
    /// Raw entries `T(m_k φ(m_l))`.
    pub matrix: Vec<Vec<C64>>,
    pub phase: C64,
    /// `max |E - E*|` for the equilibrated `E = D^{-1/2} μG D^{-1/2}`, relative to `‖E‖`.
    pub hermitian_residual: f64,
    /// Eigenvalues of the Hermitian part of `E`, ascending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub verdict: GramVerdict,
}

impl GramReport {
    pub fn is_pd(&self) -> bool {
        self.verdict == GramVerdict::PositiveDefinite
    }
}

/// Spanning set of the weight-`j` part of `M` up to `degree`: `x^j R_j(z) (z + j/2)^k`
/// in the filtered case, centred where the Gram integrand is evaluated, and
/// `x^j R_j(Z) Z^k` with `|k| ≤ degree` in the q case.
pub fn gram_basis<C: Coefficient<Real = f64>>(conj: &Conjugation<C>, j: i64, degree: usize) -> Vec<Element<C>> {
    let module = conj.module();
    let rj = module.rj(j);
    gram_monomials(conj, j, degree)
        .iter()
        .map(|mono| Element::term(module.ctx(), j, rj.times(mono)))
        .collect()
}

/// The factors multiplying `R_j` in [`gram_basis`]: `(z + j/2)^k` (filtered, centered
/// on the critical line) or the module's `Z^k` (q).
fn gram_monomials<C: Coefficient<Real = f64>>(conj: &Conjugation<C>, j: i64, degree: usize) -> Vec<C> {
    match C::VARIANT {
        Variant::Q => conj.module().basis_monomials(degree),
        Variant::Filtered => {
            let shift = C::generator().plus(&C::constant(C64::new(j as f64 / 2.0, 0.0)));
            let mut mono = C::constant(C64::new(1.0, 0.0));
            let mut out = Vec::with_capacity(degree + 1);
            for _ in 0..=degree {
                out.push(mono.clone());
                mono = mono.times(&shift);
            }
            out
        }
    }
}

fn linear_factors<C: Coefficient<Real = f64>>(roots: &[C64]) -> Vec<C> {
    roots.iter().map(|r| C::monic_from_roots(std::slice::from_ref(r))).collect()
}

/// `T(m φ(n))` for basis elements of `M`.
pub fn form_value<C: Coefficient<Real = f64>, W: CoefficientTrace<C>>(
    conj: &Conjugation<C>,
    weight: &W,
    m: &Element<C>,
    n: &Element<C>,
) -> Result<C64> {
    let prod = conj.module().morita_mul(m, &conj.apply_phi(n)?)?;
    weight.trace_coefficient(&prod.coefficient(0))
}

/// Unimodular `μ` with `μ T(x^0 R_0 · φ(x^0 R_0)) > 0`.
pub fn hermitization_phase<C: Coefficient<Real = f64>, W: CoefficientTrace<C>>(
    conj: &Conjugation<C>,
    weight: &W,
) -> Result<C64> {
    let m0 = &gram_basis(conj, 0, 0)[0];
    let v = form_value(conj, weight, m0, m0)?;
    if v.norm() == 0.0 {
        return Err(Error::InvalidInput("the weight-zero form vanishes; no hermitization phase".into()));
    }
    Ok(v.conj() / v.norm())
}

pub fn gram<C: Coefficient<Real = f64>, W: CoefficientTrace<C>>(
    conj: &Conjugation<C>,
    weight: &W,
    j: i64,
    degree: usize,
    phase: C64,
) -> Result<GramReport> {
    check_same_params(conj.module().left().params(), weight.algebra().params())?;
    let module = conj.module();
    let ctx = module.ctx();
    let monos = gram_monomials(conj, j, degree);
    // m_a = x^j R_j Q_a and φ(m_b) = x^{-j} S_{-j} Q_b^*, so the weight-zero part of
    // m_a φ(m_b) is R_j(z - j) Q_a(z - j) S_{-j}(z) Q_b^*(z); every factor is kept
    // separate and evaluated pointwise, since expanding it loses digits
    let back = -(j as f64);
    let shared: Vec<C> = linear_factors::<C>(&module.rj_roots(j))
        .iter()
        .map(|p| p.weight_shift(back, ctx))
        .chain(linear_factors::<C>(&conj.sj_roots(-j)))
        .collect();
    let left: Vec<C> = monos.iter().map(|q| q.weight_shift(back, ctx)).collect();
    let scalar = conj.sj_scalar(-j);
    let right: Vec<C> = monos.iter().map(|q| q.star_reflect().scaled(scalar)).collect();
    let k = monos.len();
    let mut matrix = vec![vec![C64::new(0.0, 0.0); k]; k];
    for (a, l) in left.iter().enumerate() {
        for (b, r) in right.iter().enumerate() {
            let mut all: Vec<&C> = shared.iter().collect();
            all.push(l);
            all.push(r);
            matrix[a][b] = weight.trace_product(&all)?;
        }
    }
    Ok(judge_gram(j, degree, matrix, phase, GRAM_TOL))
}

/// Verdict on `μG` after symmetric diagonal scaling.
pub fn judge_gram(j: i64, degree: usize, matrix: Vec<Vec<C64>>, phase: C64, tol: f64) -> GramReport {
    let k = matrix.len();
    let scaled = DMatrix::from_fn(k, k, |a, b| matrix[a][b] * phase);
    let d: Vec<f64> = (0..k)
        .map(|a| {
            let x = scaled[(a, a)].norm();
            if x > 0.0 {
                1.0 / x.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let e = DMatrix::from_fn(k, k, |a, b| scaled[(a, b)] * d[a] * d[b]);
    let adj = e.adjoint();
    let herm = (&e + &adj) * C64::new(0.5, 0.0);
    let eig = herm.clone().symmetric_eigen();
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let spectral = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let hermitian_residual = (&e - &adj).iter().fold(0.0f64, |m, v| m.max(v.norm())) / spectral;
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let verdict = if hermitian_residual > tol || min_eigenvalue < -tol * spectral {
        GramVerdict::Indefinite
    } else if min_eigenvalue > tol * spectral {
        GramVerdict::PositiveDefinite
    } else {
        GramVerdict::Boundary
    };
    GramReport { j, degree, matrix, phase, hermitian_residual, eigenvalues, min_eigenvalue, tolerance: tol, verdict }
}

/// First non-PD Gram matrix for `|j| ≤ j_max`, growing the degree up to `d_max`.
pub fn find_gram_witness<C: Coefficient<Real = f64>, W: CoefficientTrace<C>>(
    conj: &Conjugation<C>,
    weight: &W,
    j_max: i64,
    d_max: usize,
) -> Result<Option<GramReport>> {
    let phase = hermitization_phase(conj, weight)?;
    for degree in 0..=d_max {
        for j in (0..=j_max).flat_map(|j| if j == 0 { vec![0] } else { vec![j, -j] }) {
            let report = gram(conj, weight, j, degree, phase)?;
            if !report.is_pd() {
                return Ok(Some(report));
            }
        }
    }
    Ok(None)
}

/// A point of an `SL(2)` / `SL_q(2)` unitary locus with its identity residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocusPoint {
    /// `q^{2c} + q^{-2c}` (q case) or `c²` (filtered), for `c = k/2 + iα`.
    pub value: C64,
    /// The same point from the closed-form curve.
    pub curve: C64,
    pub residual: f64,
}

/// `q = None` gives the filtered parabola `k²/4 − α² + ikα`; `Some(q)` the ellipse
/// `(r + r^{-1}) cos φ + i (r − r^{-1}) sin φ` with `r = q^k`, `φ = 2α ln q`.
pub fn sl2_loci(k: u32, alpha: f64, q: Option<f64>) -> Result<LocusPoint> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let kf = k as f64;
    let c = C64::new(kf / 2.0, alpha);
    let (value, curve) = match q {
        None => (c * c, C64::new(kf * kf / 4.0 - alpha * alpha, kf * alpha)),
        Some(q) => {
            if !(q > 0.0) || q == 1.0 {
                return Err(Error::InvalidQ { q });
            }
            let lq = q.ln();
            let value = (c * 2.0 * lq).exp() + (-c * 2.0 * lq).exp();
            let r = q.powf(kf);
            let phi = 2.0 * alpha * lq;
            (value, C64::new((r + 1.0 / r) * phi.cos(), (r - 1.0 / r) * phi.sin()))
        }
    };
    Ok(LocusPoint { value, curve, residual: (value - curve).norm() })
}
