//! Twisted traces on the q-deformed algebra, `T(R) = (1/2πi)∮_C w(z) R(z) dz/z`
//! with `w` a quotient of theta functions.
//!
//! The good contour is replaced by the circle `|z| = q^{2a}` plus residue
//! corrections, and the circle integral by the trapezoidal rule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{q_lattice_distance, Algebra, Element};
use crate::bimodule::Bimodule;
use crate::error::{Error, Result};
use crate::poly::Laurent;
use crate::C64;

/// Default truncation: factors with `p^k` below this are dropped.
pub const THETA_TOL: f64 = 1e-18;

/// Number of factor pairs kept by [`theta`] for the given tolerance.
pub fn theta_terms(p: f64, tol: f64) -> usize {
    ((tol.ln() / p.ln()).ceil().max(1.0)) as usize
}

/// `θ(x) = Π_{k≥0} (1 − p^k x)(1 − p^{k+1}/x)`, truncated once `p^k < tol`.
///
/// Satisfies `θ(p x) = −x^{-1} θ(x)`.
pub fn theta(x: C64, p: f64, tol: f64) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    let mut pk = 1.0;
    for _ in 0..theta_terms(p, tol) {
        acc *= (1.0 - x * pk) * (1.0 - (p * pk) / x);
        pk *= p;
    }
    acc
}

/// `θ'(x0)` at a zero `x0 = p^m` of `θ`.
fn theta_derivative_at_zero(m: i64, p: f64, tol: f64) -> C64 {
    let x0 = C64::new(p.powi(m as i32), 0.0);
    let mut acc = C64::new(1.0, 0.0);
    let mut pk = 1.0;
    let mut slope = C64::new(0.0, 0.0);
    for k in 0..theta_terms(p, tol).max(m.unsigned_abs() as usize + 2) {
        let left = 1.0 - x0 * pk;
        let right = 1.0 - (p * pk) / x0;
        if m <= 0 && k as i64 == -m {
            // d/dx (1 − p^k x) = −p^k
            slope = C64::new(-pk, 0.0);
            acc *= right;
        } else if m >= 1 && k as i64 == m - 1 {
            // d/dx (1 − p^{k+1}/x) = p^{k+1}/x² at x = p^{k+1}
            slope = 1.0 / x0;
            acc *= left;
        } else {
            acc *= left * right;
        }
        pk *= p;
    }
    acc * slope
}

/// `w(z) = scalar · z^{e/2} · Π θ(z/α_i) / Π θ(z/β_j)` with `p = q²`.
#[derive(Clone, Debug)]
pub struct ThetaQuotientWeight {
    algebra: Algebra<Laurent<f64>>,
    qsq: f64,
    scalar: C64,
    exponent2: i64,
    zeros: Vec<C64>,
    poles: Vec<C64>,
    /// For each pole, the parameter index whose lattice `q^{2c_i} p^ℤ` carries it.
    pole_lattice: Vec<usize>,
    tol: f64,
}

impl ThetaQuotientWeight {
    pub fn new(
        algebra: &Algebra<Laurent<f64>>,
        scalar: C64,
        exponent2: i64,
        zeros: Vec<C64>,
        poles: Vec<C64>,
    ) -> Result<Self> {
        if exponent2 % 2 != 0 {
            return Err(Error::NonSingleValued { exponent2 });
        }
        if zeros.iter().chain(&poles).any(|x| x.norm() == 0.0) {
            return Err(Error::ZeroRoot);
        }
        let q = algebra.q();
        let lq = q.ln();
        let mut pole_lattice = Vec::with_capacity(poles.len());
        for (index, beta) in poles.iter().enumerate() {
            let on = algebra
                .params()
                .iter()
                .position(|&c| q_lattice_distance(beta.ln() / (2.0 * lq) - c, q) < 1e-9)
                .ok_or(Error::PoleOffLattice { index })?;
            pole_lattice.push(on);
        }
        for first in 0..poles.len() {
            for second in first + 1..poles.len() {
                if pole_lattice[first] == pole_lattice[second] {
                    return Err(Error::DoublePole { first, second });
                }
            }
        }
        Ok(ThetaQuotientWeight {
            algebra: algebra.clone(),
            qsq: q * q,
            scalar,
            exponent2,
            zeros,
            poles,
            pole_lattice,
            tol: THETA_TOL,
        })
    }

    /// Same weight with a different theta truncation tolerance.
    pub fn with_theta_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Rejects the weight unless its measured quasi-period factor is `expected`.
    pub fn expect_twist(self, expected: C64) -> Result<Self> {
        let measured = self.measured_quasi_period(32)?;
        if (measured - expected).norm() > 1e-8 * expected.norm().max(1.0) {
            return Err(Error::QuasiPeriodMismatch {
                measured_re: measured.re,
                measured_im: measured.im,
                expected_re: expected.re,
                expected_im: expected.im,
            });
        }
        Ok(self)
    }

    pub fn algebra(&self) -> &Algebra<Laurent<f64>> {
        &self.algebra
    }

    pub fn qsq(&self) -> f64 {
        self.qsq
    }

    pub fn scalar(&self) -> C64 {
        self.scalar
    }

    pub fn exponent2(&self) -> i64 {
        self.exponent2
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[C64] {
        &self.poles
    }

    /// Parameter index carrying each pole.
    pub fn pole_lattice(&self) -> &[usize] {
        &self.pole_lattice
    }

    /// Same zeros and poles, rescaled.
    pub fn with_scalar(&self, scalar: C64) -> Self {
        ThetaQuotientWeight { scalar, ..self.clone() }
    }

    pub fn eval(&self, z: C64) -> C64 {
        let p = self.qsq;
        let num: C64 = self.zeros.iter().map(|a| theta(z / a, p, self.tol)).product();
        let den: C64 = self.poles.iter().map(|b| theta(z / b, p, self.tol)).product();
        self.scalar * z.powi((self.exponent2 / 2) as i32) * num / den
    }

    /// `w(pz)/w(z) = p^{e/2} Πα / Πβ` when the zero and pole counts agree.
    pub fn quasi_period(&self) -> Option<C64> {
        if self.zeros.len() != self.poles.len() {
            return None;
        }
        let za: C64 = self.zeros.iter().product();
        let pb: C64 = self.poles.iter().product();
        Some(self.qsq.powi((self.exponent2 / 2) as i32) * za / pb)
    }

    /// `w(pz)/w(z)` sampled at `samples` points off the pole moduli; errors if not constant.
    pub fn measured_quasi_period(&self, samples: usize) -> Result<C64> {
        let radius = self.algebra.q().powf(2.0 * CirclePlan::best(self).exponent);
        let mut values = Vec::with_capacity(samples);
        for k in 0..samples {
            let z = C64::from_polar(radius, 2.0 * PI * (k as f64 + 0.37) / samples as f64);
            values.push(self.eval(z * self.qsq) / self.eval(z));
        }
        let first = values[0];
        let spread = values.iter().fold(0.0f64, |m, v| m.max((v - first).norm()));
        if spread > 1e-10 * first.norm().max(1.0) {
            let expected = self.quasi_period().unwrap_or(C64::new(f64::NAN, f64::NAN));
            return Err(Error::QuasiPeriodMismatch {
                measured_re: first.re,
                measured_im: first.im,
                expected_re: expected.re,
                expected_im: expected.im,
            });
        }
        Ok(first)
    }

    /// Residue of `w` at `z0`, a point of the lattice of pole `j`.
    pub fn residue(&self, pole: usize, z0: C64) -> C64 {
        let p = self.qsq;
        let beta = self.poles[pole];
        let m = ((z0 / beta).norm().ln() / p.ln()).round() as i64;
        let num: C64 = self.zeros.iter().map(|a| theta(z0 / a, p, self.tol)).product();
        let others: C64 = self
            .poles
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != pole)
            .map(|(_, b)| theta(z0 / b, p, self.tol))
            .product();
        // on the lattice z0/β = p^m exactly, and θ(z/β) ≈ θ'(p^m)·(z − z0)/β
        let slope = theta_derivative_at_zero(m, p, self.tol) / beta;
        self.scalar * z0.powi((self.exponent2 / 2) as i32) * num / (others * slope)
    }

    /// Pole `k` steps along the lattice of pole `j`: `q^{2(c_i + k)}`.
    fn lattice_point(&self, pole: usize, k: i64) -> C64 {
        let c = self.algebra.params()[self.pole_lattice[pole]];
        ((c + k as f64) * (2.0 * self.algebra.q().ln())).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleCorrection {
    pub location: C64,
    /// Index into the weight's pole list.
    pub pole: usize,
    /// `+1` for a pole that must be inside but lies outside, `−1` for the reverse.
    pub sign: f64,
}

/// Circle `|z| = q^{2a}` and the lattice poles it leaves on the wrong side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CirclePlan {
    /// `a`, so that the radius is `q^{2a}`.
    pub exponent: f64,
    pub radius: f64,
    pub corrections: Vec<CircleCorrection>,
}

impl CirclePlan {
    pub fn at(weight: &ThetaQuotientWeight, exponent: f64) -> Result<Self> {
        let q = weight.algebra.q();
        let radius = q.powf(2.0 * exponent);
        for (pole, _) in weight.poles.iter().enumerate() {
            let c = weight.algebra.params()[weight.pole_lattice[pole]];
            let off = (c.re - exponent).rem_euclid(1.0);
            let closest = off.min(1.0 - off);
            // δ_min = 1e-3·radius in modulus
            if (1.0 - q.powf(2.0 * closest)).abs() < 1e-3 {
                return Err(Error::InvalidInput(format!("circle |z| = {radius} passes too close to a pole")));
            }
        }
        let mut corrections = Vec::new();
        for pole in 0..weight.poles.len() {
            let c = weight.algebra.params()[weight.pole_lattice[pole]];
            // q^{2(c+k)}, k ≥ 0, belongs inside: |z| < radius ⇔ Re c + k > a
            let mut k = 0;
            while c.re + (k as f64) < exponent {
                corrections.push(CircleCorrection { location: weight.lattice_point(pole, k), pole, sign: 1.0 });
                k += 1;
            }
            let mut k = 1;
            while c.re - (k as f64) > exponent {
                corrections.push(CircleCorrection { location: weight.lattice_point(pole, -k), pole, sign: -1.0 });
                k += 1;
            }
        }
        Ok(CirclePlan { exponent, radius, corrections })
    }

    /// Circle through the middle of the widest gap between pole moduli.
    pub fn best(weight: &ThetaQuotientWeight) -> Self {
        Self::ranked(weight, 0)
    }

    /// The next-widest gap, or a quarter period off when there is only one.
    pub fn second_best(weight: &ThetaQuotientWeight) -> Self {
        Self::ranked(weight, 1)
    }

    fn ranked(weight: &ThetaQuotientWeight, rank: usize) -> Self {
        let params = weight.algebra.params();
        let mut re: Vec<f64> = params.iter().map(|c| c.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut fracs: Vec<f64> = re.iter().map(|x| x.rem_euclid(1.0)).collect();
        fracs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        fracs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut gaps: Vec<(f64, f64)> = (0..fracs.len())
            .map(|i| {
                let lo = fracs[i];
                let hi = if i + 1 < fracs.len() { fracs[i + 1] } else { fracs[0] + 1.0 };
                (hi - lo, lo)
            })
            .collect();
        gaps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mid = match gaps.get(rank) {
            Some(&(width, lo)) => lo + width / 2.0,
            None => gaps[0].1 + gaps[0].0 / 4.0,
        };
        let median = re[re.len() / 2];
        Self::at(weight, mid + (median - mid).round()).expect("gap midpoints avoid pole moduli")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleSettings {
    pub initial_samples: usize,
    pub max_samples: usize,
    /// Stop once successive estimates differ by at most this times the mean of `|wR|`.
    pub rel_tol: f64,
}

impl Default for CircleSettings {
    fn default() -> Self {
        CircleSettings { initial_samples: 256, max_samples: 1 << 14, rel_tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTraceValue {
    pub value: C64,
    pub circle_part: C64,
    pub residue_part: C64,
    pub radius: f64,
    pub samples: usize,
    pub last_change: f64,
    /// Size of the largest terms summed, `max(Σ|residue terms|, mean |wR|)`;
    /// rounding errors scale with this rather than with `|value|`.
    pub magnitude: f64,
}

/// `T(R)` on the best circle with default settings.
pub fn eval_q_trace(weight: &ThetaQuotientWeight, r: &Laurent<f64>) -> Result<C64> {
    Ok(eval_q_trace_with(weight, r, &CirclePlan::best(weight), &CircleSettings::default())?.value)
}

pub fn eval_q_trace_with(
    weight: &ThetaQuotientWeight,
    r: &Laurent<f64>,
    plan: &CirclePlan,
    settings: &CircleSettings,
) -> Result<QTraceValue> {
    eval_q_trace_of_product(weight, &[r], plan, settings)
}

/// `T(R_1 ⋯ R_m)` with the factors evaluated separately at each sample.
pub fn eval_q_trace_of_product(
    weight: &ThetaQuotientWeight,
    factors: &[&Laurent<f64>],
    plan: &CirclePlan,
    settings: &CircleSettings,
) -> Result<QTraceValue> {
    let eval = |z: C64| -> C64 { factors.iter().map(|p| p.eval(z)).product() };
    // Res of w(z)R(z)/z
    let terms: Vec<C64> = plan
        .corrections
        .iter()
        .map(|c| c.sign * weight.residue(c.pole, c.location) * eval(c.location) / c.location)
        .collect();
    let residue_part: C64 = terms.iter().sum();
    let residue_size: f64 = terms.iter().map(|t| t.norm()).sum();
    if factors.iter().any(|p| p.is_zero()) {
        return Ok(QTraceValue {
            value: residue_part,
            circle_part: C64::new(0.0, 0.0),
            residue_part,
            radius: plan.radius,
            samples: 0,
            last_change: 0.0,
            magnitude: residue_size,
        });
    }
    let f = |theta: f64| {
        let z = C64::from_polar(plan.radius, theta);
        weight.eval(z) * eval(z)
    };
    let mut m = settings.initial_samples;
    let (mut sum, mut abs_sum) = (C64::new(0.0, 0.0), 0.0);
    for k in 0..m {
        let v = f(2.0 * PI * k as f64 / m as f64);
        sum += v;
        abs_sum += v.norm();
    }
    let mut last_change = f64::INFINITY;
    while 2 * m <= settings.max_samples {
        // the doubled grid reuses the old points and adds the midpoints
        let mut mids = C64::new(0.0, 0.0);
        for k in 0..m {
            let v = f(2.0 * PI * (k as f64 + 0.5) / m as f64);
            mids += v;
            abs_sum += v.norm();
        }
        let old = sum / m as f64;
        sum += mids;
        m *= 2;
        let new = sum / m as f64;
        last_change = (new - old).norm() / (abs_sum / m as f64).max(f64::MIN_POSITIVE);
        if last_change <= settings.rel_tol {
            return Ok(QTraceValue {
                value: new + residue_part,
                circle_part: new,
                residue_part,
                radius: plan.radius,
                samples: m,
                last_change,
                magnitude: residue_size.max(abs_sum / m as f64),
            });
        }
    }
    Err(Error::QuadratureNotConverged(format!(
        "circle |z| = {}: relative change {last_change:.3e} at {m} samples",
        plan.radius
    )))
}

/// Trace of an element of the q-algebra: only the weight-0 coefficient contributes.
pub fn q_trace_of_element(weight: &ThetaQuotientWeight, e: &Element<Laurent<f64>>) -> Result<C64> {
    Bimodule::regular(&weight.algebra).check_membership(e)?;
    eval_q_trace(weight, &e.coefficient(0))
}

/// `T(m n)` for `m ∈ M_{c,c'}` and `n ∈ M_{c',c}`.
pub fn q_trace_of_pair(
    weight: &ThetaQuotientWeight,
    module: &Bimodule<Laurent<f64>>,
    m: &Element<Laurent<f64>>,
    n: &Element<Laurent<f64>>,
) -> Result<C64> {
    let prod = module.morita_mul(m, n)?;
    eval_q_trace(weight, &prod.coefficient(0))
}

/// Multiplies the weight-`k` part by `t^k`.
pub fn q_twist_automorphism(t: C64, e: &Element<Laurent<f64>>) -> Element<Laurent<f64>> {
    Element::from_terms(e.ctx(), e.terms().iter().map(|(&k, r)| (k, r.scale(t.powi(k as i32)))))
}
