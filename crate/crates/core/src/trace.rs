//! Twisted traces on the filtered algebra `A_c`, realized as contour integrals
//! `T(R) = ∫_C R(x) w(x) dx` against a quasi-periodic weight.
//!
//! The good contour is replaced by a vertical reference line `Re x = a`,
//! traversed upward, plus `2πi`-residue corrections for the poles the line
//! leaves on the wrong side.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Element};
use crate::bimodule::Bimodule;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::C64;

const TWO_PI: f64 = 2.0 * PI;

/// `w(x) = e^{2πiτx} G(e^{2πix}) / P(e^{2πix})` with `P(y) = Π(y − e^{2πi c_k})`.
#[derive(Clone, Debug)]
pub struct Weight {
    algebra: Algebra<Poly<f64>>,
    tau: f64,
    g: Poly<f64>,
    boldp: Poly<f64>,
}

impl Weight {
    pub fn new(algebra: &Algebra<Poly<f64>>, tau: f64, g: Poly<f64>) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidTau { tau });
        }
        let n = algebra.n();
        if let Some(d) = g.degree() {
            if d + 1 > n {
                return Err(Error::DegreeTooHigh { degree: d, max: n - 1 });
            }
        }
        if tau == 0.0 && g.coeff(0).norm() > 1e-14 * g.norm_max().max(1.0) {
            return Err(Error::ZeroConstraintViolated);
        }
        let exps: Vec<C64> = algebra.params().iter().map(|c| (C64::i() * TWO_PI * c).exp()).collect();
        let boldp = Poly::from_roots(&exps, C64::new(1.0, 0.0));
        Ok(Weight { algebra: algebra.clone(), tau, g, boldp })
    }

    pub fn algebra(&self) -> &Algebra<Poly<f64>> {
        &self.algebra
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn g(&self) -> &Poly<f64> {
        &self.g
    }

    /// The twist `t = e^{2πiτ}` with `w(x + 1) = t w(x)`.
    pub fn twist(&self) -> C64 {
        C64::from_polar(1.0, TWO_PI * self.tau)
    }

    /// Same parameters and τ with a different numerator.
    pub fn with_g(&self, g: Poly<f64>) -> Result<Self> {
        Weight::new(&self.algebra, self.tau, g)
    }

    pub fn eval(&self, x: C64) -> C64 {
        let phase = C64::i() * TWO_PI * x;
        let n = self.algebra.n() as f64;
        if x.im >= 0.0 {
            // |e^{2πix}| ≤ 1: evaluate directly
            let y = phase.exp();
            (phase * self.tau).exp() * self.g.eval(y) / self.boldp.eval(y)
        } else {
            // |e^{2πix}| > 1: factor out the top powers so nothing overflows
            let dg = self.g.degree().map_or(0.0, |d| d as f64);
            let inv = (-phase).exp();
            let num = eval_reversed(self.g.coeffs(), inv);
            let den = eval_reversed(self.boldp.coeffs(), inv);
            (phase * (self.tau + dg - n)).exp() * num / den
        }
    }

    /// Residue of `w` at a simple pole `x0 ∈ c_k + ℤ`.
    pub fn residue(&self, x0: C64) -> C64 {
        let y0 = (C64::i() * TWO_PI * x0).exp();
        let dp = self.boldp.derivative().eval(y0);
        (C64::i() * TWO_PI * self.tau * x0).exp() * self.g.eval(y0) / (C64::i() * TWO_PI * y0 * dp)
    }

    /// Exponential decay rates of `|w(a + iy)|` as `y → +∞` and `y → −∞`.
    pub fn decay_rates(&self) -> (f64, f64) {
        let n = self.algebra.n() as f64;
        let lowest = self.g.coeffs().iter().position(|c| c.norm() > 0.0).unwrap_or(0) as f64;
        let top = self.g.degree().map_or(0.0, |d| d as f64);
        (TWO_PI * (self.tau + lowest), TWO_PI * (n - top - self.tau))
    }
}

/// `Σ c_k y^{d−k}` for coefficients `c_0..c_d` listed lowest first.
fn eval_reversed(coeffs: &[C64], y: C64) -> C64 {
    coeffs.iter().fold(C64::new(0.0, 0.0), |acc, &c| acc * y + c)
}

/// Which side of the contour a pole family belongs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    MustBeRight,
    MustBeLeft,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleCorrection {
    pub location: C64,
    pub side: Side,
    /// `∓2πi`, multiplying the residue of `R·w` at `location`.
    pub multiplier: C64,
}

/// Reference line `Re x = a` and the poles it leaves on the wrong side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourPlan {
    pub abscissa: f64,
    pub corrections: Vec<PoleCorrection>,
}

impl ContourPlan {
    /// Plan for the line `Re x = a`; fails if `a` sits on a pole column.
    pub fn at(weight: &Weight, abscissa: f64) -> Result<Self> {
        let params = weight.algebra.params();
        for c in params {
            let off = (c.re - abscissa).rem_euclid(1.0);
            if off.min(1.0 - off) < 1e-6 {
                return Err(Error::InvalidInput(format!("reference line Re x = {abscissa} passes through a pole column")));
            }
        }
        let mut corrections = Vec::new();
        for &c in params {
            // c + k, k ≥ 0, belongs to the right
            let mut k = 0.0;
            while c.re + k < abscissa {
                corrections.push(PoleCorrection {
                    location: c + k,
                    side: Side::MustBeRight,
                    multiplier: C64::new(0.0, -TWO_PI),
                });
                k += 1.0;
            }
            // c − k, k ≥ 1, belongs to the left
            let mut k = 1.0;
            while c.re - k > abscissa {
                corrections.push(PoleCorrection {
                    location: c - k,
                    side: Side::MustBeLeft,
                    multiplier: C64::new(0.0, TWO_PI),
                });
                k += 1.0;
            }
        }
        Ok(ContourPlan { abscissa, corrections })
    }

    /// Line through the middle of the widest gap between pole columns,
    /// translated next to the parameters.
    pub fn best(weight: &Weight) -> Self {
        Self::ranked(weight, 0)
    }

    /// A second admissible line: the next-widest gap, or a quarter period off
    /// when there is only one gap.
    pub fn second_best(weight: &Weight) -> Self {
        Self::ranked(weight, 1)
    }

    fn ranked(weight: &Weight, rank: usize) -> Self {
        let params = weight.algebra.params();
        let mut fracs: Vec<f64> = params.iter().map(|c| c.re.rem_euclid(1.0)).collect();
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
        let mut re: Vec<f64> = params.iter().map(|c| c.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = re[re.len() / 2];
        let abscissa = mid + (median - mid).round();
        Self::at(weight, abscissa).expect("gap midpoints avoid pole columns")
    }
}

/// Convergence controls for the line quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Stop once successive estimates differ by at most this times `∫|f|`.
    pub rel_tol: f64,
    /// Truncate where the integrand has decayed below this fraction of its peak.
    pub tail_tol: f64,
    /// Extra length added beyond the decay bound on each end.
    pub margin: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings { nodes: 20, rel_tol: 1e-10, tail_tol: 1e-16, margin: 10.0, max_refinements: 7 }
    }
}

/// A trace value with its pieces and convergence record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceValue {
    pub value: C64,
    pub line_part: C64,
    pub residue_part: C64,
    pub abscissa: f64,
    /// Truncation `[-Y_down, Y_up]` of the line.
    pub window: (f64, f64),
    pub panels: usize,
    /// Last change between successive refinements, relative to `∫|f|`.
    pub last_change: f64,
    /// `max(Σ|residue terms|, ∫|f|)`, the scale of the rounding error.
    pub magnitude: f64,
}

/// `T(R)` on the best reference line with default settings.
pub fn eval_trace(weight: &Weight, r: &Poly<f64>) -> Result<C64> {
    Ok(eval_trace_with(weight, r, &ContourPlan::best(weight), &QuadratureSettings::default())?.value)
}

pub fn eval_trace_with(
    weight: &Weight,
    r: &Poly<f64>,
    plan: &ContourPlan,
    settings: &QuadratureSettings,
) -> Result<TraceValue> {
    eval_trace_of_product(weight, &[r], plan, settings)
}

/// `T(R_1 ⋯ R_m)` with the factors evaluated separately at each node, which avoids
/// the cancellation of expanding a high-degree product in monomials.
pub fn eval_trace_of_product(
    weight: &Weight,
    factors: &[&Poly<f64>],
    plan: &ContourPlan,
    settings: &QuadratureSettings,
) -> Result<TraceValue> {
    let r = Factored(factors);
    let a = plan.abscissa;
    let terms: Vec<C64> = plan
        .corrections
        .iter()
        .map(|pc| pc.multiplier * r.eval(pc.location) * weight.residue(pc.location))
        .collect();
    let residue_part: C64 = terms.iter().sum();
    let residue_size: f64 = terms.iter().map(|t| t.norm()).sum();
    if r.is_zero() {
        return Ok(TraceValue {
            value: residue_part,
            line_part: C64::new(0.0, 0.0),
            residue_part,
            abscissa: a,
            window: (0.0, 0.0),
            panels: 0,
            last_change: 0.0,
            magnitude: residue_size,
        });
    }
    // dx = i dy along the upward line
    let f = |y: f64| {
        let x = C64::new(a, y);
        C64::i() * r.eval(x) * weight.eval(x)
    };
    let (up, down) = weight.decay_rates();
    let deg = r.degree().unwrap_or(0) as f64;
    let y_up = truncation(&f, 1.0, up, deg, settings);
    let y_down = truncation(&f, -1.0, down, deg, settings);

    let rule = GaussLegendre::new(NonZeroUsize::new(settings.nodes).expect("positive node count"));
    let nodes = rule.as_node_weight_pairs();
    let span = y_up + y_down;
    let mut panels = span.ceil().max(1.0) as usize;
    let mut prev: Option<C64> = None;
    let mut last_change = f64::INFINITY;
    for _ in 0..=settings.max_refinements {
        let h = span / panels as f64;
        let mut sum = C64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for p in 0..panels {
            let mid = -y_down + h * (p as f64 + 0.5);
            for &(node, w) in nodes {
                let v = f(mid + 0.5 * h * node) * (0.5 * h * w);
                sum += v;
                abs_sum += v.norm();
            }
        }
        if let Some(old) = prev {
            last_change = (sum - old).norm() / abs_sum.max(f64::MIN_POSITIVE);
            if last_change <= settings.rel_tol {
                return Ok(TraceValue {
                    value: sum + residue_part,
                    line_part: sum,
                    residue_part,
                    abscissa: a,
                    window: (y_down, y_up),
                    panels,
                    last_change,
                    magnitude: residue_size.max(abs_sum),
                });
            }
        }
        prev = Some(sum);
        panels *= 2;
    }
    Err(Error::QuadratureNotConverged(format!(
        "line Re x = {a}: relative change {last_change:.3e} after {} panels",
        panels / 2
    )))
}

struct Factored<'a>(&'a [&'a Poly<f64>]);

impl Factored<'_> {
    fn eval(&self, x: C64) -> C64 {
        self.0.iter().map(|p| p.eval(x)).product()
    }
    fn is_zero(&self) -> bool {
        self.0.iter().any(|p| p.is_zero())
    }
    fn degree(&self) -> Option<usize> {
        self.0.iter().map(|p| p.degree()).sum()
    }
}

/// Length along `dir` after which `|f|` stays below `tail_tol` times its peak.
///
/// Past `deg/rate` the bound `|y|^deg e^{−rate|y|}` is decreasing, so once the
/// sampled value is small there it stays small.
fn truncation(f: &impl Fn(f64) -> C64, dir: f64, rate: f64, deg: f64, s: &QuadratureSettings) -> f64 {
    let monotone_from = deg / rate;
    let step = (0.5 / rate).clamp(0.05, 1.0);
    let mut peak = f(0.0).norm();
    let mut y = 0.0;
    loop {
        y += step;
        let v = f(dir * y).norm();
        peak = peak.max(v);
        if y >= monotone_from && v <= s.tail_tol * peak.max(f64::MIN_POSITIVE) {
            return y + s.margin;
        }
        if !v.is_finite() || y > 1e5 {
            return y;
        }
    }
}

/// Trace of an element of `A_c`: only the weight-0 coefficient contributes.
pub fn trace_of_element(weight: &Weight, e: &Element<Poly<f64>>) -> Result<C64> {
    Bimodule::regular(&weight.algebra).check_membership(e)?;
    eval_trace(weight, &e.coefficient(0))
}

/// `T(m n)` for `m ∈ M_{c,c'}` and `n ∈ M_{c',c}`.
pub fn trace_of_pair(
    weight: &Weight,
    module: &Bimodule<Poly<f64>>,
    m: &Element<Poly<f64>>,
    n: &Element<Poly<f64>>,
) -> Result<C64> {
    let p = module.morita_mul(m, n)?;
    eval_trace(weight, &p.coefficient(0))
}

/// The automorphism `g_t`: multiplies the weight-`k` part by `t^k`.
pub fn twist_automorphism(weight: &Weight, e: &Element<Poly<f64>>) -> Element<Poly<f64>> {
    let t = weight.twist();
    Element::from_terms(e.ctx(), e.terms().iter().map(|(&k, r)| (k, r.scale(t.powi(k as i32)))))
}
