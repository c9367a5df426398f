//! The subcommands. Each returns a serializable result block.

use gwa_core::algebra::{Coefficient, Element};
use gwa_core::bimodule::Bimodule;
use gwa_core::conjugation::Conjugation;
use gwa_core::poly::{Laurent, Poly};
use gwa_core::positivity::{
    certify_q_weight, certify_weight, classify, find_gram_witness, gram, hermitization_phase, CertifySettings,
    CoefficientTrace, Verdict,
};
use gwa_core::qtrace::{eval_q_trace_with, CirclePlan, CircleSettings, QTraceValue, ThetaQuotientWeight};
use gwa_core::starprod::{matrix_context, truncated_with_conjugation, StarProductTable};
use gwa_core::trace::{eval_trace_with, ContourPlan, QuadratureSettings, TraceValue, Weight};
use gwa_core::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Resolved, Setup};
use crate::expr::{parse_laurent, parse_poly, ParseError};

#[derive(Debug)]
pub enum CommandError {
    Core(Error),
    Parse(ParseError),
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        CommandError::Core(e)
    }
}

impl From<ParseError> for CommandError {
    fn from(e: ParseError) -> Self {
        CommandError::Parse(e)
    }
}

type Out = Result<Value, CommandError>;

fn value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub fn classify_cmd(r: &Resolved) -> Out {
    Ok(match &r.setup {
        Setup::Filtered { conj, .. } => value(&classify(conj)),
        Setup::Q { conj, .. } => value(&classify(conj)),
    })
}

fn filtered_trace(weight: &Weight, p: &Poly<f64>) -> Result<(TraceValue, TraceValue), Error> {
    let settings = QuadratureSettings::default();
    let best = eval_trace_with(weight, p, &ContourPlan::best(weight), &settings)?;
    let other = eval_trace_with(weight, p, &ContourPlan::second_best(weight), &settings)?;
    Ok((best, other))
}

fn q_trace(weight: &ThetaQuotientWeight, p: &Laurent<f64>) -> Result<(QTraceValue, QTraceValue), Error> {
    let settings = CircleSettings::default();
    let best = eval_q_trace_with(weight, p, &CirclePlan::best(weight), &settings)?;
    let other = eval_q_trace_with(weight, p, &CirclePlan::second_best(weight), &settings)?;
    Ok((best, other))
}

fn relative(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

pub fn trace_cmd(r: &Resolved, poly: &str) -> Out {
    Ok(match &r.setup {
        Setup::Filtered { weight, .. } => {
            let p = parse_poly(poly)?;
            let (best, other) = filtered_trace(weight, &p)?;
            json!({
                "value": best.value,
                "evaluation": best,
                "alternate_line": other,
                "line_discrepancy": relative(best.value, other.value),
            })
        }
        Setup::Q { weight, .. } => {
            let p = parse_laurent(poly)?;
            let (best, other) = q_trace(weight, &p)?;
            json!({
                "value": best.value,
                "evaluation": best,
                "alternate_circle": other,
                "circle_discrepancy": relative(best.value, other.value),
            })
        }
    })
}

fn js(j: Option<i64>, j_max: i64) -> Vec<i64> {
    match j {
        Some(j) => vec![j],
        None => (-j_max..=j_max).collect(),
    }
}

fn grams<C: Coefficient<Real = f64>, W: CoefficientTrace<C>>(conj: &Conjugation<C>, w: &W, j: &[i64], deg: usize) -> Out {
    let phase = hermitization_phase(conj, w)?;
    let reports = j.iter().map(|&j| gram(conj, w, j, deg, phase)).collect::<Result<Vec<_>, _>>()?;
    Ok(value(&reports))
}

pub fn gram_cmd(r: &Resolved, j: Option<i64>, deg: Option<usize>) -> Out {
    let t = &r.config.truncation;
    let j = js(j, t.j_max);
    let deg = deg.unwrap_or(t.deg_max);
    match &r.setup {
        Setup::Filtered { conj, weight } => grams(conj, weight, &j, deg),
        Setup::Q { conj, weight } => grams(conj, weight, &j, deg),
    }
}

pub fn certify_cmd(r: &Resolved) -> Out {
    let t = &r.config.truncation;
    let tol = &r.config.tolerance;
    let settings = CertifySettings { j_min: -t.j_max, j_max: t.j_max, samples: tol.certify_samples, half_width: None, tol: tol.gram };
    let (cert, witness) = match &r.setup {
        Setup::Filtered { conj, weight } => {
            let cert = certify_weight(conj, weight, &settings)?;
            let witness = if cert.verdict == Verdict::Negative { find_gram_witness(conj, weight, t.j_max, t.deg_max)? } else { None };
            (cert, witness)
        }
        Setup::Q { conj, weight } => {
            let cert = certify_q_weight(conj, weight, &settings)?;
            let witness = if cert.verdict == Verdict::Negative { find_gram_witness(conj, weight, t.j_max, t.deg_max)? } else { None };
            (cert, witness)
        }
    };
    Ok(json!({
        "verdict": cert.verdict,
        "witness": cert.witness,
        "gram_witness": witness,
        "certificate": cert,
        "gram_search": { "j_max": t.j_max, "deg_max": t.deg_max },
    }))
}

pub fn star_cmd(r: &Resolved) -> Out {
    let Setup::Filtered { conj, weight } = &r.setup else {
        return Err(Error::Unsupported("star products are built for the filtered variant".into()).into());
    };
    let n = r.config.truncation.n;
    if conj.module().is_regular() {
        let alg = truncated_with_conjugation(weight, conj, n)?;
        let table = StarProductTable::build(&alg)?;
        let s = table.summary();
        let short = s.shortness_residual <= r.config.tolerance.star && s.parity_residual <= r.config.tolerance.star;
        Ok(json!({ "context": "single", "summary": s, "short": short }))
    } else {
        let ctx = matrix_context(conj, weight, n)?;
        let table = StarProductTable::build(&ctx.algebra)?;
        let s = table.summary();
        let short = s.shortness_residual <= r.config.tolerance.star && s.parity_residual <= r.config.tolerance.star;
        Ok(json!({
            "context": "matrix",
            "summary": s,
            "short": short,
            "unit_traces": [ctx.unit_traces.0, ctx.unit_traces.1],
            "forward_residual": ctx.forward_residual,
            "backward_residual": ctx.backward_residual,
            "off_diagonal_trace": ctx.off_diagonal_trace,
        }))
    }
}

#[derive(Default, Serialize)]
struct Suite {
    passed: usize,
    failed: usize,
    worst: f64,
    tolerance: f64,
}

impl Suite {
    fn new(tolerance: f64) -> Self {
        Suite { tolerance, ..Default::default() }
    }

    fn record(&mut self, residual: f64) {
        self.worst = self.worst.max(residual);
        if residual <= self.tolerance {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }
}

fn rand_c(r: &mut ChaCha8Rng) -> C64 {
    C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

fn expand(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for &x in roots {
        let mut next = vec![C64::new(0.0, 0.0); p.len() + 1];
        for (k, &a) in p.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * x;
        }
        p = next;
    }
    p
}

/// `R_j` against the roots `c'_i + l` (or `q^{2(c'_i + l)}`) that weight `j` must kill.
fn killed_roots(c: &[C64], cp: &[C64], j: i64, q: Option<f64>) -> Vec<C64> {
    let mut out = Vec::new();
    for (ci, cpi) in c.iter().zip(cp) {
        let gap = (ci.re - cpi.re).round() as i64;
        for l in 0..(gap - j).max(0) {
            let root = cpi + l as f64;
            out.push(match q {
                Some(q) => (root * 2.0 * q.ln()).exp(),
                None => root,
            });
        }
    }
    out
}

fn random_member<C: Coefficient<Real = f64>>(r: &mut ChaCha8Rng, m: &Bimodule<C>, j_max: i64, coefficient: impl Fn(&mut ChaCha8Rng) -> C) -> Element<C> {
    let mut e = Element::zero(m.ctx());
    for _ in 0..3 {
        let j = r.gen_range(-j_max..=j_max);
        let k = coefficient(r);
        e.add_term(j, m.rj(j).times(&k));
    }
    e
}

pub fn selfcheck_cmd(r: &Resolved) -> Out {
    let tol = &r.config.tolerance;
    let j_max = r.config.truncation.j_max.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(tol.seed);
    let mut twisted = Suite::new(tol.twisted_identity);
    let mut intertwining = Suite::new(tol.intertwining);
    let mut membership = Suite::new(tol.membership);
    match &r.setup {
        Setup::Filtered { conj, weight } => {
            let p = weight.algebra().defining_poly().clone();
            let half = C64::new(0.5, 0.0);
            for _ in 0..5 {
                let s = Poly::from_coeffs((0..4).map(|_| rand_c(&mut rng)).collect());
                let lower = &s.shift(-half) * &p.shift(-half);
                let upper = &s.shift(half) * &p.shift(half);
                let tl = eval_trace_with(weight, &lower, &ContourPlan::best(weight), &QuadratureSettings::default())?.value;
                let tu = eval_trace_with(weight, &upper, &ContourPlan::best(weight), &QuadratureSettings::default())?.value;
                twisted.record(relative(tl, weight.twist() * tu));
            }
            for _ in 0..5 {
                let m = random_member(&mut rng, conj.module(), j_max, |r| Poly::from_coeffs((0..3).map(|_| rand_c(r)).collect()));
                let worst = conj.intertwining_residuals(&m)?.into_iter().map(|(_, x)| x).fold(0.0, f64::max);
                intertwining.record(worst);
            }
            let m = conj.module();
            let (c, cp) = (m.left().params(), m.right().params());
            for j in -10..=10 {
                let want = expand(&killed_roots(c, cp, j, None));
                let got = m.rj(j);
                let gap = if got.coeffs().len() != want.len() {
                    f64::INFINITY
                } else {
                    let scale = want.iter().fold(1.0f64, |s, a| s.max(a.norm()));
                    got.coeffs().iter().zip(&want).map(|(g, w)| (g - w).norm() / scale).fold(0.0, f64::max)
                };
                membership.record(gap);
            }
        }
        Setup::Q { conj, weight } => {
            let q = weight.algebra().q();
            let p = weight.algebra().defining_poly().clone();
            if let Some(t) = weight.quasi_period() {
                for _ in 0..5 {
                    let s = Laurent::from_terms2(&(-2..=2).map(|k| (2 * k, rand_c(&mut rng))).collect::<Vec<_>>());
                    let f = &s * &p;
                    let down = q_trace(weight, &f.scale_arg_real(1.0 / q))?.0;
                    let up = q_trace(weight, &f.scale_arg_real(q))?.0;
                    // measured against the summed terms, which carry the rounding error
                    let terms = down.magnitude.max(up.magnitude * t.norm()).max(1.0);
                    twisted.record((down.value - t * up.value).norm() / terms);
                }
            }
            for _ in 0..5 {
                let m = random_member(&mut rng, conj.module(), j_max, |r| {
                    Laurent::from_terms2(&(-1..=1).map(|k| (2 * k, rand_c(r))).collect::<Vec<_>>())
                });
                let worst = conj.intertwining_residuals(&m)?.into_iter().map(|(_, x)| x).fold(0.0, f64::max);
                intertwining.record(worst);
            }
            let m = conj.module();
            let (c, cp) = (m.left().params(), m.right().params());
            for j in -10..=10 {
                let want = killed_roots(c, cp, j, Some(q));
                let got = m.rj_roots(j);
                let gap = if got.len() != want.len() {
                    f64::INFINITY
                } else {
                    want.iter()
                        .map(|w| got.iter().map(|x| (x - w).norm() / w.norm().max(1.0)).fold(f64::INFINITY, f64::min))
                        .fold(0.0, f64::max)
                };
                membership.record(gap);
            }
        }
    }
    let all_passed = twisted.failed + intertwining.failed + membership.failed == 0;
    Ok(json!({
        "twisted_identity": twisted,
        "intertwining": intertwining,
        "membership_oracle": membership,
        "all_passed": all_passed,
    }))
}
