mod common;

use std::f64::consts::PI;

use common::*;
use gwa_core::algebra::{Algebra, Element};
use gwa_core::poly::Laurent;
use gwa_core::qtrace::{
    eval_q_trace, eval_q_trace_with, q_trace_of_element, q_twist_automorphism, theta, CirclePlan, CircleSettings,
    QTraceValue, ThetaQuotientWeight, THETA_TOL,
};
use gwa_core::Error;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn lattice_point(c: C, q: f64) -> C {
    (c * 2.0 * q.ln()).exp()
}

/// A weight with one pole on each parameter lattice (shifted by a random step)
/// and random zeros.
fn random_weight(r: &mut ChaCha8Rng, q: f64) -> ThetaQuotientWeight {
    let (c, _) = q_sigma_id(r);
    let a = Algebra::<Laurent<f64>>::q_deformed(c.clone(), q).unwrap();
    let poles: Vec<C> = c.iter().map(|&ci| lattice_point(ci + r.gen_range(-1..=1) as f64, q)).collect();
    let zeros: Vec<C> = poles.iter().map(|_| C::from_polar(r.gen_range(0.3..2.0), r.gen_range(0.0..6.28))).collect();
    let e2 = 2 * r.gen_range(-1..=1);
    ThetaQuotientWeight::new(&a, rand_c(r, 1.0) + 1.5, e2, zeros, poles).unwrap()
}

#[test]
fn theta_functional_equation_and_truncation() {
    let mut r = rng(51);
    for _ in 0..50 {
        let p = r.gen_range(0.05..0.9);
        let x = C::from_polar(r.gen_range(0.2..3.0), r.gen_range(0.0..6.28));
        let t = theta(x, p, THETA_TOL);
        assert!((theta(x * p, p, THETA_TOL) * x + t).norm() <= 1e-10 * t.norm().max(1.0));
        // doubling the number of factors: tolerance squared
        let finer = theta(x, p, THETA_TOL * THETA_TOL);
        assert!((finer - t).norm() <= 1e-12 * t.norm().max(1.0));
    }
}

#[test]
fn cancelling_zeros_and_poles_leave_the_scalar() {
    let a = Algebra::<Laurent<f64>>::q_deformed(vec![C::new(0.5, 0.3), C::new(0.5, -0.3)], 0.6).unwrap();
    let poles = vec![lattice_point(C::new(0.5, 0.3), 0.6)];
    let w = ThetaQuotientWeight::new(&a, C::new(2.0, -1.0), 0, poles.clone(), poles).unwrap();
    assert!((w.eval(C::new(0.3, 0.8)) - C::new(2.0, -1.0)).norm() < 1e-14);
    assert!((w.measured_quasi_period(32).unwrap() - 1.0).norm() < 1e-12);
    let w = w.expect_twist(C::new(1.0, 0.0)).unwrap();
    let err = w.expect_twist(C::new(-1.0, 0.0)).unwrap_err();
    assert!(matches!(err, Error::QuasiPeriodMismatch { .. }));
}

#[test]
fn quasi_period_matches_bookkeeping() {
    let mut r = rng(52);
    for trial in 0..20 {
        let w = random_weight(&mut r, [0.5, 0.7][trial % 2]);
        let formula = w.quasi_period().unwrap();
        let measured = w.measured_quasi_period(32).unwrap();
        assert!((formula - measured).norm() <= 1e-10 * formula.norm());
    }
    // a pole pair {λ, 1/conj λ} against a matching zero pair; with real
    // parameters 0.3 and 0.7 the partner lands on the second lattice
    let q = 0.6;
    let c = vec![C::new(0.3, 0.0), C::new(0.7, 0.0)];
    let a = Algebra::<Laurent<f64>>::q_deformed(c.clone(), q).unwrap();
    let lam = lattice_point(c[0], q);
    let poles = vec![lam, 1.0 / lam.conj()];
    let zeros = vec![C::from_polar(0.8, 1.0), C::from_polar(1.25, 1.0)];
    let w = ThetaQuotientWeight::new(&a, C::new(1.0, 0.0), 0, zeros, poles).unwrap();
    let want = w.quasi_period().unwrap();
    assert!((w.measured_quasi_period(32).unwrap() - want).norm() < 1e-10 * want.norm());
}

#[test]
fn pole_validation() {
    let a = Algebra::<Laurent<f64>>::q_deformed(vec![C::new(0.5, 0.25), C::new(0.5, -0.25)], 0.6).unwrap();
    let off = vec![C::new(0.77, 0.1)];
    let err = ThetaQuotientWeight::new(&a, C::new(1.0, 0.0), 0, vec![C::new(1.0, 1.0)], off).unwrap_err();
    assert_eq!(err, Error::PoleOffLattice { index: 0 });
    let lam = lattice_point(C::new(0.5, 0.25), 0.6);
    let twice = vec![lam, lam * 0.36];
    let err = ThetaQuotientWeight::new(&a, C::new(1.0, 0.0), 0, vec![C::new(1.0, 1.0); 2], twice).unwrap_err();
    assert_eq!(err, Error::DoublePole { first: 0, second: 1 });
}

#[test]
fn residues_sit_exactly_on_the_listed_lattices() {
    let q = 0.6;
    let c = vec![C::new(0.3, 0.25), C::new(0.7, -0.25)];
    let a = Algebra::<Laurent<f64>>::q_deformed(c.clone(), q).unwrap();
    let pole = lattice_point(c[0], q);
    let w = ThetaQuotientWeight::new(&a, C::new(1.0, 0.5), 2, vec![C::new(0.4, 0.9)], vec![pole]).unwrap();
    let circle = |z0: C| {
        let (rad, m) = (1e-4 * z0.norm(), 128);
        let mut acc = C::new(0.0, 0.0);
        for k in 0..m {
            let e = C::from_polar(rad, 2.0 * PI * k as f64 / m as f64);
            acc += w.eval(z0 + e) * e / m as f64;
        }
        acc
    };
    for k in -2..=2 {
        let z0 = lattice_point(c[0] + k as f64, q);
        let num = circle(z0);
        let res = w.residue(0, z0);
        assert!(res.norm() > 1e-8);
        assert!((num - res).norm() < 1e-8 * res.norm(), "k={k}: {num} vs {res}");
        let quiet = circle(lattice_point(c[1] + k as f64, q));
        assert!(quiet.norm() < 1e-10);
    }
}

fn balanced(r: &mut ChaCha8Rng, span: i64) -> Laurent<f64> {
    rand_laurent(r, span)
}

/// Rounding in the circle sum and the residue sum scales with the size of
/// the terms added, which can exceed the result by many orders.
fn agree(a: &QTraceValue, b: &QTraceValue, rel: f64) -> bool {
    let diff = (a.value - b.value).norm();
    diff <= rel * a.value.norm().max(b.value.norm()).max(1.0) + 1e-13 * a.magnitude.max(b.magnitude)
}

fn traced(w: &ThetaQuotientWeight, f: &Laurent<f64>) -> QTraceValue {
    eval_q_trace_with(w, f, &CirclePlan::best(w), &CircleSettings::default()).unwrap()
}

#[test]
fn twisted_identity() {
    let mut r = rng(53);
    for trial in 0..30 {
        let q = [0.5, 0.7, 0.85][trial % 3];
        let w = random_weight(&mut r, q);
        let t = w.quasi_period().unwrap();
        let p = w.algebra().defining_poly().clone();
        let s = balanced(&mut r, 2);
        let f = &s * &p;
        let down = traced(&w, &f.scale_arg_real(1.0 / q));
        let mut up = traced(&w, &f.scale_arg_real(q));
        up.value *= t;
        up.magnitude *= t.norm();
        assert!(agree(&down, &up, 1e-10), "trial {trial}: {} vs {}", down.value, up.value);
    }
}

#[test]
fn independent_of_admissible_radius() {
    let mut r = rng(54);
    let settings = CircleSettings::default();
    for trial in 0..20 {
        let w = random_weight(&mut r, [0.5, 0.7][trial % 2]);
        let f = balanced(&mut r, 2);
        let best = CirclePlan::best(&w);
        let base = eval_q_trace_with(&w, &f, &best, &settings).unwrap();
        let others = [
            CirclePlan::second_best(&w),
            CirclePlan::at(&w, best.exponent + 1.0).unwrap(),
            CirclePlan::at(&w, best.exponent - 1.0).unwrap(),
        ];
        for plan in &others {
            let v = eval_q_trace_with(&w, &f, plan, &settings).unwrap();
            assert!(agree(&v, &base, 1e-10), "{} vs {}", v.value, base.value);
        }
        assert_eq!(eval_q_trace(&w, &Laurent::zero()).unwrap(), C::new(0.0, 0.0));
    }
}

fn random_in_q_algebra(r: &mut ChaCha8Rng, a: &Algebra<Laurent<f64>>) -> Element<Laurent<f64>> {
    let mut e = a.zero();
    for k in -2i64..=2 {
        let base = if k >= 0 { a.raising().pow(k as u32) } else { a.lowering().pow((-k) as u32) };
        e = &e + &(&base * &a.term(0, balanced(r, 1)));
    }
    e
}

#[test]
fn element_traces_are_twisted() {
    let mut r = rng(55);
    for trial in 0..15 {
        let w = random_weight(&mut r, [0.5, 0.7][trial % 2]);
        let a = w.algebra().clone();
        assert_eq!(q_trace_of_element(&w, a.u()).unwrap(), C::new(0.0, 0.0));
        let q = a.q();
        let uv = a.u() * a.v();
        let direct = eval_q_trace(&w, &a.defining_poly().scale_arg_real(1.0 / q)).unwrap();
        assert!((q_trace_of_element(&w, &uv).unwrap() - direct).norm() <= 1e-12 * direct.norm().max(1.0));
        let t = w.quasi_period().unwrap();
        let x = random_in_q_algebra(&mut r, &a);
        let y = random_in_q_algebra(&mut r, &a);
        let (xy, yx) = (&x * &y, &y * &q_twist_automorphism(t, &x));
        let (lhs, rhs) = (traced(&w, &xy.coefficient(0)), traced(&w, &yx.coefficient(0)));
        assert_eq!(q_trace_of_element(&w, &xy).unwrap(), lhs.value);
        assert!(agree(&lhs, &rhs, 1e-10), "{} vs {}", lhs.value, rhs.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_in_r_and_scalar(seed in any::<u64>(), lam in -2.0f64..2.0) {
        let mut r = rng(seed);
        let w = random_weight(&mut r, 0.6);
        let (f, g) = (balanced(&mut r, 2), balanced(&mut r, 1));
        let t = |w: &ThetaQuotientWeight, f: &Laurent<f64>| eval_q_trace(w, f).unwrap();
        let lhs = t(&w, &(&f + &g.scale(C::new(lam, 1.0))));
        let rhs = t(&w, &f) + t(&w, &g) * C::new(lam, 1.0);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
        let scaled = w.with_scalar(w.scalar() * lam);
        let a = t(&scaled, &f);
        prop_assert!((a - t(&w, &f) * lam).norm() <= 1e-10 * a.norm().max(1.0));
    }
}
