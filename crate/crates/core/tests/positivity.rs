mod common;

use common::*;
use gwa_core::algebra::Algebra;
use gwa_core::bimodule::Bimodule;
use gwa_core::conjugation::Conjugation;
use gwa_core::poly::{Laurent, Poly};
use gwa_core::positivity::*;
use gwa_core::qtrace::ThetaQuotientWeight;
use gwa_core::trace::Weight;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn regular(c: Vec<C>, epsilon: i8, tau: f64) -> Conjugation<Poly<f64>> {
    let a = Algebra::<Poly<f64>>::filtered(c).unwrap();
    Conjugation::filtered(Bimodule::regular(&a), epsilon, tau).unwrap()
}

fn weight_for(cj: &Conjugation<Poly<f64>>, tau: f64, g: Vec<C>) -> Weight {
    Weight::new(cj.module().left(), tau, Poly::from_coeffs(g)).unwrap()
}

#[test]
fn weyl_classification() {
    let plus = classify(&regular(vec![C::new(0.5, 0.0)], -1, 0.3));
    assert_eq!((plus.good.clone(), plus.dim, plus.rho), (vec![1], 1, Some(RhoSign::Plus)));
    let minus = classify(&regular(vec![C::new(0.5, 0.0)], 1, 0.3));
    assert_eq!(minus.rho, Some(RhoSign::Minus));
    assert!(minus.empty);
    assert_eq!(minus.dim, 0);
}

#[test]
fn two_parameter_window() {
    // regular bimodule with parameters 1/2 ± c: both indices good iff |2c| < 1
    for &(c, both_good) in &[(0.1, true), (0.3, true), (0.45, true), (0.6, false), (0.9, false)] {
        let cj = regular(vec![C::new(0.5 + c, 0.0), C::new(0.5 - c, 0.0)], 1, 0.25);
        let r = classify(&cj);
        assert_eq!(r.good.len() == 2, both_good, "c = {c}: {r:?}");
        assert_eq!(r.bad.is_empty(), both_good);
    }
    // c = 2.5 against c' = -0.5 sums to 2
    let (good, bad, sums) = index_classes(&[C::new(2.5, 0.0)], &[C::new(-0.5, 0.0)]);
    assert!(good.is_empty());
    assert_eq!(bad, vec![1]);
    assert_eq!(sums, vec![2.0]);
}

#[test]
fn q_classification_matches_the_inequality() {
    let mut r = rng(61);
    for _ in 0..50 {
        let q = r.gen_range(0.3..0.9);
        let x: f64 = loop {
            let x: f64 = r.gen_range(-1.4..2.4);
            if (2.0 * x - (2.0 * x).round()).abs() > 0.05 {
                break x;
            }
        };
        let y = r.gen_range(0.1..0.5);
        let c = vec![C::new(x, 0.0), C::new(1.0 - x, 0.0), C::new(0.5, y), C::new(0.5, -y)];
        let a = Algebra::<Laurent<f64>>::q_deformed(c.clone(), q).unwrap();
        let cj = Conjugation::q_deformed(Bimodule::regular(&a), 1.0, r.gen_range(0.0..1.0)).unwrap();
        let report = classify(&cj);
        let expect: Vec<usize> = (0..4).filter(|&i| 0.0 < 2.0 * c[i].re && 2.0 * c[i].re < 2.0).map(|i| i + 1).collect();
        assert_eq!(report.good, expect);
        assert_eq!(report.dim, expect.len());
    }
}

#[test]
fn weyl_certificates_and_grams() {
    let c = vec![C::new(0.5, 0.0)];
    let plus = regular(c.clone(), -1, 0.25);
    let w = weight_for(&plus, 0.25, vec![C::new(1.0, 0.0)]);
    let cert = certify_weight(&plus, &w, &CertifySettings::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::Positive);
    assert!(cert.g_check.unwrap().passed);
    let phase = hermitization_phase(&plus, &w).unwrap();
    let single = gram(&plus, &w, 0, 0, phase).unwrap();
    assert_eq!(single.matrix.len(), 1);
    assert!((single.matrix[0][0] * phase).re > 0.0);
    for j in -3..=3 {
        let g = gram(&plus, &w, j, 4, phase).unwrap();
        assert!(g.is_pd(), "j = {j}: {:?}", g.eigenvalues);
        assert!(g.hermitian_residual <= 1e-8);
    }
    let minus = regular(c, 1, 0.25);
    let cert = certify_weight(&minus, &w, &CertifySettings::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::Negative);
    assert!(matches!(cert.witness, Some(Witness::Sign { .. })));
    let witness = find_gram_witness(&minus, &w, 2, 2).unwrap().expect("ρ_- admits no positive trace");
    assert_eq!(witness.verdict, GramVerdict::Indefinite);
}

#[test]
fn g_root_on_the_positive_axis_is_caught() {
    // n = 2, ρ_+, G(y) = 1 - y/2 changes sign at y = 2
    let cj = regular(vec![C::new(0.7, 0.0), C::new(0.3, 0.0)], 1, 0.4);
    let w = weight_for(&cj, 0.4, vec![C::new(1.0, 0.0), C::new(-0.5, 0.0)]);
    let cert = certify_weight(&cj, &w, &CertifySettings::default()).unwrap();
    assert_eq!(cert.verdict, Verdict::Negative);
    assert!(cert.witness.is_some());
    assert!(matches!(g_sign_check(w.g(), RhoSign::Plus), Err(Witness::GSign { x, .. }) if x > 0.0));
    // any nonconstant G of degree one has a real root somewhere
    let ok = weight_for(&cj, 0.4, vec![C::new(1.0, 0.0)]);
    assert_eq!(certify_weight(&cj, &ok, &CertifySettings::default()).unwrap().verdict, Verdict::Positive);
}

#[test]
fn bad_poles_are_rejected_and_witnessed() {
    let cj = regular(vec![C::new(1.1, 0.0), C::new(-0.1, 0.0)], 1, 0.25);
    let w = weight_for(&cj, 0.25, vec![C::new(1.0, 0.0)]);
    let cert = certify_weight(&cj, &w, &CertifySettings::default()).unwrap();
    assert!(matches!(cert.witness, Some(Witness::BadPole { .. })));
    let g = find_gram_witness(&cj, &w, 8, 8).unwrap().expect("bad pole gives a non-PD Gram matrix");
    assert!(!g.is_pd());
}

/// Regular filtered configurations mixing self-paired parameters `1/2 + iy` with
/// swapped pairs `1/2 ± x + iy`.
fn random_config(r: &mut ChaCha8Rng) -> (Vec<C>, i8, f64, Vec<C>) {
    let mut c = Vec::new();
    if r.gen_bool(0.6) {
        let x = r.gen_range(0.1..0.9);
        let y = r.gen_range(-0.3..0.3);
        c.push(C::new(0.5 + x, y));
        c.push(C::new(0.5 - x, y));
    }
    let singles = if c.is_empty() { r.gen_range(1..=2) } else { r.gen_range(0..=1) };
    for k in 0..singles {
        c.push(C::new(0.5, 0.2 + 0.45 * k as f64));
    }
    let epsilon = if r.gen_bool(0.5) { 1 } else { -1 };
    let tau = r.gen_range(0.1..0.9);
    let n = c.len();
    // numerator vanishing at the bad poles, times a random real or complex factor
    let a = Algebra::<Poly<f64>>::filtered(c.clone()).unwrap();
    let cj = Conjugation::filtered(Bimodule::regular(&a), epsilon, tau).unwrap();
    let bad = classify(&cj).bad;
    let aim_positive = r.gen_bool(0.5);
    let mut g = Poly::<f64>::one();
    if aim_positive || r.gen_bool(0.7) {
        for &i in &bad {
            let y = (C::i() * 2.0 * std::f64::consts::PI * c[i - 1]).exp();
            g = &g * &Poly::from_roots(&[y], C::new(1.0, 0.0));
        }
    }
    let room = n - 1 - g.degree_or_zero().min(n - 1);
    let (epsilon, extra) = if aim_positive {
        // constant for ρ_+, odd monomial for ρ_-
        let scale = C::new(r.gen_range(0.2..2.0), 0.0);
        let even = if n % 2 == 0 { 1 } else { -1 };
        if room >= 1 && r.gen_bool(0.5) { (-even, vec![C::new(0.0, 0.0), scale]) } else { (even, vec![scale]) }
    } else {
        let extra = (0..=room)
            .map(|_| if r.gen_bool(0.5) { C::new(r.gen_range(-1.0..1.0), 0.0) } else { rand_c(r, 1.0) })
            .collect();
        (epsilon, extra)
    };
    let g = &g * &Poly::from_coeffs(extra);
    let mut coeffs = g.coeffs().to_vec();
    coeffs.truncate(n);
    (c, epsilon, tau, coeffs)
}

#[test]
fn certificates_agree_with_gram_matrices() {
    let mut r = rng(62);
    let (mut pos, mut neg) = (0, 0);
    for trial in 0..16 {
        let (c, epsilon, tau, g) = random_config(&mut r);
        let cj = regular(c, epsilon, tau);
        let w = weight_for(&cj, tau, g);
        let cert = certify_weight(&cj, &w, &CertifySettings::default()).unwrap();
        match cert.verdict {
            Verdict::Positive => {
                pos += 1;
                let phase = hermitization_phase(&cj, &w).unwrap();
                for j in -4..=4 {
                    let report = gram(&cj, &w, j, 4, phase).unwrap();
                    assert!(report.is_pd(), "trial {trial}, j = {j}: {:?} {:?} {:e}", report.verdict, report.eigenvalues, report.hermitian_residual);
                }
            }
            Verdict::Negative => {
                neg += 1;
                let found = find_gram_witness(&cj, &w, 8, 8).unwrap();
                assert!(found.is_some(), "trial {trial}: {:?} has no Gram witness", cert.witness);
            }
        }
    }
    assert!(pos > 0 && neg > 0, "{pos} positive, {neg} negative");
}

#[test]
fn gram_is_linear_in_g() {
    let cj = regular(vec![C::new(0.6, 0.1), C::new(0.4, 0.1), C::new(0.5, 0.7)], -1, 0.35);
    let g1 = vec![C::new(1.0, 0.2), C::new(-0.3, 0.0), C::new(0.1, 0.4)];
    let g2 = vec![C::new(0.2, -0.5), C::new(0.7, 0.1), C::new(-0.4, 0.0)];
    let sum: Vec<C> = g1.iter().zip(&g2).map(|(a, b)| a + b).collect();
    let one = C::new(1.0, 0.0);
    for j in [-2, 0, 1, 3] {
        let m1 = gram(&cj, &weight_for(&cj, 0.35, g1.clone()), j, 3, one).unwrap().matrix;
        let m2 = gram(&cj, &weight_for(&cj, 0.35, g2.clone()), j, 3, one).unwrap().matrix;
        let ms = gram(&cj, &weight_for(&cj, 0.35, sum.clone()), j, 3, one).unwrap().matrix;
        let scale = ms.iter().flatten().fold(0.0f64, |m, v| m.max(v.norm()));
        for a in 0..m1.len() {
            for b in 0..m1.len() {
                assert!((ms[a][b] - m1[a][b] - m2[a][b]).norm() <= 1e-9 * scale);
            }
        }
    }
}

fn q_setup(s: f64) -> (Conjugation<Laurent<f64>>, Vec<C>) {
    let q = 0.6;
    let c = vec![C::new(0.5, 0.3), C::new(0.5, -0.3)];
    let a = Algebra::<Laurent<f64>>::q_deformed(c.clone(), q).unwrap();
    let cj = Conjugation::q_deformed(Bimodule::regular(&a), 1.0, s).unwrap();
    let poles = c.iter().map(|ci| (ci * 2.0 * q.ln()).exp()).collect();
    (cj, poles)
}

/// Two poles on the parameter lattices, two zeros with the product fixed by the twist.
fn q_weight(cj: &Conjugation<Laurent<f64>>, poles: &[C], first_zero: C) -> ThetaQuotientWeight {
    let p = cj.module().left().q().powi(2);
    let second = poles[0] * poles[1] * cj.twist() * p / first_zero;
    ThetaQuotientWeight::new(cj.module().left(), C::new(1.0, 0.0), -2, vec![first_zero, second], poles.to_vec()).unwrap()
}

#[test]
fn q_reduction_to_two_circles() {
    let (cj, poles) = q_setup(0.0);
    for &(zero, positive) in &[(C::new(-0.3, 0.0), true), (C::new(-1.5, 0.0), true), (C::new(0.5, 0.0), false)] {
        let w = q_weight(&cj, &poles, zero);
        let cert = certify_q_weight(&cj, &w, &CertifySettings::default()).unwrap();
        assert_eq!(cert.verdict == Verdict::Positive, positive, "{:?}", cert.witness);
        let phase = hermitization_phase(&cj, &w).unwrap();
        let mut all_pd = true;
        for j in 0..=1 {
            let base = gram(&cj, &w, j, 2, phase).unwrap();
            let shifted = gram(&cj, &w, j + 2, 2, phase).unwrap();
            assert_eq!(base.verdict, shifted.verdict, "j = {j}");
            assert!(base.hermitian_residual <= 1e-8 && shifted.hermitian_residual <= 1e-8);
            all_pd &= base.is_pd();
        }
        assert_eq!(all_pd, positive);
    }
}

#[test]
fn q_bad_poles_and_twist_mismatch() {
    let q = 0.6;
    let c = vec![C::new(1.2, 0.0), C::new(-0.2, 0.0)];
    let a = Algebra::<Laurent<f64>>::q_deformed(c.clone(), q).unwrap();
    let cj = Conjugation::q_deformed(Bimodule::regular(&a), 1.0, 0.0).unwrap();
    assert_eq!(classify(&cj).bad, vec![1, 2]);
    let pole = (c[0] * 2.0 * q.ln()).exp();
    let w = ThetaQuotientWeight::new(&a, C::new(1.0, 0.0), 0, vec![pole], vec![pole * 1.0001]);
    assert!(w.is_err());
    let w = ThetaQuotientWeight::new(&a, C::new(1.0, 0.0), 0, vec![pole], vec![pole]).unwrap();
    let cert = certify_q_weight(&cj, &w, &CertifySettings::default()).unwrap();
    assert!(matches!(cert.witness, Some(Witness::BadPole { index: 1, .. })));

    let (cj, poles) = q_setup(0.1);
    let wrong = ThetaQuotientWeight::new(cj.module().left(), C::new(1.0, 0.0), 0, vec![poles[0] / cj.twist()], vec![poles[0]]).unwrap();
    assert!(certify_q_weight(&cj, &wrong, &CertifySettings::default()).is_err());
}

#[test]
fn unitary_loci() {
    let p = sl2_loci(3, 0.0, Some(0.5)).unwrap();
    let r = 0.125f64;
    assert!((p.value - C::new(r + 1.0 / r, 0.0)).norm() < 1e-12);
    assert_eq!(sl2_loci(2, 0.0, None).unwrap().value, C::new(1.0, 0.0));
    let parabola = sl2_loci(2, 1.0, None).unwrap();
    assert_eq!(parabola.value, C::new(0.0, 2.0));
    assert_eq!(parabola.residual, 0.0);
    assert!(sl2_loci(0, 0.0, None).is_err());
}

#[test]
fn factored_gram_matches_expanded_products() {
    let cj = regular(vec![C::new(0.6, 0.1), C::new(0.4, 0.1), C::new(0.5, 0.7)], -1, 0.35);
    let w = weight_for(&cj, 0.35, vec![C::new(1.0, 0.2), C::new(-0.3, 0.0), C::new(0.1, 0.4)]);
    let (qcj, poles) = q_setup(0.0);
    let qw = q_weight(&qcj, &poles, C::new(-0.5, 0.0));
    for j in [-2, 0, 1, 2] {
        let basis = gram_basis(&cj, j, 2);
        let g = gram(&cj, &w, j, 2, C::new(1.0, 0.0)).unwrap();
        let qbasis = gram_basis(&qcj, j, 1);
        let qg = gram(&qcj, &qw, j, 1, C::new(1.0, 0.0)).unwrap();
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                let direct = form_value(&cj, &w, &basis[a], &basis[b]).unwrap();
                assert!((direct - g.matrix[a][b]).norm() <= 1e-9 * direct.norm().max(1.0));
            }
        }
        for a in 0..qbasis.len() {
            for b in 0..qbasis.len() {
                let direct = form_value(&qcj, &qw, &qbasis[a], &qbasis[b]).unwrap();
                assert!((direct - qg.matrix[a][b]).norm() <= 1e-9 * direct.norm().max(1.0));
            }
        }
    }
}
