mod common;

use common::*;
use gwa_core::algebra::{Algebra, Coefficient, Element};
use gwa_core::bimodule::Bimodule;
use gwa_core::conjugation::{pow_c, Conjugation};
use gwa_core::poly::{Laurent, Poly};
use gwa_core::Error;
use rand::Rng;

fn filtered_conj(c: Vec<C>, cp: Vec<C>, eps: i8, tau: f64) -> Conjugation<Poly<f64>> {
    Conjugation::filtered(Bimodule::new(c, cp, &()).unwrap(), eps, tau).unwrap()
}

fn q_conj(c: Vec<C>, cp: Vec<C>, q: f64, abs_a: f64, s: f64) -> Conjugation<Laurent<f64>> {
    Conjugation::q_deformed(Bimodule::new(c, cp, &q).unwrap(), abs_a, s).unwrap()
}

fn worst<K: RandomCoefficient>(cj: &Conjugation<K>, m: &Element<K>) -> f64 {
    cj.intertwining_residuals(m).unwrap_or_else(|e| panic!("{e:?} for {m:?} in {:?}", cj.module().gaps())).into_iter().map(|(_, r)| r).fold(0.0, f64::max)
}

#[test]
fn pairing_examples() {
    let c = vec![C::new(0.5, 1.0)];
    let cj = filtered_conj(c.clone(), c, 1, 0.3);
    assert_eq!(cj.sigma(), &[0]);
    assert!(cj.pairing_residual() < 1e-15);

    let c = vec![C::new(0.2, 0.0), C::new(0.8, 0.0)];
    let cj = filtered_conj(c.clone(), c, 1, 0.3);
    assert_eq!(cj.sigma(), &[1, 0]);

    let c = vec![C::new(0.25, 0.0)];
    let m = Bimodule::<Poly<f64>>::new(c.clone(), c, &()).unwrap();
    assert_eq!(Conjugation::filtered(m, 1, 0.3).unwrap_err(), Error::NoPairing { i: 0 });
}

#[test]
fn filtered_intertwining() {
    let mut r = rng(11);
    for trial in 0..40 {
        let n = 1 + trial % 3;
        let (c, cp) = filtered_sigma_id(&mut r, n);
        let eps = if r.gen_bool(0.5) { 1 } else { -1 };
        let cj = filtered_conj(c, cp, eps, r.gen_range(0.0..1.0));
        let m = rand_member(&mut r, cj.module(), 8, 3, 3);
        let res = worst(&cj, &m);
        assert!(res < 1e-9, "trial {trial}: residual {res:e}");
    }
    let mut r = rng(12);
    for _ in 0..10 {
        let c = regular_swap(&mut r);
        let cj = filtered_conj(c.clone(), c, 1, 0.4);
        let m = rand_member(&mut r, cj.module(), 8, 3, 3);
        assert!(worst(&cj, &m) < 1e-9);
    }
}

#[test]
fn q_intertwining() {
    let mut r = rng(13);
    for trial in 0..30 {
        let (c, cp) = q_sigma_id(&mut r);
        let q = [0.7, 0.8, 0.9][trial % 3];
        let cj = q_conj(c, cp, q, r.gen_range(0.5..2.0), r.gen_range(0.0..1.0));
        let m = rand_member(&mut r, cj.module(), 8, 3, 2);
        let res = worst(&cj, &m);
        assert!(res < 1e-9, "trial {trial}: residual {res:e}");
    }
}

#[test]
fn filtered_leading_coefficient_rule() {
    let mut r = rng(14);
    for _ in 0..20 {
        let (c, cp) = filtered_sigma_id(&mut r, 2);
        let cj = filtered_conj(c, cp, 1, 0.35);
        let m = cj.module();
        let c_phi = gwa_core::scalar::i_pow::<f64>(m.gaps().iter().sum());
        for j in -6..=6 {
            let deg = m.rj_roots(-j).len() as i64;
            let expect = c_phi * gwa_core::scalar::sign_pow::<f64>(deg) * pow_c(cj.a(), -j);
            assert!((cj.sj(j).leading() - expect).norm() < 1e-12, "j = {j}");
        }
    }
}

#[test]
fn real_on_critical_lines() {
    let mut r = rng(15);
    let ys: Vec<f64> = (0..41).map(|k| -10.0 + 0.5 * k as f64).collect();
    for _ in 0..20 {
        let n = r.gen_range(1..=3);
        let (c, cp) = filtered_sigma_id(&mut r, n);
        let cj = filtered_conj(c, cp, if r.gen_bool(0.5) { 1 } else { -1 }, r.gen_range(0.0..1.0));
        for j in -5..=5 {
            let prof = cj.rs_product_profile(j, &ys);
            for (t, v) in &prof {
                assert!(v.im.abs() <= 1e-9 * v.norm().max(1.0), "j={j} t={t} v={v}");
            }
            // eventually positive far up the line
            let (_, top) = cj.rs_product_profile(j, &[1e3])[0];
            assert!(top.re > 0.0, "j={j} top={top}");
        }
    }
    let thetas: Vec<f64> = (0..32).map(|k| k as f64 * std::f64::consts::TAU / 32.0).collect();
    for trial in 0..20 {
        let (c, cp) = q_sigma_id(&mut r);
        let cj = q_conj(c, cp, [0.5, 0.8][trial % 2], r.gen_range(0.5..2.0), r.gen_range(0.0..1.0));
        for j in -5..=5 {
            for (z, v) in cj.rs_product_profile(j, &thetas) {
                assert!(v.im.abs() <= 1e-9 * v.norm().max(1.0), "j={j} z={z} v={v}");
            }
        }
    }
}

#[test]
fn root_disjointness_identities() {
    let mut r = rng(16);
    for _ in 0..15 {
        let (c, cp) = filtered_sigma_id(&mut r, 2);
        let cj = filtered_conj(c, cp, -1, r.gen_range(0.0..1.0));
        let m = cj.module();
        for j in -6..=6 {
            let lhs = cj.mj(j).times(&m.lj(j).star_reflect());
            let rhs = m.right().defining_poly().weight_shift(-0.5 - j as f64, &()).scaled(cj.a());
            assert!(lhs.minus(&rhs).norm() < 1e-9 * rhs.norm().max(1.0), "j = {j}");
        }
    }
    for trial in 0..15 {
        let (c, cp) = q_sigma_id(&mut r);
        let q = [0.5, 0.7, 0.9][trial % 3];
        let cj = q_conj(c, cp, q, r.gen_range(0.5..2.0), r.gen_range(0.0..1.0));
        let m = cj.module();
        for j in -6..=6 {
            let lhs = cj.mj(j).times(&m.lj(j).star_reflect());
            let rhs = m.right().defining_poly().weight_shift(-0.5 - j as f64, &q).scaled(cj.a());
            assert!(lhs.minus(&rhs).norm() < 1e-9 * rhs.norm().max(1.0), "j = {j}");
        }
    }
}

#[test]
fn composite_is_the_twist() {
    let mut r = rng(17);
    for _ in 0..10 {
        let (c, cp) = filtered_sigma_id(&mut r, 2);
        let cj = filtered_conj(c, cp, 1, r.gen_range(0.0..1.0));
        let back = cj.reverse().unwrap();
        for j in -5..=5 {
            let m = Element::term(&(), j, cj.module().rj(j).times(&rand_poly(&mut r, 2)));
            let twisted = m.scale(pow_c(cj.twist(), j));
            let round = back.apply_phi(&cj.apply_phi(&m).unwrap()).unwrap();
            assert!((&round - &twisted).norm() < 1e-9 * m.norm(), "j = {j}");
        }
    }
    for _ in 0..10 {
        let (c, cp) = q_sigma_id(&mut r);
        let cj = q_conj(c, cp, 0.6, r.gen_range(0.5..2.0), r.gen_range(0.0..1.0));
        let back = cj.reverse().unwrap();
        for j in -5..=5 {
            let m = Element::term(&0.6, j, cj.module().rj(j).times(&rand_laurent(&mut r, 1)));
            let twisted = m.scale(pow_c(cj.twist(), j));
            let round = back.apply_phi(&cj.apply_phi(&m).unwrap()).unwrap();
            assert!((&round - &twisted).norm() < 1e-9 * m.norm(), "j = {j}");
        }
    }
}

#[test]
fn q_ratio_positivity_and_parity() {
    let mut r = rng(18);
    for trial in 0..15 {
        let (c, cp) = q_sigma_id(&mut r);
        let q = [0.5, 0.7][trial % 2];
        let cj = q_conj(c, cp, q, r.gen_range(0.5..2.0), r.gen_range(0.0..1.0));
        for j in -5..=5 {
            for k in 0..24 {
                let z = C::from_polar(1.0, k as f64 * 0.26);
                // a^{-2} R_{j+2}(q^{-j-2}z) S_{-j-2}(q^{j+2}z) / (R_j(q^{-j}z) S_{-j}(q^j z))
                let v = cj.rs_product_at(j + 2, z) / cj.rs_product_at(j, z);
                assert!(v.re > 0.0 && v.im.abs() < 1e-9 * v.norm(), "j={j} v={v}");
            }
            assert_eq!(cj.module().rj(j).parity(), cj.sj(-j).parity());
        }
    }
}

#[test]
fn rho_respects_relations() {
    let a = Algebra::filtered(vec![C::new(0.3, 0.2), C::new(0.7, 0.2)]).unwrap();
    let m = Bimodule::regular(&a);
    let cj = Conjugation::filtered(m, 1, 0.3).unwrap();
    let rho_uv = cj.rho(&(a.u() * a.v())).unwrap();
    let prod = &cj.rho(a.u()).unwrap() * &cj.rho(a.v()).unwrap();
    assert!((&rho_uv - &prod).norm() < 1e-12);
    let z = cj.rho(a.cartan()).unwrap();
    assert_eq!(z, a.cartan().scale(C::new(-1.0, 0.0)));
}
