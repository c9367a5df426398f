//! Random generators shared by the integration tests.
#![allow(dead_code)]

use gwa_core::algebra::{Coefficient, Element};
use gwa_core::bimodule::Bimodule;
use gwa_core::poly::{Laurent, Poly};
use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub type C = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_c(r: &mut ChaCha8Rng, scale: f64) -> C {
    C::new(r.gen_range(-scale..scale), r.gen_range(-scale..scale))
}

pub fn rand_poly(r: &mut ChaCha8Rng, deg: usize) -> Poly<f64> {
    Poly::from_coeffs((0..=deg).map(|_| rand_c(r, 1.0)).collect())
}

pub fn rand_laurent(r: &mut ChaCha8Rng, span: i64) -> Laurent<f64> {
    let terms: Vec<_> = (-span..=span).map(|k| (2 * k, rand_c(r, 1.0))).collect();
    Laurent::from_terms2(&terms)
}

/// Random coefficient of the right variant.
pub trait RandomCoefficient: Coefficient<Real = f64> {
    fn random(r: &mut ChaCha8Rng, size: usize) -> Self;
}

impl RandomCoefficient for Poly<f64> {
    fn random(r: &mut ChaCha8Rng, size: usize) -> Self {
        rand_poly(r, size)
    }
}

impl RandomCoefficient for Laurent<f64> {
    fn random(r: &mut ChaCha8Rng, size: usize) -> Self {
        rand_laurent(r, size as i64 / 2)
    }
}

/// Random element of `M` supported on at most `terms` weights in `[-jmax, jmax]`.
pub fn rand_member<K: RandomCoefficient>(
    r: &mut ChaCha8Rng,
    m: &Bimodule<K>,
    jmax: i64,
    terms: usize,
    size: usize,
) -> Element<K> {
    let mut e = Element::zero(m.ctx());
    for _ in 0..terms {
        let j = r.gen_range(-jmax..=jmax);
        e.add_term(j, m.rj(j).times(&K::random(r, size)));
    }
    e
}

/// Filtered `(c, c')` with `c'_i = 1 - conj(c_i)`, i.e. σ = id and `2 Re c_i ∈ ℤ`.
pub fn filtered_sigma_id(r: &mut ChaCha8Rng, n: usize) -> (Vec<C>, Vec<C>) {
    let c: Vec<C> = (0..n)
        .map(|i| C::new(r.gen_range(-2..=3) as f64 / 2.0, 0.37 * (i as f64 + 1.0) + r.gen_range(-0.1..0.1)))
        .collect();
    let cp = c.iter().map(|x| 1.0 - x.conj()).collect();
    (c, cp)
}

/// q-case `(c, c')` with σ = id, `n = 2`, and integral parameter sums.
pub fn q_sigma_id(r: &mut ChaCha8Rng) -> (Vec<C>, Vec<C>) {
    let k1 = r.gen_range(-2..=3);
    let k2 = r.gen_range(0..=1) * 2 - k1;
    let y = r.gen_range(0.15..0.6);
    let c = vec![C::new(k1 as f64 / 2.0, y), C::new(k2 as f64 / 2.0, -y)];
    let cp = c.iter().map(|x| 1.0 - x.conj()).collect();
    (c, cp)
}

/// Regular pair `c = (x, 1 - x)` with σ swapping the two indices.
pub fn regular_swap(r: &mut ChaCha8Rng) -> Vec<C> {
    let x = C::new(r.gen_range(-0.45..0.45) + 0.5, r.gen_range(-0.4..0.4));
    vec![x, 1.0 - x.conj()]
}
