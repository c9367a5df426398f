use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar backing every complex coefficient. Implemented for `f32` and `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub fn cx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn real<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

pub fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// `i^k` computed exactly from `k mod 4`.
pub fn i_pow<T: Real>(k: i64) -> Complex<T> {
    match k.rem_euclid(4) {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

/// `(-1)^k` as a real scalar.
pub fn sign_pow<T: Real>(k: i64) -> T {
    if k.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Nearest integer to `x` and the distance to it.
pub fn nearest_integer<T: Real>(x: T) -> (i64, T) {
    let r = x.round();
    (r.to_i64().unwrap_or(0), (x - r).abs())
}

/// Integer `n` with `z ≈ n` (real part rounded); `None` when farther than `tol`.
pub fn as_integer<T: Real>(z: Complex<T>, tol: T) -> Option<i64> {
    let (k, d) = nearest_integer(z.re);
    if d <= tol && z.im.abs() <= tol {
        Some(k)
    } else {
        None
    }
}

/// Complex power `base^e` for a positive real base, via `exp(e ln base)`.
pub fn real_pow<T: Real>(base: T, e: Complex<T>) -> Complex<T> {
    (e * base.ln()).exp()
}
