//! Generalized Weyl algebras `A_c`, their q-analogs, Harish-Chandra bimodules
//! `M_{c,c'}`, twisted traces given by contour integrals, positivity of the
//! associated Hermitian forms, and short star-products built from traces.
//!
//! The algebraic layer (`poly`, `algebra`, `bimodule`, `conjugation`) is generic
//! over the real scalar; the numerical layer (`trace`, `qtrace`, `positivity`,
//! `starprod`) works in `f64`.

pub mod algebra;
pub mod bimodule;
pub mod conjugation;
pub mod error;
pub mod poly;
pub mod positivity;
pub mod qtrace;
pub mod scalar;
pub mod starprod;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;

pub type Poly64 = poly::Poly<f64>;
pub type Poly32 = poly::Poly<f32>;
pub type Laurent64 = poly::Laurent<f64>;
pub type Laurent32 = poly::Laurent<f32>;

pub type FilteredElement = algebra::Element<Poly64>;
pub type QElement = algebra::Element<Laurent64>;
pub type FilteredAlgebra = algebra::Algebra<Poly64>;
pub type QAlgebra = algebra::Algebra<Laurent64>;
pub type FilteredBimodule = bimodule::Bimodule<Poly64>;
pub type QBimodule = bimodule::Bimodule<Laurent64>;
pub type FilteredConjugation = conjugation::Conjugation<Poly64>;
pub type QConjugation = conjugation::Conjugation<Laurent64>;
