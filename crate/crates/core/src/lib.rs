//! Numerical laboratory for the quantum Champagne bottle: joint spectra,
//! singular Bohr-Sommerfeld rules near the focus-focus value, gap and
//! counting laws, and classical and quantum monodromy.

// Negated float comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohr_sommerfeld;
pub mod classical;
pub mod error;
pub mod gaps;
pub mod lattice;
pub mod linalg;
pub mod pick;
pub mod scalar;
pub mod special;
pub mod spectrum;
pub mod tolerances;
pub mod tridiagonal;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;
pub type ComplexValue = Complex64;
pub type Tridiagonal = tridiagonal::SymTridiagonal<f64>;
pub type Tridiagonal32 = tridiagonal::SymTridiagonal<f32>;
