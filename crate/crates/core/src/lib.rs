//! Conformal-variable laboratory for two-dimensional free-surface flow.
//!
//! The crate is generic over the real scalar type; the aliases below fix it
//! to `f64`, which is what the solver, the CLI and the test suites use.

pub mod analytic;
pub mod compressed_fluid;
pub mod dyachenko;
pub mod error;
pub mod invariants;
pub mod narrow_cut;
pub mod scalar;
pub mod selfsimilar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;
pub type Cplx = num_complex::Complex<f64>;
pub type RationalFn = analytic::RationalFn<f64>;
pub type Grid = spectral::Grid<f64>;
pub type ComplexField = spectral::ComplexField<f64>;
