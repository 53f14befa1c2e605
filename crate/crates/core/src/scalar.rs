//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Real floating-point type the solver is generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FftNum + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from(x).expect("literal representable in scalar type")
}

#[inline]
pub fn cx<T: Scalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(lit(re), lit(im))
}

#[inline]
pub fn imag_unit<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
