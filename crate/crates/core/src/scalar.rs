//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::ToPrimitive;

/// Real floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + ToPrimitive + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// A validation tolerance: `base` for `f64`, widened to a small multiple
    /// of machine epsilon for lower precision types.
    #[inline]
    fn tol(base: f64) -> Self {
        let eps = Self::default_epsilon().as_f64();
        Self::lit(base.max(256.0 * eps))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over a real scalar.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

/// `|z|²` without the square root.
#[inline]
pub(crate) fn norm_sqr<T: Real>(z: C<T>) -> T {
    z.re * z.re + z.im * z.im
}
