//! Scalar abstraction shared by the geometric kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type usable by the geometry kernel (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut w = (a + T::PI()) % two_pi;
    if w < T::zero() {
        w = w + two_pi;
    }
    let w = w - T::PI();
    // `%` can land exactly on +pi after the shift for tiny negative inputs
    if w >= T::PI() {
        w - two_pi
    } else {
        w
    }
}

/// Signed shortest angular difference `b - a` in `[-pi, pi)`.
#[inline]
pub fn angle_diff<T: Real>(a: T, b: T) -> T {
    wrap_angle(b - a)
}
