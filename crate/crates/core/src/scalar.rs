//! Floating-point scalar abstraction for the geometric core.
//!
//! The camera model, BEV cost maps, and controllers are generic over
//! [`Scalar`] so they can run in `f32` or `f64`. The simulator and the
//! benchmark pipeline pin everything to [`Real`](crate::Real).

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// f32 or f64.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for lossless-enough literal conversion into a generic scalar.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle<T: Scalar>(theta: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut t = theta % two_pi;
    if t <= -T::PI() {
        t += two_pi;
    } else if t > T::PI() {
        t -= two_pi;
    }
    t
}
