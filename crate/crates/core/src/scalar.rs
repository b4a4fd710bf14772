//! Scalar abstraction: every field operation is generic over the floating
//! point type through [`Scalar`].

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point scalar for grid fields and solvers: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Cast an `f64` literal into the scalar type.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from(x).expect("constant not representable in scalar type")
}
