//! Scalar abstraction: the floating-point type the whole crate is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar (`f32` or `f64`) used by all geometry and solvers.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Parse decimal text with this type's native rounding, so that values
    /// written with `Display` round-trip exactly.
    fn parse_decimal(s: &str) -> Option<Self>;
}

impl Real for f32 {
    fn parse_decimal(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

impl Real for f64 {
    fn parse_decimal(s: &str) -> Option<Self> {
        s.parse().ok()
    }
}

/// Convert an `f64` constant into the working scalar.
#[inline]
pub fn real<R: Real>(v: f64) -> R {
    R::from_f64(v).expect("constant not representable in scalar type")
}
