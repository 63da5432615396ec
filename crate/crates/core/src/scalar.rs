use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the forest arithmetic is written against.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to any float")
    }

    /// Converts a count. Exact for counts below the mantissa width.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to any float")
    }

    /// Smallest probability `cross_entropy_loss` takes the log of.
    #[inline]
    fn prob_floor() -> Self {
        Self::lit(1e-300).max(Self::min_positive_value())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
