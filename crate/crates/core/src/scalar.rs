//! Floating-point abstraction used by the closed-form and message-passing code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast, ToPrimitive};

/// Real scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; every supported type can represent the
    /// constants used in this crate.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `x / (1 - x)`, the odds ratio of an occupation probability.
#[inline]
pub fn odds<T: Scalar>(x: T) -> T {
    x / (T::one() - x)
}

/// `ln(n!)` by direct summation; exact enough for the small degrees we use.
pub fn ln_factorial<T: Scalar>(n: usize) -> T {
    (2..=n).fold(T::zero(), |acc, i| acc + T::of_usize(i).ln())
}
