//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Used for constants and tolerances.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Evenly spaced grid of `n >= 2` points covering `[a, b]`, endpoints exact.
pub fn linspace<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    assert!(n >= 2, "linspace needs at least two points");
    let last = n - 1;
    let span = b - a;
    (0..n)
        .map(|k| {
            if k == last {
                b
            } else {
                a + span * (T::from_usize_lossy(k) / T::from_usize_lossy(last))
            }
        })
        .collect()
}
