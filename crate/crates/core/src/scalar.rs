//! Floating-point abstraction shared by the geometric and optimization code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the library is generic over (`f32` or `f64`).
///
/// Besides the arithmetic bounds, each implementation carries the numerical
/// tolerances the solver uses, since a tie tolerance that is sensible for
/// double precision is meaningless in single precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Relative tolerance used to treat a residual capacity as saturated
    /// in max-flow, and two fitted values as tied.
    fn cut_tolerance() -> Self;

    /// Default relative duality-gap target of the TV solver.
    fn default_gap_tolerance() -> Self;

    /// Lossy conversion from `f64`, for literals.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn cut_tolerance() -> Self {
        1e-12
    }

    fn default_gap_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn cut_tolerance() -> Self {
        1e-6
    }

    fn default_gap_tolerance() -> Self {
        1e-4
    }
}

/// Squared Euclidean distance. Summation order is fixed so that every code
/// path comparing distances sees bit-identical values.
#[inline]
pub fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        acc = acc + d * d;
    }
    acc
}

#[inline]
pub fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

#[inline]
pub fn mean<T: Scalar>(v: &[T]) -> T {
    if v.is_empty() {
        return T::zero();
    }
    v.iter().copied().sum::<T>() / T::from_usize(v.len()).unwrap()
}
