//! Scalar abstractions.
//!
//! Penalty computation and reward adjustment only need field arithmetic and an
//! ordering, so they run over [`Scalar`], which exact rationals satisfy.
//! Anything that takes a square root, an exponential or a logarithm needs
//! [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num};

/// Ordered field element usable for reward arithmetic (f32, f64, `Ratio<i64>`).
pub trait Scalar: Num + PartialOrd + Copy + FromPrimitive + Debug {
    /// Converts a count into the scalar type.
    ///
    /// Group sizes are tiny, so a failed conversion is a programming error.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Scalar for T where T: Num + PartialOrd + Copy + FromPrimitive + Debug {}

/// Floating-point scalar: f32 or f64.
pub trait Real: Scalar + Float + std::iter::Sum {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn sum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    xs.into_iter().fold(T::zero(), |acc, x| acc + x)
}

pub(crate) fn max_of<T: Scalar>(xs: impl IntoIterator<Item = T>) -> Option<T> {
    xs.into_iter().fold(None, |best, x| match best {
        Some(b) if b >= x => Some(b),
        _ => Some(x),
    })
}

pub(crate) fn min_of<T: Scalar>(xs: impl IntoIterator<Item = T>) -> Option<T> {
    xs.into_iter().fold(None, |best, x| match best {
        Some(b) if b <= x => Some(b),
        _ => Some(x),
    })
}
