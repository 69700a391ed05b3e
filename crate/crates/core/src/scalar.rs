//! Scalar abstraction shared by every numeric type in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Coefficients, channel entries and constellation levels are stored in `T`.
/// Energies and statistics are accumulated in `f64` through [`Real::as_f64`].
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn of_f64(v: f64) -> Self;

    fn as_f64(self) -> f64;

    fn of_usize(v: usize) -> Self {
        Self::of_f64(v as f64)
    }
}

impl Real for f32 {
    #[inline]
    fn of_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn of_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
