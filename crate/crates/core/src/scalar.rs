//! Floating-point abstraction shared by the numeric kernels.
//!
//! Everything under [`crate::learn`], [`crate::stats`] and the regression
//! metrics is written against [`Scalar`] so the same code runs on `f32` and
//! `f64`. The table-level machinery (datasets, pipelines, search) is fixed to
//! [`crate::Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar usable by the learning kernels.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics only for types that cannot hold
    /// finite `f64` values, which no implementor does.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to Scalar")
    }

    /// Conversion from a count.
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize converts to Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
