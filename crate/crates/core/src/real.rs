//! Scalar abstraction for the numeric core.
//!
//! Everything downstream of file ingestion is generic over [`Real`], so the
//! same pipeline runs in `f32` or `f64`. Concrete aliases for both live at
//! the crate root. The documented tolerances (filter DC gain, t-CDF
//! accuracy) assume `f64`; `f32` degrades them proportionally to its epsilon.

use core::fmt;
use core::iter::Sum;
use core::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the signal chain is generic over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + FromStr
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable as Real")
    }

    /// Converts a count into `Self`.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable as Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic mean of a non-empty slice.
pub(crate) fn mean<F: Real>(values: &[F]) -> F {
    debug_assert!(!values.is_empty());
    values.iter().copied().sum::<F>() / F::of_usize(values.len())
}

/// Sample variance with the n-1 denominator; zero for fewer than two values.
pub(crate) fn sample_variance<F: Real>(values: &[F], mean: F) -> F {
    if values.len() < 2 {
        return F::zero();
    }
    let ss = values
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum::<F>();
    ss / F::of_usize(values.len() - 1)
}

/// Median of a slice, destroying its order. Assumes finite values.
pub(crate) fn median_in_place<F: Real>(values: &mut [F]) -> F {
    debug_assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values order totally"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / F::of(2.0)
    }
}
