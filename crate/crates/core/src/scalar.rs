//! Scalar abstraction: the model is generic over `f32`/`f64`.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Real scalar type the whole crate is generic over.
///
/// `of` lifts an `f64` literal into `T`; formulas read as
/// `T::of(27.0 / 4.0) * d * d`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + LowerExp + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    /// Lossy view as `f64`, for error messages and reports.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `Some(k)` when `e` is exactly an integer small enough for `powi`.
pub(crate) fn integer_exponent<T: Real>(e: T) -> Option<i32> {
    if e.fract() == T::zero() && e.abs() <= T::of(1e9) {
        e.to_i32()
    } else {
        None
    }
}
