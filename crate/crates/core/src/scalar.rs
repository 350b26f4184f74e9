//! Scalar abstraction shared by every numerical routine.

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};
use rustfft::FftNum;
use std::fmt::{Debug, Display};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + Send + Sync
{
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
    #[inline]
    fn from_i64_lossy(m: i64) -> Self {
        Self::from_i64(m).expect("integer representable")
    }
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ring arithmetic without rounding: `i128`, `BigInt`, `BigRational`.
///
/// Used where an identity has to hold exactly (resonance functions,
/// divisibility audits). Floats satisfy the bounds too, but then the
/// results are only as exact as the float.
pub trait Exact: Clone + Num + Signed + PartialOrd + Debug {}

impl<T: Clone + Num + Signed + PartialOrd + Debug> Exact for T {}

/// `x^n` by repeated squaring in any ring.
pub fn ipow<I: Exact>(x: &I, mut n: u32) -> I {
    let mut base = x.clone();
    let mut acc = I::one();
    while n > 0 {
        if n & 1 == 1 {
            acc = acc * base.clone();
        }
        n >>= 1;
        if n > 0 {
            base = base.clone() * base;
        }
    }
    acc
}

/// Japanese bracket `sqrt(1 + x^2)`.
#[inline]
pub fn bracket<T: Real>(x: T) -> T {
    T::one().hypot(x)
}
