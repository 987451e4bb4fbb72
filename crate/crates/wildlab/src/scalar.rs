//! Floating-point scalar abstraction for the numeric layer.
//!
//! Everything spectral is generic over [`Real`]; concrete `f32`/`f64`
//! aliases live at the crate root. Each scalar type carries its own
//! thread-local FFT planner so plans are reused across calls.

use std::cell::RefCell;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::sync::Arc;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::{Fft, FftNum, FftPlanner};

pub trait Real:
    FftNum
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Display
    + LowerExp
    + Debug
{
    /// Plan (or fetch a cached plan for) an FFT of the given length.
    fn plan_fft(len: usize, inverse: bool) -> Arc<dyn Fft<Self>>;
}

/// Convert a finite `f64` into the scalar type.
pub fn real<T: Real>(x: f64) -> T {
    <T as FromPrimitive>::from_f64(x).expect("finite f64 converts")
}

/// Widen a scalar to `f64`.
pub fn to_f64<T: Real>(x: T) -> f64 {
    <T as ToPrimitive>::to_f64(&x).expect("scalar converts to f64")
}

macro_rules! impl_real {
    ($t:ty, $planner:ident) => {
        impl Real for $t {
            fn plan_fft(len: usize, inverse: bool) -> Arc<dyn Fft<$t>> {
                thread_local! {
                    static $planner: RefCell<FftPlanner<$t>> =
                        RefCell::new(FftPlanner::new());
                }
                $planner.with(|p| {
                    let mut p = p.borrow_mut();
                    if inverse {
                        p.plan_fft_inverse(len)
                    } else {
                        p.plan_fft_forward(len)
                    }
                })
            }
        }
    };
}

impl_real!(f32, PLANNER_F32);
impl_real!(f64, PLANNER_F64);
