//! Floating-point scalar abstraction for the numeric side of the library.
//!
//! Exact arithmetic lives in [`crate::cyclotomic`] and [`crate::dmt`] over
//! arbitrary-precision rationals; everything that touches doubles (embeddings,
//! search, simulation) is generic over [`Real`] so it works at f32 or f64.

use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point scalar: f32 or f64.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn from_f64c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }
    fn from_usizec(x: usize) -> Self {
        Self::from_usize(x).expect("usize conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
