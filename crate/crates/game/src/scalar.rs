//! Scalar abstraction shared by every numeric routine in the workspace.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type used for probabilities, benefits and kernel values.
///
/// Implemented for `f32` and `f64`. All constants in generic code go through
/// [`Scalar::lit`] so that literals stay readable.
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
    /// Converts an `f64` literal. Never fails for finite inputs on f32/f64.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal fits the scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
