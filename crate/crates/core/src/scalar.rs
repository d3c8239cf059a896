//! Scalar abstraction over raster sample types.

use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type raster samples and grid math are generic over.
///
/// `f64` is the working precision of the pipeline; `f32` matches the on-disk
/// raster payload. Conversions through `f64` are lossless for both.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
    /// Widen to `f64` (exact for `f32` and `f64`).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float widens to f64")
    }

    /// Narrow from `f64`, rounding to the nearest representable value.
    #[inline]
    fn from_f64_nearest(v: f64) -> Self {
        Self::from_f64(v).expect("f64 narrows to any float scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
