//! Scalar abstraction for the geometric parts of the crate.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating point type the layout engine can compute with.
pub trait Scalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Precision loss is accepted for narrower types.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar range")
    }

    fn from_u64_lossy(n: u64) -> Self {
        Self::from_u64(n).unwrap_or_else(Self::max_value)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Fixed four-decimal rendering used by every canonical number in layout
/// output. Negative zero prints as zero.
pub fn fixed4<F: Scalar>(value: F) -> String {
    let v = value.as_f64();
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.4}")
}
