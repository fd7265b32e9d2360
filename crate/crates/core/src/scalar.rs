//! Scalar abstraction for packet values and policy parameters.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// The golden ratio, rounded to the nearest `f64`.
pub const PHI: f64 = 1.618_033_988_749_894_848_204_586_834_365_638_118;

/// The square of the golden ratio, rounded to the nearest `f64`.
pub const PHI_SQUARED: f64 = 2.618_033_988_749_894_848_204_586_834_365_638_118;

/// Floating-point type usable for packet values.
///
/// Implemented for `f32` and `f64`. All policy comparisons are exact `>=`/`>`
/// on this type; no tolerance is applied anywhere in the decision path.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the type cannot hold finite values.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion from f64")
    }

    fn phi() -> Self {
        Self::lit(PHI)
    }

    fn phi_squared() -> Self {
        Self::lit(PHI_SQUARED)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Total order on finite scalars; NaN never reaches policy code because
/// validation rejects it.
pub(crate) fn cmp_scalar<V: Scalar>(a: V, b: V) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}
