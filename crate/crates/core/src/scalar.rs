//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for probabilities, rewards and values: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Default slack for semimeasure-sum checks.
    const TOLERANCE: f64;

    /// Converts an `f64` literal or config value.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn tolerance() -> Self {
        Self::lit(Self::TOLERANCE)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f64 {
    const TOLERANCE: f64 = 1e-9;
}

// f32 cannot resolve 1e-9 around 1.0.
impl Scalar for f32 {
    const TOLERANCE: f64 = 1e-5;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(f64::lit(0.25), 0.25);
        assert_eq!(f32::lit(0.25), 0.25f32);
        assert_eq!(0.5f32.as_f64(), 0.5);
    }

    #[test]
    fn tolerances() {
        assert_eq!(f64::tolerance(), 1e-9);
        assert!(f32::tolerance() > f32::EPSILON);
    }
}
