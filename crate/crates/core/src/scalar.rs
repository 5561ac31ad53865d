use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type the simulator's amplitudes are built from: f32 or f64.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Absolute tolerance for normalization, orthogonality and degeneracy checks.
    fn tolerance() -> Self;

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn tolerance() -> Self {
        1e-5
    }
}
