use std::fmt::{Debug, Display};

/// Real-number type the logic and reward-machine layers are generic over.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a literal parsed as `f64`, e.g. from formula text.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
