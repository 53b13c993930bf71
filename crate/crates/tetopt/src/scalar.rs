use num_traits::{Float, FloatConst, FromPrimitive};

/// Scalar type for the geometric and energy kernels: `f32` or `f64`.
///
/// The mesh containers and the pipeline are fixed to `f64` (see the type
/// aliases at the crate root); the kernels stay generic so they can be
/// instantiated at `f32` where single precision is enough.
pub trait Real:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Default + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
