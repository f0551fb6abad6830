use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::distributions::uniform::SampleUniform;
use rustfft::FftNum;
use std::fmt::{Display, LowerExp};
use std::iter::Sum;

/// Real scalar the solver is generic over; `f32` and `f64` satisfy it.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + SampleUniform + Sum + Display + LowerExp
{
    fn from_real(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("real conversion")
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count conversion")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
