//! Scalar abstraction: the numerical core is generic over the floating
//! point type through [`Real`]; `f64` is the default for experiments and
//! the acceptance suite (see the type aliases at the crate root).

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distributions::uniform::SampleUniform;
use rand::Rng;

/// Floating point scalar usable throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + SampleUniform
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Draw a standard normal variate from `rng`.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Magnitude above which tangent matrices are rescaled to avoid overflow.
    fn rescale_threshold() -> Self;
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }

    fn rescale_threshold() -> Self {
        1e150
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }

    fn rescale_threshold() -> Self {
        1e15
    }
}

/// Shorthand for lifting an `f64` literal into the generic scalar type.
#[inline]
pub fn c64<S: Real>(x: f64) -> S {
    S::from_f64(x).expect("literal conversion")
}

/// Two pi in the scalar type.
#[inline]
pub fn two_pi<S: Real>() -> S {
    c64(std::f64::consts::TAU)
}
