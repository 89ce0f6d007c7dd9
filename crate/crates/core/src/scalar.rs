//! Scalar abstraction shared by every module of the simulator.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the simulator can run on: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance for normalization and losslessness checks.
    fn tolerance() -> Self;
}

impl Real for f64 {
    fn tolerance() -> f64 {
        1e-12
    }
}

impl Real for f32 {
    fn tolerance() -> f32 {
        1e-5
    }
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `(sin x, cos x)` with results below a few ulps snapped to zero, so that
/// quarter-turn rotations and half-wave retarders come out as exact
/// permutations.
#[inline]
pub fn snapped_sin_cos<T: Real>(x: T) -> (T, T) {
    let (s, c) = x.sin_cos();
    let eps = T::epsilon() * lit(4.0);
    let snap = |v: T| if v.abs() < eps { T::zero() } else { v };
    (snap(s), snap(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping_makes_quarter_turns_exact() {
        let (s, c) = snapped_sin_cos(std::f64::consts::FRAC_PI_2);
        assert_eq!((s, c), (1.0, 0.0));
        let (s, c) = snapped_sin_cos(std::f32::consts::PI);
        assert_eq!(s, 0.0);
        assert_eq!(c, -1.0);
    }

    #[test]
    fn snapping_leaves_generic_angles_alone() {
        let (s, c) = snapped_sin_cos(0.3f64);
        assert_eq!(s, 0.3f64.sin());
        assert_eq!(c, 0.3f64.cos());
    }
}
