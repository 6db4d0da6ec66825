//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the solver and metric code are generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Surface area of the unit sphere S^{d-1} in R^d for d in {1, 2, 3}.
pub fn sphere_area<T: Real>(dim: usize) -> T {
    match dim {
        1 => T::lit(2.0),
        2 => T::lit(2.0) * T::PI(),
        3 => T::lit(4.0) * T::PI(),
        _ => T::nan(),
    }
}

/// `1 - sin(x)/x`, accurate near zero.
pub fn one_minus_sinc<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax < T::lit(0.1) {
        let x2 = x * x;
        // x^2/3! - x^4/5! + x^6/7! - x^8/9! + x^10/11!
        x2 * (T::lit(1.0 / 6.0)
            - x2 * (T::lit(1.0 / 120.0)
                - x2 * (T::lit(1.0 / 5040.0) - x2 * (T::lit(1.0 / 362_880.0) - x2 * T::lit(1.0 / 39_916_800.0)))))
    } else {
        T::one() - x.sin() / x
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(0.1) {
        T::one() - one_minus_sinc(x)
    } else {
        x.sin() / x
    }
}

/// `1 - cos(x)` without cancellation.
pub fn one_minus_cos<T: Real>(x: T) -> T {
    let h = (x * T::lit(0.5)).sin();
    T::lit(2.0) * h * h
}

/// `1 - J0(x)`, accurate near zero.
pub fn one_minus_j0<T: Real>(x: T) -> T {
    let xf = x.as_f64();
    if xf.abs() < 1e-2 {
        let q = xf * xf / 4.0;
        // q - q^2/4 + q^3/36
        T::lit(q * (1.0 - q * (0.25 - q / 36.0)))
    } else {
        T::lit(1.0 - libm::j0(xf))
    }
}

pub fn bessel_j0<T: Real>(x: T) -> T {
    T::lit(libm::j0(x.as_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_minus_sinc_is_continuous_across_series_switch() {
        let x = 0.1_f64;
        let series: f64 = one_minus_sinc(x - 1e-15);
        let direct = 1.0 - x.sin() / x;
        assert!((series - direct).abs() < 1e-15 * 1e3 * direct);
        assert!((one_minus_sinc(1e-8_f64) - 1e-16 / 6.0).abs() < 1e-30);
    }

    #[test]
    fn sphere_areas() {
        assert_eq!(sphere_area::<f64>(1), 2.0);
        assert!((sphere_area::<f64>(3) - 4.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn j0_series_matches_libm() {
        let x = 0.0099_f64;
        assert!((one_minus_j0(x) - (1.0 - libm::j0(x))).abs() < 1e-15);
        assert!((one_minus_cos(1e-9_f64) - 5e-19).abs() < 1e-30);
    }
}
