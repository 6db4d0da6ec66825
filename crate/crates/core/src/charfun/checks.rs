//! Pointwise inequality and positive-definiteness checks for characteristic functions.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CharFn;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest sample size accepted by the Gram-matrix check.
pub const MAX_BOCHNER_POINTS: usize = 64;

/// Seeded pairs (ξ, η) with coordinates uniform in [-scale, scale].
pub fn random_pairs<T: Real>(dim: usize, count: usize, scale: T, seed: u64) -> Vec<(Vec<T>, Vec<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = scale.as_f64();
    let draw = |rng: &mut ChaCha8Rng| (0..dim).map(|_| T::lit(rng.gen_range(-s..=s))).collect::<Vec<T>>();
    (0..count).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

/// Points `k·spacing·e₁`, k = 0..count, in R^dim.
pub fn lattice_samples<T: Real>(dim: usize, count: usize, spacing: T) -> Vec<Vec<T>> {
    (0..count)
        .map(|k| {
            let mut p = vec![T::zero(); dim];
            p[0] = spacing * T::from_count(k);
            p
        })
        .collect()
}

/// max over pairs of |φ(ξ) − φ(ξ+η)| − 4|1−φ(ξ)|^{1/2}|1−φ(η)|^{1/2} − |1−φ(η)|.
///
/// Non-positive for every characteristic function.
pub fn holder_inequality_check<T: Real>(phi: &CharFn<T>, pairs: &[(Vec<T>, Vec<T>)]) -> Result<T> {
    let one = Complex::new(T::one(), T::zero());
    let mut worst = T::neg_infinity();
    for (xi, eta) in pairs {
        let sum: Vec<T> = xi.iter().zip(eta).map(|(&a, &b)| a + b).collect();
        let fx = phi.eval(xi)?;
        let fe = phi.eval(eta)?;
        let fs = phi.eval(&sum)?;
        let lhs = (fx - fs).norm();
        let gx = (one - fx).norm();
        let ge = (one - fe).norm();
        let rhs = T::lit(4.0) * gx.sqrt() * ge.sqrt() + ge;
        worst = worst.max(lhs - rhs);
    }
    Ok(if pairs.is_empty() { T::zero() } else { worst })
}

/// Minimum eigenvalue of the Gram matrix [φ(ξᵢ − ξⱼ)].
pub fn bochner_spotcheck<T: Real>(phi: &CharFn<T>, points: &[Vec<T>]) -> Result<T> {
    bochner_min_eigenvalue(|x: &[T]| phi.eval(x), points)
}

/// Same as [`bochner_spotcheck`] for an arbitrary function, e.g. a radial
/// profile that is not known to be positive definite.
pub fn bochner_min_eigenvalue<T: Real, F>(f: F, points: &[Vec<T>]) -> Result<T>
where
    F: Fn(&[T]) -> Result<Complex<T>>,
{
    let k = points.len();
    if k == 0 || k > MAX_BOCHNER_POINTS {
        return Err(Error::Config(format!("Gram check needs 1..={MAX_BOCHNER_POINTS} points, got {k}")));
    }
    // Hermitian A + iB embedded as the real symmetric [[A, -B], [B, A]];
    // its spectrum is that of the complex matrix, each eigenvalue doubled.
    let mut m = DMatrix::<f64>::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let d: Vec<T> = points[i].iter().zip(&points[j]).map(|(&a, &b)| a - b).collect();
            let z = f(&d)?;
            let (re, im) = (z.re.as_f64(), z.im.as_f64());
            m[(i, j)] = re;
            m[(i + k, j + k)] = re;
            m[(i + k, j)] = im;
            m[(i, j + k)] = -im;
        }
    }
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::Numeric("eigenvalue computation produced a non-finite value".into()));
    }
    Ok(T::lit(min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::DiscreteMeasure;

    #[test]
    fn holder_inequality_for_analytic_families() {
        let pairs = random_pairs::<f64>(3, 1000, 3.0, 42);
        for phi in [CharFn::gaussian(1.0, 3).unwrap(), CharFn::stable(0.5, 3).unwrap(), CharFn::one(3).unwrap()] {
            assert!(holder_inequality_check(&phi, &pairs).unwrap() <= 1e-12);
        }
        let one = CharFn::<f64>::one(3).unwrap();
        assert_eq!(holder_inequality_check(&one, &pairs).unwrap(), 0.0);
    }

    #[test]
    fn gram_of_characteristic_functions_is_psd() {
        let pts: Vec<Vec<f64>> = random_pairs(3, 16, 2.0, 5).into_iter().map(|p| p.0).collect();
        let g = CharFn::gaussian(1.0, 3).unwrap();
        assert!(bochner_spotcheck(&g, &pts).unwrap() >= -1e-10);
        let d = CharFn::discrete(DiscreteMeasure::random_mean_zero(3, 5, 2.0, 3).unwrap());
        assert!(bochner_spotcheck(&d, &pts).unwrap() >= -1e-10);
    }

    #[test]
    fn quartic_exponential_is_not_positive_definite() {
        let pts = lattice_samples::<f64>(1, 16, 0.25);
        let min = bochner_min_eigenvalue(
            |x: &[f64]| Ok(Complex::new((-x[0].powi(4)).exp(), 0.0)),
            &pts,
        )
        .unwrap();
        // reference value from an independent dense eigen-solve
        assert!((min + 0.588).abs() < 5e-3, "{min}");
    }

    #[test]
    fn too_many_points_rejected() {
        let pts = lattice_samples::<f64>(3, 65, 0.1);
        assert!(bochner_spotcheck(&CharFn::one(3).unwrap(), &pts).is_err());
    }
}
