//! Characteristic functions φ(ξ) = ∫ e^{-iv·ξ} dF(v) of probability measures.

mod checks;
mod measure;
mod radial;

use std::sync::Arc;

use num_complex::Complex;

pub use checks::{bochner_min_eigenvalue, bochner_spotcheck, holder_inequality_check, lattice_samples, random_pairs};
pub use measure::{Atom, DiscreteMeasure};
pub use radial::{monotone_slopes, Cell, RadialCharFn, RadialGrid};

use crate::error::{Error, Result};
use crate::scalar::{bessel_j0, one_minus_cos, one_minus_j0, one_minus_sinc, sinc, Real};

#[derive(Debug, Clone, PartialEq)]
pub enum Family<T> {
    /// e^{-σ²|ξ|²/2}
    Gaussian { sigma: T },
    /// e^{-|ξ|^α}
    Stable { alpha: T },
    /// Uniform law on the sphere of radius r₀.
    UniformSphere { r0: T },
    Discrete(DiscreteMeasure<T>),
    RadialGrid(RadialCharFn<T>),
}

/// A characteristic function on R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFn<T> {
    dim: usize,
    family: Family<T>,
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::Config(format!("dimension {dim} not in 1..=3")))
    }
}

impl<T: Real> CharFn<T> {
    pub fn gaussian(sigma: T, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(sigma > T::zero() && sigma.is_finite()) {
            return Err(Error::Config(format!("gaussian width {sigma} must be positive")));
        }
        Ok(Self { dim, family: Family::Gaussian { sigma } })
    }

    pub fn stable(alpha: T, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(alpha > T::zero() && alpha < T::lit(2.0)) {
            return Err(Error::Config(format!("stable index {alpha} not in (0, 2)")));
        }
        Ok(Self { dim, family: Family::Stable { alpha } })
    }

    pub fn uniform_sphere(r0: T, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if !(r0 > T::zero() && r0.is_finite()) {
            return Err(Error::Config(format!("sphere radius {r0} must be positive")));
        }
        Ok(Self { dim, family: Family::UniformSphere { r0 } })
    }

    pub fn discrete(measure: DiscreteMeasure<T>) -> Self {
        Self { dim: measure.dim(), family: Family::Discrete(measure) }
    }

    /// φ ≡ 1, the transform of a unit mass at the origin.
    pub fn one(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::discrete(DiscreteMeasure::dirac(dim)))
    }

    /// Radial grid data interpreted on R^3.
    pub fn radial(psi: RadialCharFn<T>) -> Self {
        Self { dim: 3, family: Family::RadialGrid(psi) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    /// Whether φ(ξ) depends on |ξ| only.
    pub fn is_isotropic(&self) -> bool {
        match &self.family {
            Family::Discrete(m) => m.is_isotropic(),
            _ => true,
        }
    }

    /// True for φ ≡ 1.
    pub fn is_one(&self) -> bool {
        match &self.family {
            Family::Discrete(m) => m.atoms().iter().all(|a| a.speed() == T::zero()),
            Family::RadialGrid(p) => p.values().iter().all(|&v| v == T::one()),
            _ => false,
        }
    }

    /// Largest |ξ| at which φ can be evaluated.
    pub fn r_max(&self) -> T {
        match &self.family {
            Family::RadialGrid(p) => p.r_max(),
            _ => T::infinity(),
        }
    }

    pub fn eval(&self, xi: &[T]) -> Result<Complex<T>> {
        if xi.len() != self.dim {
            return Err(Error::Domain(format!("point of dimension {} for a {}-d function", xi.len(), self.dim)));
        }
        if let Family::Discrete(m) = &self.family {
            let (mut re, mut im) = (T::zero(), T::zero());
            for a in m.atoms() {
                let phase = a.v.iter().zip(xi).fold(T::zero(), |acc, (&v, &x)| acc + v * x);
                re = re + a.w * phase.cos();
                im = im - a.w * phase.sin();
            }
            return Ok(Complex::new(re, im));
        }
        let r = xi.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        Ok(Complex::new(self.radial_value(r)?, T::zero()))
    }

    /// 1 − φ(ξ), free of cancellation near ξ = 0.
    pub fn one_minus(&self, xi: &[T]) -> Result<Complex<T>> {
        if xi.len() != self.dim {
            return Err(Error::Domain(format!("point of dimension {} for a {}-d function", xi.len(), self.dim)));
        }
        if let Family::Discrete(m) = &self.family {
            let (mut re, mut im) = (T::zero(), T::zero());
            for a in m.atoms() {
                let phase = a.v.iter().zip(xi).fold(T::zero(), |acc, (&v, &x)| acc + v * x);
                re = re + a.w * one_minus_cos(phase);
                im = im + a.w * phase.sin();
            }
            return Ok(Complex::new(re, im));
        }
        let r = xi.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        Ok(Complex::new(self.radial_one_minus(r)?, T::zero()))
    }

    /// ψ(r) = φ(r e₁) for isotropic functions.
    pub fn radial_value(&self, r: T) -> Result<T> {
        let r = r.abs();
        Ok(match &self.family {
            Family::Gaussian { sigma } => (-(*sigma * r).powi(2) * T::lit(0.5)).exp(),
            Family::Stable { alpha } => (-r.powf(*alpha)).exp(),
            Family::UniformSphere { r0 } => match self.dim {
                1 => (*r0 * r).cos(),
                2 => bessel_j0(*r0 * r),
                _ => sinc(*r0 * r),
            },
            Family::RadialGrid(p) => p.eval(r)?,
            Family::Discrete(m) => {
                if !m.is_isotropic() {
                    return Err(Error::Variant("discrete measure is not isotropic".into()));
                }
                m.atoms().iter().map(|a| a.w * (a.v[0] * r).cos()).sum()
            }
        })
    }

    /// 1 − ψ(r) without cancellation for small r.
    pub fn radial_one_minus(&self, r: T) -> Result<T> {
        let r = r.abs();
        Ok(match &self.family {
            Family::Gaussian { sigma } => -(-(*sigma * r).powi(2) * T::lit(0.5)).exp_m1(),
            Family::Stable { alpha } => -(-r.powf(*alpha)).exp_m1(),
            Family::UniformSphere { r0 } => match self.dim {
                1 => one_minus_cos(*r0 * r),
                2 => one_minus_j0(*r0 * r),
                _ => one_minus_sinc(*r0 * r),
            },
            Family::RadialGrid(p) => p.one_minus(r)?,
            Family::Discrete(m) => {
                if !m.is_isotropic() {
                    return Err(Error::Variant("discrete measure is not isotropic".into()));
                }
                m.atoms().iter().map(|a| a.w * one_minus_cos(a.v[0] * r)).sum()
            }
        })
    }

    /// Average of Re(1 − φ(rω)) over unit directions ω. For isotropic φ this is
    /// 1 − ψ(r); for discrete measures it uses the exact spherical means of
    /// plane waves.
    pub fn spherical_mean_one_minus(&self, r: T) -> Result<T> {
        match &self.family {
            Family::Discrete(m) => Ok(m
                .atoms()
                .iter()
                .map(|a| {
                    let x = a.speed() * r;
                    a.w * match self.dim {
                        1 => one_minus_cos(x),
                        2 => one_minus_j0(x),
                        _ => one_minus_sinc(x),
                    }
                })
                .sum()),
            _ => self.radial_one_minus(r),
        }
    }

    /// Samples ψ on `grid`.
    pub fn sample_radial(&self, grid: Arc<RadialGrid<T>>) -> Result<RadialCharFn<T>> {
        if !self.is_isotropic() {
            return Err(Error::Variant("sampling requires an isotropic characteristic function".into()));
        }
        let values = grid.radii().iter().map(|&r| self.radial_value(r)).collect::<Result<Vec<_>>>()?;
        RadialCharFn::new(grid, values)
    }
}

impl<T: Real> From<RadialCharFn<T>> for CharFn<T> {
    fn from(psi: RadialCharFn<T>) -> Self {
        Self::radial(psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eval_examples() {
        let g = CharFn::<f64>::gaussian(1.0, 3).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0, 0.0]).unwrap(), Complex::new(1.0, 0.0));
        let pair = DiscreteMeasure::new(
            3,
            vec![Atom { v: [1.0, 0.0, 0.0], w: 0.5 }, Atom { v: [-1.0, 0.0, 0.0], w: 0.5 }],
        )
        .unwrap();
        let p = CharFn::discrete(pair).eval(&[PI, 0.0, 0.0]).unwrap();
        assert!((p.re + 1.0).abs() < 1e-15 && p.im.abs() < 1e-15);
        let u = CharFn::<f64>::uniform_sphere(1.0, 3).unwrap();
        assert!(u.eval(&[PI, 0.0, 0.0]).unwrap().re.abs() < 1e-15);
        assert!(matches!(g.eval(&[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn sample_radial_examples() {
        let grid = Arc::new(RadialGrid::from_points(vec![0.0, 1.0, 2.0, 4.0, PI / 2.0 + 3.0]).unwrap());
        let g = CharFn::<f64>::gaussian(1.0, 3).unwrap().sample_radial(grid.clone()).unwrap();
        assert_eq!(g.values()[0], 1.0);
        assert!((g.values()[1] - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!((g.values()[2] - 0.135_335_283_236_612_7).abs() < 1e-15);
        let s = CharFn::<f64>::stable(0.5, 3).unwrap();
        assert!((s.radial_value(4.0).unwrap() - 0.135_335_283_236_612_7).abs() < 1e-15);
        let u = CharFn::<f64>::uniform_sphere(1.0, 3).unwrap();
        assert!((u.radial_value(PI / 2.0).unwrap() - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn anisotropic_sampling_is_rejected() {
        let m = DiscreteMeasure::random_mean_zero(3, 5, 2.0, 1).unwrap();
        let grid = Arc::new(RadialGrid::<f64>::mixed(16, 4.0).unwrap());
        assert!(matches!(CharFn::discrete(m).sample_radial(grid), Err(Error::Variant(_))));
    }

    #[test]
    fn one_minus_agrees_with_direct_difference() {
        let fs = [
            CharFn::<f64>::gaussian(1.3, 3).unwrap(),
            CharFn::stable(0.7, 3).unwrap(),
            CharFn::uniform_sphere(1.0, 3).unwrap(),
            CharFn::uniform_sphere(1.0, 2).unwrap(),
            CharFn::uniform_sphere(1.0, 1).unwrap(),
        ];
        for f in &fs {
            for &r in &[0.3, 1.0, 2.5, 7.0] {
                let a = f.radial_one_minus(r).unwrap();
                let b = 1.0 - f.radial_value(r).unwrap();
                assert!((a - b).abs() < 1e-14, "{f:?} at {r}");
            }
            assert!(f.radial_one_minus(1e-9).unwrap() >= 0.0);
        }
    }

    #[test]
    fn spherical_mean_matches_direction_average() {
        let m = DiscreteMeasure::random_mean_zero(3, 4, 3.0, 11).unwrap();
        let f = CharFn::discrete(m);
        let r = 0.8;
        // Gauss–Legendre in cos θ times uniform azimuth
        let (x, w) = crate::quadrature::gauss_legendre::<f64>(40);
        let mut avg = 0.0;
        for (ct, wt) in x.iter().zip(&w) {
            let st = (1.0 - ct * ct).sqrt();
            for k in 0..64 {
                let ph = 2.0 * PI * k as f64 / 64.0;
                let xi = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
                avg += wt / 2.0 / 64.0 * (1.0 - f.eval(&xi).unwrap().re);
            }
        }
        assert!((avg - f.spherical_mean_one_minus(r).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn one_is_identity() {
        let one = CharFn::<f64>::one(3).unwrap();
        assert!(one.is_one() && one.is_isotropic());
        assert_eq!(one.eval(&[3.0, 1.0, -2.0]).unwrap().re, 1.0);
        assert_eq!(one.radial_one_minus(5.0).unwrap(), 0.0);
    }

    #[test]
    fn complex_one_minus_matches_eval() {
        let f = CharFn::discrete(DiscreteMeasure::<f64>::random_mean_zero(3, 5, 2.0, 9).unwrap());
        let xi = [0.3, -1.1, 0.7];
        let d = f.one_minus(&xi).unwrap() - (Complex::new(1.0, 0.0) - f.eval(&xi).unwrap());
        assert!(d.norm() < 1e-15);
    }
}
