//! Isotropic Bobylev collision terms on a radial grid.
//!
//! For ψ(r) = φ(|ξ|) the post-collisional radii are r cos(θ/2) and
//! r sin(θ/2), both ≤ r, so every argument stays on the grid.

use std::sync::Arc;

use rayon::prelude::*;

use crate::charfun::{Cell, RadialCharFn, RadialGrid};
use crate::error::{Error, Result};
use crate::kernel::{AngularQuadrature, KernelSpec};
use crate::scalar::Real;

/// Angular nodes folded with the kernel, and the grid cells of every
/// post-collisional radius.
#[derive(Debug, Clone)]
pub struct Stencil<T> {
    grid: Arc<RadialGrid<T>>,
    theta: Vec<T>,
    /// 2π b(cos θ_j) sin θ_j w_j
    weights: Vec<T>,
    /// geometric band of each node, 0 at π/2
    bands: Vec<usize>,
    band_count: usize,
    /// cells of r_i cos(θ_j/2), row-major in (i, j)
    big: Vec<Cell<T>>,
    /// cells of r_i sin(θ_j/2)
    small: Vec<Cell<T>>,
}

impl<T: Real> Stencil<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, kernel: &KernelSpec<T>, quad: &AngularQuadrature<T>) -> Result<Self> {
        let (theta, w) = quad.rule_for(kernel);
        let two_pi = T::lit(2.0) * T::PI();
        let weights: Vec<T> = theta
            .iter()
            .zip(&w)
            .map(|(&t, &wt)| kernel.eval(t).map(|b| two_pi * b * t.sin() * wt))
            .collect::<Result<_>>()?;
        let log_q = -quad.grading.ln();
        let bands: Vec<usize> = theta
            .iter()
            .map(|&t| ((T::FRAC_PI_2() / t).ln() / log_q).floor().to_usize().unwrap_or(0))
            .collect();
        let band_count = bands.iter().copied().max().unwrap_or(0) + 1;
        let r = grid.radii();
        let nj = theta.len();
        // per radius: cells of r cos(θ/2) and r sin(θ/2)
        type Row<T> = (Vec<Cell<T>>, Vec<Cell<T>>);
        let rows: Vec<Result<Row<T>>> = (0..r.len())
            .into_par_iter()
            .map(|i| {
                let mut big = Vec::with_capacity(nj);
                let mut small = Vec::with_capacity(nj);
                for &t in &theta {
                    let q = (t * T::lit(0.25)).sin();
                    // r - r cos(θ/2) = 2 r sin²(θ/4)
                    big.push(grid.locate_below(i, T::lit(2.0) * r[i] * q * q)?);
                    small.push(grid.locate(r[i] * (t * T::lit(0.5)).sin())?);
                }
                Ok((big, small))
            })
            .collect();
        let mut big = Vec::with_capacity(r.len() * nj);
        let mut small = Vec::with_capacity(r.len() * nj);
        for row in rows {
            let (b, s) = row?;
            big.extend(b);
            small.extend(s);
        }
        Ok(Self { grid, theta, weights, bands, band_count, big, small })
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn nodes(&self) -> &[T] {
        &self.theta
    }

    /// Discrete γ₂ = Σ_j 2π b(θ_j) sin θ_j w_j, the value of 𝒢(1).
    pub fn gamma2(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Discrete γ_α = Σ_j W_j (cos^α(θ_j/2) + sin^α(θ_j/2)).
    pub fn gamma_alpha(&self, alpha: T) -> T {
        let half = T::lit(0.5);
        self.theta
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * ((t * half).cos().powf(alpha) + (t * half).sin().powf(alpha)))
            .sum()
    }

    fn check(&self, psi: &RadialCharFn<T>) -> Result<()> {
        if psi.grid().radii() != self.grid.radii() {
            return Err(Error::Config("profile and stencil use different grids".into()));
        }
        Ok(())
    }

    /// Gain term 𝒢(ψ)(r_i) = Σ_j W_j ψ(r_i cos θ_j/2) ψ(r_i sin θ_j/2).
    pub fn gain(&self, psi: &RadialCharFn<T>) -> Result<Vec<T>> {
        self.check(psi)?;
        let nj = self.theta.len();
        Ok((0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let row = i * nj;
                let mut acc = T::zero();
                for j in 0..nj {
                    acc = acc + self.weights[j] * psi.eval_cell(&self.big[row + j]) * psi.eval_cell(&self.small[row + j]);
                }
                acc
            })
            .collect())
    }

    /// Coefficients of the split Q(ψ)(r) = A(r) ψ(r) + B(r), with
    /// A = Σ W [ψ(r s) − 1] and B = Σ W [ψ(r c) − ψ(r)] ψ(r s)
    /// (c, s = cos, sin of θ/2). Both brackets vanish as θ → 0.
    pub fn split(&self, psi: &RadialCharFn<T>) -> Result<(Vec<T>, Vec<T>)> {
        self.check(psi)?;
        let nj = self.theta.len();
        let pairs: Vec<(T, T)> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let row = i * nj;
                let (mut a, mut b) = (T::zero(), T::zero());
                for j in 0..nj {
                    let (ds, ps) = minus_one(psi, &self.small[row + j]);
                    let dc = minus_node(psi, &self.big[row + j], i);
                    a = a + self.weights[j] * ds;
                    b = b + self.weights[j] * dc * ps;
                }
                (a, b)
            })
            .collect();
        Ok(pairs.into_iter().unzip())
    }

    /// Q(ψ) = Aψ + B on the grid.
    pub fn collision(&self, psi: &RadialCharFn<T>) -> Result<Vec<T>> {
        let (a, b) = self.split(psi)?;
        Ok(a.iter().zip(&b).zip(psi.values()).map(|((&a, &b), &y)| a * y + b).collect())
    }

    /// Per-band contributions max_i |Σ_{j∈band} W_j [ψ(r_i c)ψ(r_i s) − ψ(r_i)]|,
    /// ordered from π/2 towards θ_min.
    pub fn band_sums(&self, psi: &RadialCharFn<T>) -> Result<Vec<T>> {
        self.check(psi)?;
        let nj = self.theta.len();
        let nb = self.band_count;
        let rows: Vec<Vec<T>> = (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                let row = i * nj;
                let y = psi.values()[i];
                let mut sums = vec![T::zero(); nb];
                for j in 0..nj {
                    let (ds, ps) = minus_one(psi, &self.small[row + j]);
                    let dc = minus_node(psi, &self.big[row + j], i);
                    sums[self.bands[j]] = sums[self.bands[j]] + self.weights[j] * (dc * ps + y * ds);
                }
                sums
            })
            .collect();
        let mut out = vec![T::zero(); nb];
        for r in rows {
            for (o, v) in out.iter_mut().zip(r) {
                *o = o.max(v.abs());
            }
        }
        Ok(out)
    }
}

/// (ψ(x) − 1, ψ(x)) with the difference anchored at the left node.
#[inline]
fn minus_one<T: Real>(psi: &RadialCharFn<T>, c: &Cell<T>) -> (T, T) {
    let yk = psi.values()[c.k];
    let rel = psi.offset_left(c);
    let p = (yk + rel).max(-T::one()).min(T::one());
    let diff = if p == yk + rel { (yk - T::one()) + rel } else { p - T::one() };
    (diff, p)
}

/// ψ(x) − ψ(r_i), anchored at r_i when x lies in the interval just below it.
#[inline]
fn minus_node<T: Real>(psi: &RadialCharFn<T>, c: &Cell<T>, i: usize) -> T {
    if c.k + 1 == i {
        psi.offset_right(c)
    } else {
        psi.eval_cell(c) - psi.values()[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::CharFn;
    use crate::solver::default_quadrature;

    fn setup(kernel: &KernelSpec<f64>) -> Stencil<f64> {
        Stencil::new(Arc::new(RadialGrid::standard()), kernel, &default_quadrature()).unwrap()
    }

    #[test]
    fn gain_of_one_is_gamma2() {
        let k = KernelSpec::constant(1.0).unwrap();
        let st = setup(&k);
        let one = CharFn::one(3).unwrap().sample_radial(st.grid().clone()).unwrap();
        let g = st.gain(&one).unwrap();
        let g2 = st.gamma2();
        assert!((g2 - 2.0 * std::f64::consts::PI).abs() < 1e-8);
        assert!(g.iter().all(|&v| v == g[0]));
        assert!((g[0] - g2).abs() < 1e-12);
    }

    #[test]
    fn gain_of_gaussian_is_proportional() {
        let k = KernelSpec::constant(1.0).unwrap();
        let st = setup(&k);
        let psi = CharFn::gaussian(1.0, 3).unwrap().sample_radial(st.grid().clone()).unwrap();
        let g = st.gain(&psi).unwrap();
        let g2 = st.gamma2();
        for (gi, yi) in g.iter().zip(psi.values()) {
            assert!((gi - g2 * yi).abs() < 1e-8);
        }
    }

    #[test]
    fn gain_of_stable_matches_dense_reference() {
        let k = KernelSpec::constant(1.0).unwrap();
        let st = setup(&k);
        let psi = CharFn::stable(1.0, 3).unwrap().sample_radial(st.grid().clone()).unwrap();
        let g = st.gain(&psi).unwrap();
        // r = 1 is grid node 128: 2π ∫ e^{-(cos θ/2 + sin θ/2)} sin θ dθ by a 10⁶-node midpoint rule
        let n = 1_000_000;
        let h = std::f64::consts::FRAC_PI_2 / n as f64;
        let reference: f64 = 2.0
            * std::f64::consts::PI
            * (0..n)
                .map(|m| {
                    let t = (m as f64 + 0.5) * h;
                    (-((t / 2.0).cos() + (t / 2.0).sin())).exp() * t.sin() * h
                })
                .sum::<f64>();
        assert!((g[128] - reference).abs() < 1e-8, "{} vs {reference}", g[128]);
    }

    #[test]
    fn collision_vanishes_on_fixed_points() {
        let k = KernelSpec::singular(0.25, 1.0).unwrap();
        let st = setup(&k);
        let one = CharFn::one(3).unwrap().sample_radial(st.grid().clone()).unwrap();
        assert!(st.collision(&one).unwrap().iter().all(|&v| v == 0.0));
        let g = CharFn::gaussian(1.0, 3).unwrap().sample_radial(st.grid().clone()).unwrap();
        let q = st.collision(&g).unwrap();
        let worst = q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn bands_decay_for_regular_data() {
        let k = KernelSpec::singular(0.25, 1.0).unwrap();
        let st = setup(&k);
        let psi = CharFn::stable(1.0, 3).unwrap().sample_radial(st.grid().clone()).unwrap();
        let b = st.band_sums(&psi).unwrap();
        let n = b.len();
        assert!(b[n - 3] < b[n - 6] && b[n - 6] < b[n - 9]);
    }
}
