//! Velocity-space diagnostics of radial solutions: density reconstruction,
//! Sobolev norms on the Fourier side, entropies and moment propagation.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::charfun::{CharFn, RadialCharFn};
use crate::error::{Error, Result};
use crate::kernel::{lambda_alpha, AngularQuadrature};
use crate::metric::{c_constant, moment_upper, sup_norm};
use crate::quadrature::{adaptive, gauss_legendre, integrate_panels, Tolerance};
use crate::scalar::{sinc, sphere_area, Real};
use crate::solver::Trajectory;

/// |ψ(r)| r above this on [R/2, R] means ψ has not decayed: no density.
const DECAY_LIMIT: f64 = 1e-6;
/// Negative lobes below this fail the profile.
const NEGATIVE_LIMIT: f64 = -1e-6;

/// Radial density f(v) on a speed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile<T> {
    pub v: Vec<T>,
    pub f: Vec<T>,
    /// Truncation radius of the inverse transform.
    pub radius: T,
    /// Bound on the pointwise effect of the Fourier tail beyond `radius`.
    pub truncation_error: T,
    /// 4π ∫ f v² dv over [0, v_max].
    pub mass: T,
    pub mass_error: T,
    /// Most negative sample (0 when f ≥ 0).
    pub min_value: T,
    /// 4π ∫ |f⁻| v² dv of the clipped negative part.
    pub clipped_mass: T,
}

impl<T: Real> DensityProfile<T> {
    /// `v,f,4pi_v2_f` rows.
    pub fn to_csv(&self) -> String {
        let four_pi = T::lit(4.0) * T::PI();
        let mut out = String::from("v,f,4pi_v2_f\n");
        for (&v, &f) in self.v.iter().zip(&self.f) {
            let _ = writeln!(out, "{:.10e},{:.17e},{:.17e}", v.as_f64(), f.as_f64(), (four_pi * v * v * f).as_f64());
        }
        out
    }

    pub fn mass_ok(&self) -> bool {
        (self.mass - T::one()).abs() <= self.mass_error.max(T::lit(1e-6))
    }
}

/// `count` equally spaced speeds in (0, v_max].
pub fn speed_grid<T: Real>(v_max: T, count: usize) -> Vec<T> {
    (1..=count).map(|k| v_max * T::from_count(k) / T::from_count(count)).collect()
}

/// ∫ y dx over the samples by composite Simpson on pairs of (possibly unequal)
/// intervals; an odd last interval uses the quadratic through the last three points.
fn simpson<T: Real>(x: &[T], y: &[T]) -> T {
    let n = x.len();
    if n < 2 {
        return T::zero();
    }
    if n == 2 {
        return (x[1] - x[0]) * (y[0] + y[1]) * T::lit(0.5);
    }
    let (gx, gw) = gauss_legendre::<T>(3);
    let quad_over = |i: usize, a: T, b: T| {
        // quadratic through points i, i+1, i+2 integrated over [a, b]
        let (x0, x1, x2) = (x[i], x[i + 1], x[i + 2]);
        let mut s = T::zero();
        for (&g, &w) in gx.iter().zip(&gw) {
            let t = (a + b) * T::lit(0.5) + (b - a) * T::lit(0.5) * g;
            let l0 = (t - x1) * (t - x2) / ((x0 - x1) * (x0 - x2));
            let l1 = (t - x0) * (t - x2) / ((x1 - x0) * (x1 - x2));
            let l2 = (t - x0) * (t - x1) / ((x2 - x0) * (x2 - x1));
            s = s + w * (l0 * y[i] + l1 * y[i + 1] + l2 * y[i + 2]);
        }
        s * (b - a) * T::lit(0.5)
    };
    let mut total = T::zero();
    let mut i = 0;
    while i + 2 < n {
        total = total + quad_over(i, x[i], x[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        total = total + quad_over(n - 3, x[n - 2], x[n - 1]);
    }
    total
}

fn trapezoid<T: Real>(x: &[T], y: &[T]) -> T {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| (a[1] - a[0]) * (b[0] + b[1]) * T::lit(0.5)).sum()
}

/// ∫ 4π v² g(v) dv over [0, v_max] from samples on the speed grid; the
/// piece below v₁ treats g as constant.
fn shell_integral<T: Real>(v: &[T], g: &[T]) -> (T, T) {
    let four_pi = T::lit(4.0) * T::PI();
    let y: Vec<T> = v.iter().zip(g).map(|(&v, &g)| four_pi * v * v * g).collect();
    let first = four_pi * g[0] * v[0].powi(3) / T::lit(3.0);
    let s = simpson(v, &y) + first;
    let t = trapezoid(v, &y) + first;
    (s, (s - t).abs())
}

/// f(v) = (1/(2π²)) ∫₀^R ψ(r) r² sinc(rv) dr on `v` (all v > 0).
pub fn inverse_transform<T: Real>(psi: &RadialCharFn<T>, v: &[T], radius: T) -> Result<DensityProfile<T>> {
    if v.is_empty() || v.iter().any(|&x| !(x > T::zero())) || v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("speed grid must be positive and increasing".into()));
    }
    if !(radius > T::zero() && radius <= psi.r_max()) {
        return Err(Error::Config(format!("truncation radius {radius} outside (0, {}]", psi.r_max())));
    }
    let r = psi.grid().radii();
    let half = radius * T::lit(0.5);
    let decay = r
        .iter()
        .zip(psi.values())
        .filter(|(x, _)| **x >= half && **x <= radius)
        .fold(T::zero(), |m, (&x, &y)| m.max(y.abs() * x));
    if decay > T::lit(DECAY_LIMIT) {
        return Err(Error::Inversion(format!(
            "psi has not decayed (max |psi| r = {decay:e} on [R/2, R]); the measure has no density at this resolution"
        )));
    }
    let mut breaks: Vec<T> = r.iter().copied().filter(|&x| x < radius).collect();
    breaks.push(radius);
    let norm = T::one() / (T::lit(2.0) * T::PI() * T::PI());
    let tol = Tolerance { abs: T::lit(1e-14).max(T::epsilon() * T::lit(100.0)), rel: T::lit(1e-11).max(T::epsilon() * T::lit(100.0)), max_panels: 4000 };
    let f: Vec<T> = v
        .par_iter()
        .map(|&speed| {
            let g = |x: T| psi.eval_raw(x).map(|p| p * x * x * sinc(x * speed)).unwrap_or(T::nan());
            integrate_panels(&g, &breaks, tol).map(|e| e.value * norm)
        })
        .collect::<Result<_>>()?;
    // A tail of size |ψ| r ≤ decay beyond R moves f(v) by at most about decay·R/(2π² v) per unit v.
    let truncation_error = norm * decay * radius / v[0];
    let min_value = f.iter().fold(T::zero(), |m, &x| m.min(x));
    if min_value < T::lit(NEGATIVE_LIMIT) {
        return Err(Error::Inversion(format!("negative density lobe {min_value:e}")));
    }
    let clipped: Vec<T> = f.iter().map(|&x| (-x).max(T::zero())).collect();
    let (clipped_mass, _) = shell_integral(v, &clipped);
    let (mass, mass_error) = shell_integral(v, &f);
    Ok(DensityProfile { v: v.to_vec(), f, radius, truncation_error, mass, mass_error, min_value, clipped_mass })
}

/// Truncated H^N norm on the Fourier side.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevNorm<T> {
    pub order: u32,
    /// ‖f‖²_{H^N} truncated at the largest radius.
    pub value: T,
    /// The last doubling of R changed the value by less than 1%.
    pub converged: bool,
    pub radii: Vec<T>,
    pub values: Vec<T>,
    /// Log–log slope of the truncated integral against R over the last three radii.
    pub growth_exponent: T,
}

/// (4π/(2π)³) ∫₀^R ⟨r⟩^{2N} |ψ(r)|² r² dr at R, R/2, R/4, ...
pub fn sobolev_norm<T: Real>(psi: &RadialCharFn<T>, order: u32, radius: T) -> Result<SobolevNorm<T>> {
    if !(radius > T::zero() && radius <= psi.r_max()) {
        return Err(Error::Config(format!("radius {radius} outside (0, {}]", psi.r_max())));
    }
    let mut radii = vec![radius];
    while radii.len() < 5 {
        radii.push(*radii.last().unwrap() * T::lit(0.5));
    }
    radii.reverse();
    let scale = sphere_area::<T>(3) / (T::lit(2.0) * T::PI()).powi(3);
    let n = T::from_count(order as usize);
    let g = |x: T| {
        let p = psi.eval(x).unwrap_or(T::nan());
        (T::one() + x * x).powf(n) * p * p * x * x
    };
    let tol = Tolerance { abs: T::lit(1e-13).max(T::epsilon() * T::lit(100.0)), rel: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)), max_panels: 4000 };
    let r = psi.grid().radii();
    let mut values = Vec::with_capacity(radii.len());
    let mut acc = T::zero();
    let mut lo = T::zero();
    for &hi in &radii {
        let mut breaks = vec![lo];
        breaks.extend(r.iter().copied().filter(|&x| x > lo && x < hi));
        breaks.push(hi);
        acc = acc + integrate_panels(&g, &breaks, tol)?.value;
        values.push(acc * scale);
        lo = hi;
    }
    let m = values.len();
    let value = values[m - 1];
    let prev = values[m - 2];
    let converged = (value - prev).abs() < T::lit(0.01) * value.abs();
    let lx: Vec<T> = radii[m - 3..].iter().map(|x| x.ln()).collect();
    let ly: Vec<T> = values[m - 3..].iter().map(|x| x.max(T::min_positive_value()).ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / T::lit(3.0);
    let my = ly.iter().copied().sum::<T>() / T::lit(3.0);
    let sxy: T = lx.iter().zip(&ly).map(|(a, b)| (*a - mx) * (*b - my)).sum();
    let sxx: T = lx.iter().map(|a| (*a - mx) * (*a - mx)).sum();
    Ok(SobolevNorm { order, value, converged, radii, values, growth_exponent: sxy / sxx })
}

/// Entropy-type integrals and moments of a density profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport<T> {
    /// ∫ f log(1 + f)
    pub log_one_plus: T,
    /// ∫_{f>0} f log f
    pub log_f: T,
    /// ∫ ⟨v⟩^α f
    pub bracket_moment: T,
    /// ∫ |v|^α f
    pub abs_moment: T,
    /// ∫_{0<f<1} f |log f|
    pub negative_part: T,
    /// ∫ f ⟨v⟩^α + (2/e) ∫ e^{-⟨v⟩^α/2} dv, which dominates `negative_part`.
    pub negative_bound: T,
    /// ∫ f log(1 + f) ≤ ∫_{f≥1} f (log f + log 2) + ∫_{f<1} f²
    pub consistent: bool,
    pub clipped_mass: T,
}

/// Integrals over the speed grid with the 4πv² weight. Refuses profiles
/// whose mass is off by more than the reported quadrature error.
pub fn entropy_and_moments<T: Real>(profile: &DensityProfile<T>, alpha: T) -> Result<EntropyReport<T>> {
    if !profile.mass_ok() {
        return Err(Error::Inversion(format!(
            "mass {} differs from 1 by more than the quadrature error {:e}",
            profile.mass, profile.mass_error
        )));
    }
    if !(alpha > T::zero()) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    let v = &profile.v;
    let f: Vec<T> = profile.f.iter().map(|&x| x.max(T::zero())).collect();
    let bracket = |s: T| (T::one() + s * s).powf(alpha * T::lit(0.5));
    let col = |h: &dyn Fn(T, T) -> T| -> T {
        let g: Vec<T> = v.iter().zip(&f).map(|(&s, &x)| h(s, x)).collect();
        shell_integral(v, &g).0
    };
    let xlogx = |x: T| if x > T::zero() { x * x.ln() } else { T::zero() };
    let log_one_plus = col(&|_, x| x * x.ln_1p());
    let log_f = col(&|_, x| xlogx(x));
    let bracket_moment = col(&|s, x| bracket(s) * x);
    let abs_moment = col(&|s, x| s.powf(alpha) * x);
    let negative_part = col(&|_, x| if x < T::one() { -xlogx(x) } else { T::zero() });
    let rhs = col(&|_, x| if x >= T::one() { xlogx(x) + x * T::LN_2() } else { x * x });
    let gauss_like = |s: T| T::lit(4.0) * T::PI() * s * s * (-bracket(s) * T::lit(0.5)).exp();
    let tol = Tolerance { abs: T::lit(1e-12), rel: T::lit(1e-10), max_panels: 4000 };
    let mut device = T::zero();
    let mut a = T::zero();
    let mut width = T::one();
    // integrate outwards until the shells stop contributing
    loop {
        let piece = adaptive(&gauss_like, a, a + width, tol)?.value;
        device = device + piece;
        a = a + width;
        width = width * T::lit(2.0);
        if piece < T::lit(1e-14) * device || a > T::lit(1e8) {
            break;
        }
    }
    let negative_bound = bracket_moment + T::lit(2.0) / T::E() * device;
    let slack = T::lit(1e-10) + profile.mass_error;
    Ok(EntropyReport {
        log_one_plus,
        log_f,
        bracket_moment,
        abs_moment,
        negative_part,
        negative_bound,
        consistent: log_one_plus <= rhs + slack,
        clipped_mass: profile.clipped_mass,
    })
}

/// Per-snapshot comparison of moment_upper(φ(t), α′) with the bound
/// (C/(2c_{α′,3,∞})) (e^{λ_α t} ‖φ₀ − 1‖_α)^{α′/α}.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrack<T> {
    pub alpha: T,
    pub alpha_prime: T,
    pub lambda: T,
    /// Embedding constant 2|S|/α′ + |S|/(α − α′).
    pub embedding_constant: T,
    /// (t, moment_upper, bound)
    pub rows: Vec<(T, T, T)>,
}

impl<T: Real> MomentTrack<T> {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.1 <= r.2)
    }
}

pub fn moment_trajectory_check<T: Real>(
    traj: &Trajectory<T>,
    alpha: T,
    alpha_prime: T,
    quad: &AngularQuadrature<T>,
) -> Result<MomentTrack<T>> {
    if !(alpha_prime > T::zero() && alpha_prime < alpha && alpha <= T::lit(2.0)) {
        return Err(Error::Domain(format!("need 0 < alpha' < alpha <= 2, got {alpha_prime}, {alpha}")));
    }
    let lambda = lambda_alpha(&traj.kernel, alpha, quad)?.finite("lambda_alpha")?;
    let area: T = sphere_area(3);
    let embedding_constant = T::lit(2.0) * area / alpha_prime + area / (alpha - alpha_prime);
    let c_inf = c_constant(alpha_prime, 3, T::infinity())?;
    let one = CharFn::one(3)?;
    let psi0 = &traj.snapshots[0];
    let k0 = sup_norm(&CharFn::radial(psi0.clone()), &one, alpha, psi0.grid())?;
    if k0.is_divergent() {
        return Err(Error::Divergence("initial K^alpha norm is infinite".into()));
    }
    let rows: Vec<Result<(T, T, T)>> = traj
        .times
        .par_iter()
        .zip(traj.snapshots.par_iter())
        .map(|(&t, s)| {
            let lhs = if s.values().iter().all(|&v| v == T::one()) {
                T::zero()
            } else {
                moment_upper(&CharFn::radial(s.clone()), alpha_prime)?.value
            };
            let rhs = embedding_constant / (T::lit(2.0) * c_inf) * ((lambda * t).exp() * k0.value).powf(alpha_prime / alpha);
            Ok((t, lhs, rhs))
        })
        .collect();
    Ok(MomentTrack {
        alpha,
        alpha_prime,
        lambda,
        embedding_constant,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

/// `t,H1,H2,H3,H4,entropy_log1p,entropy_logf,moment` rows; snapshots without a
/// density (t = 0 measure data) leave the entropy and moment columns empty.
pub fn physical_diagnostics_csv<T: Real>(traj: &Trajectory<T>, alpha: T, radius: T, speeds: &[T]) -> Result<String> {
    let rows: Vec<Result<String>> = traj
        .times
        .par_iter()
        .zip(traj.snapshots.par_iter())
        .map(|(&t, s)| {
            let mut line = format!("{:.10e}", t.as_f64());
            for n in 1..=4 {
                let h = sobolev_norm(s, n, radius)?;
                let _ = write!(line, ",{:.17e}", h.value.as_f64());
            }
            match inverse_transform(s, speeds, radius).and_then(|p| entropy_and_moments(&p, alpha)) {
                Ok(e) => {
                    let _ = write!(line, ",{:.17e},{:.17e},{:.17e}", e.log_one_plus.as_f64(), e.log_f.as_f64(), e.bracket_moment.as_f64());
                }
                Err(Error::Inversion(_)) => line.push_str(",,,"),
                Err(e) => return Err(e),
            }
            Ok(line)
        })
        .collect();
    let mut out = String::from("t,H1,H2,H3,H4,entropy_log1p,entropy_logf,moment\n");
    for r in rows {
        out.push_str(&r?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::charfun::RadialGrid;

    fn fine_gaussian() -> RadialCharFn<f64> {
        let pts: Vec<f64> = (0..=40 * 128).map(|k| k as f64 / 128.0).collect();
        let grid = Arc::new(RadialGrid::from_points(pts).unwrap());
        CharFn::gaussian(1.0, 3).unwrap().sample_radial(grid).unwrap()
    }

    fn gaussian_density(v: f64) -> f64 {
        (2.0 * std::f64::consts::PI).powf(-1.5) * (-v * v / 2.0).exp()
    }

    #[test]
    fn simpson_is_exact_on_quadratics() {
        let x = [0.0, 0.3, 0.5, 1.1, 1.2, 2.0];
        let y: Vec<f64> = x.iter().map(|t| 3.0 * t * t - t).collect();
        assert!((simpson(&x, &y) - 6.0).abs() < 1e-12);
        assert!((simpson(&x[..5], &y[..5]) - (1.2f64.powi(3) - 0.72)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_inverts_to_the_normal_density() {
        let psi = fine_gaussian();
        let p = inverse_transform(&psi, &[0.01], 40.0).unwrap();
        assert!((p.f[0] - 0.063_493_635_934_240_97 * (-5e-5_f64).exp()).abs() < 1e-10);
        let v = speed_grid(10.0, 1000);
        let p = inverse_transform(&psi, &v, 40.0).unwrap();
        assert!((p.mass - 1.0).abs() < 1e-6, "{}", p.mass);
        let worst = v
            .iter()
            .zip(&p.f)
            .filter(|(s, _)| **s <= 5.0)
            .map(|(&s, &f)| ((f - gaussian_density(s)) / gaussian_density(s)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn sphere_measure_has_no_density() {
        let grid = Arc::new(RadialGrid::standard());
        let psi = CharFn::uniform_sphere(1.0, 3).unwrap().sample_radial(grid).unwrap();
        assert!(matches!(inverse_transform(&psi, &[0.5, 1.0], 64.0), Err(Error::Inversion(_))));
    }

    #[test]
    fn gaussian_entropy_and_moment() {
        let psi = fine_gaussian();
        let v = speed_grid(12.0, 2400);
        let p = inverse_transform(&psi, &v, 40.0).unwrap();
        let e = entropy_and_moments(&p, 1.0).unwrap();
        let exact = -1.5 * (1.0 + (2.0 * std::f64::consts::PI).ln());
        assert!((e.log_f - exact).abs() < 1e-5, "{}", e.log_f);
        let g = |s: f64| 4.0 * std::f64::consts::PI * s * s * (1.0 + s * s).sqrt() * gaussian_density(s);
        let oracle = adaptive(&g, 0.0, 14.0, Tolerance { abs: 1e-14, rel: 1e-12, max_panels: 200 }).unwrap().value;
        assert!((e.bracket_moment - oracle).abs() < 1e-4);
        assert!(e.consistent);
        assert!(e.negative_part <= e.negative_bound);
        // E|v| = 2√(2/π)
        assert!((e.abs_moment - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn sobolev_growth_of_sphere_measure() {
        let grid = Arc::new(RadialGrid::<f64>::standard());
        let psi = CharFn::uniform_sphere(1.0, 3).unwrap().sample_radial(grid.clone()).unwrap();
        let h = sobolev_norm(&psi, 2, 64.0).unwrap();
        assert!(!h.converged);
        // ⟨r⟩⁴ sin²r / r² · r² ~ r⁴ sin² r integrates to ~ R⁵/10
        assert!((h.growth_exponent - 5.0).abs() < 0.25, "{}", h.growth_exponent);
        let g = CharFn::gaussian(1.0, 3).unwrap().sample_radial(grid).unwrap();
        let h = sobolev_norm(&g, 2, 64.0).unwrap();
        assert!(h.converged && h.value.is_finite());
    }
}
