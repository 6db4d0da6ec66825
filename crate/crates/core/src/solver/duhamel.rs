//! Cutoff evolution through the Duhamel fixed point.
//!
//! On each step [t_n, t_n + h] the unknowns are ψ at τ = h/2 and τ = h. The
//! gain term is interpolated by the quadratic through τ ∈ {0, h/2, h} and
//! integrated exactly against e^{-γ₂(τ-σ)} (product integration), which keeps
//! both ψ ≡ 1 and the Gaussian fixed points of the continuous problem.

use crate::charfun::RadialCharFn;
use crate::error::{Error, Result};
use crate::kernel::gamma_alpha;
use crate::quadrature::gauss_legendre;
use crate::scalar::Real;

use super::{Diagnostics, SolverConfig, Stencil, StepRecord, Trajectory};

/// w[m][k] = ∫₀^{τ_m} e^{-γ(τ_m - σ)} L_k(σ) dσ for τ_m ∈ {h/2, h}, where
/// L_k are the quadratic Lagrange polynomials on {0, h/2, h}.
pub fn product_weights<T: Real>(gamma: T, h: T) -> [[T; 3]; 2] {
    let (x, w) = gauss_legendre::<T>(24);
    let half = T::lit(0.5);
    let lagrange = |s: T| {
        let u = s / h;
        let two = T::lit(2.0);
        [(two * u - T::one()) * (u - T::one()), T::lit(4.0) * u * (T::one() - u), u * (two * u - T::one())]
    };
    let mut out = [[T::zero(); 3]; 2];
    for (m, tau) in [h * half, h].into_iter().enumerate() {
        for (&xi, &wi) in x.iter().zip(&w) {
            let s = tau * half * (xi + T::one());
            let e = (-gamma * (tau - s)).exp() * wi * tau * half;
            let l = lagrange(s);
            for k in 0..3 {
                out[m][k] = out[m][k] + e * l[k];
            }
        }
    }
    out
}

/// sup over positive radii of |δ(r)| / r^α.
fn weighted_sup<T: Real>(r: &[T], a: &[T], b: &[T], alpha: T) -> T {
    r.iter()
        .zip(a.iter().zip(b))
        .skip(1)
        .fold(T::zero(), |m, (&ri, (&x, &y))| m.max((x - y).abs() / ri.powf(alpha)))
}

fn plain_sup<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// Weighted Picard differences below this are rounding noise and are not
/// used for contraction ratios.
const NOISE_FLOOR: f64 = 1e-10;
/// The monotonicity filter switches branches at extrema, so the discrete
/// Picard map is only piecewise smooth and can settle into a tiny cycle.
/// A change below this that stops shrinking for `STALL_COUNT` iterations
/// ends the iteration; the plateau is recorded as the step residual.
const PLATEAU: f64 = 1e-9;
const STALL_COUNT: usize = 3;

/// Evolves `psi0` under an integrable kernel with the Duhamel–Picard scheme.
pub fn duhamel_evolve<T: Real>(psi0: &RadialCharFn<T>, cfg: &SolverConfig<T>) -> Result<Trajectory<T>> {
    if !cfg.kernel.is_integrable() {
        return Err(Error::Config(format!(
            "the Duhamel integrator needs an integrable kernel, got {}",
            cfg.kernel
        )));
    }
    cfg.check_initial(psi0)?;
    let (snaps, sub) = cfg.schedule()?;
    let g_alpha = gamma_alpha(&cfg.kernel, cfg.alpha, &cfg.quadrature)?.finite("gamma_alpha")?;
    let h = cfg.dt;
    if !(g_alpha * h < T::one()) {
        return Err(Error::Config(format!(
            "contraction guard violated: gamma_alpha * dt = {} >= 1",
            g_alpha * h
        )));
    }
    let grid = cfg.grid.clone();
    let stencil = Stencil::new(grid.clone(), &cfg.kernel, &cfg.quadrature)?;
    let g2 = stencil.gamma2();
    let w = product_weights(g2, h);
    let decay = [(-g2 * h * T::lit(0.5)).exp(), (-g2 * h).exp()];
    let r = grid.radii().to_vec();
    let n = r.len();

    let mut traj = Trajectory {
        kernel: cfg.kernel,
        alpha: cfg.alpha,
        times: vec![T::zero()],
        snapshots: vec![psi0.clone()],
        diagnostics: vec![Diagnostics::compute(T::zero(), psi0, cfg.alpha, cfg.diagnostics)?],
        steps: Vec::new(),
        integrator_tolerance: None,
    };
    let mut psi = psi0.clone();
    let mut t = T::zero();
    for snap in 1..=snaps {
        for _ in 0..sub {
            let y0 = psi.values().to_vec();
            let g0 = stencil.gain(&psi)?;
            let mut mid = y0.clone();
            let mut end = y0.clone();
            let mut g_mid = g0.clone();
            let mut g_end = g0.clone();
            let mut prev_weighted: Option<T> = None;
            let mut factor: Option<T> = None;
            let mut last_factor = T::zero();
            let mut converged = false;
            let mut iterations = 0;
            let mut prev_change = T::infinity();
            let mut stalled = 0;
            let mut residual = T::zero();
            while iterations < cfg.picard_max_iter {
                iterations += 1;
                let next = |m: usize, i: usize| decay[m] * y0[i] + w[m][0] * g0[i] + w[m][1] * g_mid[i] + w[m][2] * g_end[i];
                let new_mid: Vec<T> = (0..n).map(|i| next(0, i)).collect();
                let new_end: Vec<T> = (0..n).map(|i| next(1, i)).collect();
                let change = plain_sup(&new_mid, &mid).max(plain_sup(&new_end, &end));
                let weighted =
                    weighted_sup(&r, &new_mid, &mid, cfg.alpha).max(weighted_sup(&r, &new_end, &end, cfg.alpha));
                if let Some(p) = prev_weighted {
                    if p > T::lit(NOISE_FLOOR) {
                        let q = weighted / p;
                        last_factor = q;
                        factor = Some(factor.map_or(q, |f: T| f.max(q)));
                    }
                }
                prev_weighted = Some(weighted);
                mid = new_mid;
                end = new_end;
                if !mid.iter().chain(&end).all(|v| v.is_finite()) {
                    return Err(Error::Numeric(format!("non-finite Picard iterate at t = {t}")));
                }
                residual = change;
                if change < cfg.picard_tol {
                    converged = true;
                    break;
                }
                stalled = if change < T::lit(PLATEAU) && change > prev_change * T::lit(0.5) { stalled + 1 } else { 0 };
                if stalled >= STALL_COUNT {
                    converged = true;
                    break;
                }
                prev_change = change;
                g_mid = stencil.gain(&RadialCharFn::from_parts(grid.clone(), mid.clone()))?;
                g_end = stencil.gain(&RadialCharFn::from_parts(grid.clone(), end.clone()))?;
            }
            if !converged {
                return Err(Error::Convergence { iterations, factor: last_factor.as_f64() });
            }
            t = t + h;
            psi = RadialCharFn::new(grid.clone(), end)?;
            traj.steps.push(StepRecord { t, picard_iterations: iterations, contraction: factor, bound: g_alpha * h, residual });
        }
        let ts = cfg.snapshot_every * T::from_count(snap);
        traj.times.push(ts);
        traj.diagnostics.push(Diagnostics::compute(ts, &psi, cfg.alpha, cfg.diagnostics)?);
        traj.snapshots.push(psi.clone());
    }
    Ok(traj)
}
