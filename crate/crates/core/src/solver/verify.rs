//! Numerical checks of the stability and time-continuity estimates.

use rayon::prelude::*;

use crate::charfun::{CharFn, RadialCharFn};
use crate::error::{Error, Result};
use crate::kernel::{lambda_alpha, moment_kernel_factor, AngularQuadrature, KernelSpec};
use crate::metric::{dis_ab, m_norm, profile_m_norm, sup_norm};
use crate::scalar::Real;

use super::{evolve, rhs_noncutoff, SolverConfig, Trajectory};

/// Ratios ‖φ(t) − φ̃(t)‖ / (e^{λ_α t} ‖φ₀ − φ̃₀‖) in the ℳ^α and 𝒦^α norms.
#[derive(Debug, Clone)]
pub struct StabilityReport<T> {
    pub lambda: T,
    pub limit: T,
    pub times: Vec<T>,
    pub m_distance: Vec<T>,
    pub k_distance: Vec<T>,
    pub m_ratio: Vec<T>,
    pub k_ratio: Vec<T>,
}

impl<T: Real> StabilityReport<T> {
    pub fn max_m_ratio(&self) -> T {
        self.m_ratio.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    pub fn max_k_ratio(&self) -> T {
        self.k_ratio.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    pub fn passed(&self) -> bool {
        self.max_m_ratio() <= self.limit && self.max_k_ratio() <= self.limit
    }

    /// Verification error at the first offending snapshot.
    pub fn ensure(&self) -> Result<()> {
        for (i, &t) in self.times.iter().enumerate() {
            for (what, r) in [("M^alpha", self.m_ratio[i]), ("K^alpha", self.k_ratio[i])] {
                if !(r <= self.limit) {
                    return Err(Error::Verification { t: t.as_f64(), what: what.into(), ratio: r.as_f64(), limit: self.limit.as_f64() });
                }
            }
        }
        Ok(())
    }
}

fn ratio<T: Real>(lhs: T, rhs: T) -> T {
    if lhs == T::zero() {
        T::zero()
    } else if rhs == T::zero() {
        T::infinity()
    } else {
        lhs / rhs
    }
}

/// ℳ^α distance of two grid profiles over the whole grid, head included.
fn grid_m_distance<T: Real>(a: &RadialCharFn<T>, b: &RadialCharFn<T>, alpha: T) -> Result<T> {
    if a.values() == b.values() {
        return Ok(T::zero());
    }
    let r = a.grid().radii();
    m_norm(&CharFn::radial(a.clone()), &CharFn::radial(b.clone()), alpha, r[1], a.r_max())?.finite("M^alpha distance")
}

fn grid_k_distance<T: Real>(a: &RadialCharFn<T>, b: &RadialCharFn<T>, alpha: T) -> Result<T> {
    if a.values() == b.values() {
        return Ok(T::zero());
    }
    let s = sup_norm(&CharFn::radial(a.clone()), &CharFn::radial(b.clone()), alpha, a.grid())?;
    if s.is_divergent() {
        return Err(Error::Divergence("K^alpha distance is infinite".into()));
    }
    Ok(s.value)
}

/// Evolves both data with `cfg` and compares their distance at each snapshot
/// with e^{λ_α t} times the initial distance.
pub fn verify_stability<T: Real>(
    phi0: &RadialCharFn<T>,
    phit0: &RadialCharFn<T>,
    cfg: &SolverConfig<T>,
    limit: T,
) -> Result<StabilityReport<T>> {
    let alpha = cfg.alpha;
    let lambda = lambda_alpha(&cfg.kernel, alpha, &cfg.quadrature)?.finite("lambda_alpha")?;
    let quiet = cfg.clone().with_diagnostics(false);
    let a = evolve(phi0, &quiet)?;
    let b = if phi0.values() == phit0.values() { a.clone() } else { evolve(phit0, &quiet)? };
    let m0 = grid_m_distance(phi0, phit0, alpha)?;
    let k0 = grid_k_distance(phi0, phit0, alpha)?;
    let rows: Vec<Result<(T, T)>> = a
        .snapshots
        .par_iter()
        .zip(b.snapshots.par_iter())
        .map(|(x, y)| Ok((grid_m_distance(x, y, alpha)?, grid_k_distance(x, y, alpha)?)))
        .collect();
    let mut report = StabilityReport {
        lambda,
        limit,
        times: a.times.clone(),
        m_distance: Vec::new(),
        k_distance: Vec::new(),
        m_ratio: Vec::new(),
        k_ratio: Vec::new(),
    };
    for (row, &t) in rows.into_iter().zip(&a.times) {
        let (m, k) = row?;
        let grow = (lambda * t).exp();
        report.m_distance.push(m);
        report.k_distance.push(k);
        report.m_ratio.push(ratio(m, grow * m0));
        report.k_ratio.push(ratio(k, grow * k0));
    }
    Ok(report)
}

/// Time-Lipschitz table of a trajectory in dis_{α,α}.
#[derive(Debug, Clone)]
pub struct ContinuityReport<T> {
    pub lambda: T,
    /// dis_{α,α}(φ₀, 1)
    pub initial: T,
    /// (s, t, dis(φ(s), φ(t)), ratio) with ratio = dis / (|t − s| e^{λ max(s,t)} dis(φ₀, 1)).
    pub pairs: Vec<(T, T, T, T)>,
}

impl<T: Real> ContinuityReport<T> {
    /// Smallest C with dis ≤ C |t − s| e^{λ max} dis(φ₀, 1) over all pairs.
    pub fn constant(&self) -> T {
        self.pairs.iter().fold(T::zero(), |m, p| m.max(p.3))
    }

    pub fn max_increment(&self) -> T {
        self.pairs.iter().fold(T::zero(), |m, p| m.max(p.2))
    }
}

fn dis_grid<T: Real>(a: &RadialCharFn<T>, b: &CharFn<T>, alpha: T) -> Result<T> {
    let r = a.grid().radii();
    let fa = CharFn::radial(a.clone());
    dis_ab(&fa, b, alpha, alpha, r[1], a.r_max(), a.grid())?.finite("dis")
}

/// dis_{α,α} between every pair of snapshots, relative to the Lipschitz envelope.
pub fn verify_continuity<T: Real>(traj: &Trajectory<T>, quad: &AngularQuadrature<T>) -> Result<ContinuityReport<T>> {
    if traj.len() < 3 {
        return Err(Error::Config("continuity check needs at least three snapshots".into()));
    }
    let alpha = traj.alpha;
    let lambda = lambda_alpha(&traj.kernel, alpha, quad)?.finite("lambda_alpha")?;
    let initial = dis_grid(&traj.snapshots[0], &CharFn::one(3)?, alpha)?;
    let n = traj.len();
    let index: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let pairs: Vec<Result<(T, T, T, T)>> = index
        .par_iter()
        .map(|&(i, j)| {
            let (s, t) = (traj.times[i], traj.times[j]);
            let (a, b) = (&traj.snapshots[i], &traj.snapshots[j]);
            let d = if a.values() == b.values() { T::zero() } else { dis_grid(a, &CharFn::radial(b.clone()), alpha)? };
            let env = (t - s) * (lambda * t).exp() * initial;
            Ok((s, t, d, ratio(d, env)))
        })
        .collect();
    Ok(ContinuityReport { lambda, initial, pairs: pairs.into_iter().collect::<Result<_>>()? })
}

/// ∫ |Q(ψ)(ξ)| |ξ|^{-3-α} dξ next to the kernel factor times ‖1 − ψ‖_{ℳ^α}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MnormBound<T> {
    pub lhs: T,
    pub kernel_factor: T,
    pub norm: T,
    /// kernel_factor · norm
    pub scale: T,
    pub divergent: bool,
}

impl<T: Real> MnormBound<T> {
    pub fn ratio(&self) -> T {
        ratio(self.lhs, self.scale)
    }
}

/// ℳ^α size of the collision term of `psi` (which need not be a
/// characteristic function: linearised surrogates are accepted).
pub fn rhs_mnorm_bound<T: Real>(
    psi: &RadialCharFn<T>,
    kernel: &KernelSpec<T>,
    alpha: T,
    quad: &AngularQuadrature<T>,
) -> Result<MnormBound<T>> {
    let kernel_factor = moment_kernel_factor(kernel, alpha, quad)?;
    let rhs = rhs_noncutoff(psi, kernel, quad)?;
    let q = RadialCharFn::profile(psi.grid().clone(), rhs.values)?;
    let lhs = profile_m_norm(&q, alpha)?;
    let defect: Vec<T> = psi.values().iter().map(|&v| T::one() - v).collect();
    let norm = profile_m_norm(&RadialCharFn::profile(psi.grid().clone(), defect)?, alpha)?;
    let divergent = lhs.is_divergent() || kernel_factor.is_divergent();
    let lhs_v = if lhs.is_divergent() { T::infinity() } else { lhs.value + lhs.head };
    let norm_v = if norm.is_divergent() { T::infinity() } else { norm.value + norm.head };
    let kf = kernel_factor.value().unwrap_or(T::infinity());
    Ok(MnormBound { lhs: lhs_v, kernel_factor: kf, norm: norm_v, scale: kf * norm_v, divergent })
}
