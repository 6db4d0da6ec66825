//! Non-cutoff evolution: exponential Euler on the split collision term, and
//! the b_n = min{b, n} cutoff-sequence route.

use crate::charfun::RadialCharFn;
use crate::error::{Error, Result};
use crate::kernel::{gamma_alpha, AngularQuadrature, KernelSpec};
use crate::scalar::Real;

use super::{duhamel_evolve, Diagnostics, Integrator, SolverConfig, Stencil, Trajectory};

/// Collision term on the grid together with the small-angle decay monitor.
#[derive(Debug, Clone)]
pub struct RhsReport<T> {
    pub values: Vec<T>,
    /// max_r |contribution| per geometric angular band, from θ = π/2 down.
    pub band_sums: Vec<T>,
    /// Geometric-mean ratio of successive band sums over the smallest angles.
    pub decay_ratio: Option<T>,
    /// Estimate of the neglected part below θ_min.
    pub tail_estimate: T,
    /// Hölder exponent of ψ at the origin.
    pub holder: T,
}

/// Band ratios at or above this count as non-decaying.
const DECAY_LIMIT: f64 = 0.999;
/// Number of trailing bands in the decay fit.
const DECAY_BANDS: usize = 6;

fn decay_of<T: Real>(bands: &[T]) -> Option<T> {
    // the band at θ_min is partial; leave it out
    if bands.len() < DECAY_BANDS + 2 {
        return None;
    }
    let hi = bands.len() - 2;
    let lo = hi - (DECAY_BANDS - 1);
    let (a, b) = (bands[lo], bands[hi]);
    if a == T::zero() || b == T::zero() {
        return None;
    }
    Some((b / a).powf(T::one() / T::from_count(DECAY_BANDS - 1)))
}

fn holder_gate<T: Real>(psi: &RadialCharFn<T>, kernel: &KernelSpec<T>) -> Result<()> {
    if kernel.is_integrable() {
        return Ok(());
    }
    let s2 = T::lit(2.0) * kernel.singularity();
    let a = psi.holder_exponent();
    if !(a > s2) {
        return Err(Error::Divergence(format!(
            "Hölder exponent {a} of the datum at 0 does not exceed 2s = {s2}; the collision integral needs alpha > 2s"
        )));
    }
    Ok(())
}

fn monitor<T: Real>(stencil: &Stencil<T>, psi: &RadialCharFn<T>) -> Result<RhsReport<T>> {
    let values = stencil.collision(psi)?;
    let band_sums = stencil.band_sums(psi)?;
    let decay_ratio = decay_of(&band_sums);
    let last = band_sums.len().saturating_sub(2);
    let tail_estimate = match decay_ratio {
        Some(q) if q < T::one() => band_sums[last] * q / (T::one() - q),
        Some(_) => T::infinity(),
        None => T::zero(),
    };
    if let Some(q) = decay_ratio {
        if q >= T::lit(DECAY_LIMIT) {
            return Err(Error::Divergence(format!(
                "small-angle band sums do not decay (ratio {q}); the collision integral needs alpha > 2s"
            )));
        }
    }
    Ok(RhsReport { values, band_sums, decay_ratio, tail_estimate, holder: psi.holder_exponent() })
}

/// Cancellation-aware collision term ∫ b [ψ(r c) ψ(r s) − ψ(r)] of a sampled ψ.
pub fn rhs_noncutoff<T: Real>(psi: &RadialCharFn<T>, kernel: &KernelSpec<T>, quad: &AngularQuadrature<T>) -> Result<RhsReport<T>> {
    holder_gate(psi, kernel)?;
    let stencil = Stencil::new(psi.grid().clone(), kernel, quad)?;
    monitor(&stencil, psi)
}

/// expm1(z)/z
fn phi1<T: Real>(z: T) -> T {
    if z.abs() < T::lit(1e-8) {
        T::one() + z * T::lit(0.5)
    } else {
        z.exp_m1() / z
    }
}

const MODULUS_SLACK: f64 = 1e-8;

fn run_euler<T: Real>(stencil: &Stencil<T>, psi0: &RadialCharFn<T>, cfg: &SolverConfig<T>, dt: T, sub: usize, snaps: usize) -> Result<Trajectory<T>> {
    let grid = cfg.grid.clone();
    let mut traj = Trajectory {
        kernel: cfg.kernel,
        alpha: cfg.alpha,
        times: vec![T::zero()],
        snapshots: vec![psi0.clone()],
        diagnostics: Vec::new(),
        steps: Vec::new(),
        integrator_tolerance: None,
    };
    let mut psi = psi0.clone();
    let mut t = T::zero();
    for snap in 1..=snaps {
        for _ in 0..sub {
            let (a, b) = stencil.split(&psi)?;
            let next: Vec<T> = psi
                .values()
                .iter()
                .zip(a.iter().zip(&b))
                .map(|(&y, (&a, &b))| {
                    let z = a * dt;
                    z.exp() * y + dt * phi1(z) * b
                })
                .collect();
            t = t + dt;
            if let Some(v) = next.iter().find(|v| !(v.abs() <= T::one() + T::lit(MODULUS_SLACK))) {
                return Err(Error::StepSize { t: t.as_f64(), reason: format!("|psi| reached {v}; reduce dt") });
            }
            psi = RadialCharFn::from_parts(grid.clone(), next);
        }
        let ts = cfg.snapshot_every * T::from_count(snap);
        traj.times.push(ts);
        traj.snapshots.push(psi.clone());
    }
    Ok(traj)
}

/// Evolves `psi0` with exponential Euler on Q = Aψ + B. With
/// `cfg.richardson` the run is repeated at dt/2; the finer run is returned
/// and the sup difference is its integrator tolerance.
pub fn evolve_noncutoff<T: Real>(psi0: &RadialCharFn<T>, cfg: &SolverConfig<T>) -> Result<Trajectory<T>> {
    cfg.check_initial(psi0)?;
    let (snaps, sub) = cfg.schedule()?;
    let stencil = Stencil::new(cfg.grid.clone(), &cfg.kernel, &cfg.quadrature)?;
    holder_gate(psi0, &cfg.kernel)?;
    monitor(&stencil, psi0)?;
    let coarse = run_euler(&stencil, psi0, cfg, cfg.dt, sub, snaps)?;
    let mut traj = if cfg.richardson {
        let fine = run_euler(&stencil, psi0, cfg, cfg.dt * T::lit(0.5), 2 * sub, snaps)?;
        let tol = coarse.sup_distance(&fine)?;
        Trajectory { integrator_tolerance: Some(tol), ..fine }
    } else {
        coarse
    };
    let alpha = cfg.alpha;
    traj.diagnostics = traj
        .times
        .iter()
        .zip(&traj.snapshots)
        .map(|(&t, s)| Diagnostics::compute(t, s, alpha, cfg.diagnostics))
        .collect::<Result<_>>()?;
    for s in &traj.snapshots[1..] {
        RadialCharFn::new(cfg.grid.clone(), s.values().to_vec())?;
    }
    Ok(traj)
}

/// Pairwise distances between solutions for capped kernels b_n.
#[derive(Debug, Clone)]
pub struct SequenceStudy<T> {
    pub levels: Vec<T>,
    pub trajectories: Vec<Trajectory<T>>,
    /// Step used for each level.
    pub steps: Vec<T>,
    /// (i, j, sup_{t, r} |ψ_i − ψ_j|) for i < j.
    pub distances: Vec<(usize, usize, T)>,
    /// Distances between consecutive levels.
    pub successive: Vec<T>,
    /// Largest level against the direct non-cutoff run, when computed.
    pub direct_distance: Option<T>,
    pub direct_tolerance: Option<T>,
}

impl<T: Real> SequenceStudy<T> {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.successive.windows(2).all(|w| w[1] < w[0])
    }
}

/// Largest admissible Duhamel step for kernel `b_n`: the snapshot interval
/// divided into enough steps that γ_α Δt ≤ 1/2.
fn level_step<T: Real>(kernel: &KernelSpec<T>, cfg: &SolverConfig<T>) -> Result<T> {
    let ga = gamma_alpha(kernel, cfg.alpha, &cfg.quadrature)?.finite("gamma_alpha of the capped kernel")?;
    let every = cfg.snapshot_every;
    let count = (every * ga / T::lit(0.5)).ceil().max(T::one());
    Ok(every / count)
}

/// Solves with b_n = min{b, n} for every level in `levels` (Duhamel–Picard),
/// and, when `direct` is set, with the uncut kernel by exponential Euler.
pub fn cutoff_sequence_study<T: Real>(psi0: &RadialCharFn<T>, cfg: &SolverConfig<T>, levels: &[T], direct: bool) -> Result<SequenceStudy<T>> {
    if levels.is_empty() {
        return Err(Error::Config("cutoff study needs at least one level".into()));
    }
    let base = cfg.kernel.uncut();
    let mut trajectories = Vec::with_capacity(levels.len());
    let mut steps = Vec::with_capacity(levels.len());
    for &n in levels {
        let kernel = base.with_cutoff(n)?;
        let dt = level_step(&kernel, cfg)?;
        let c = SolverConfig { kernel, dt, integrator: Integrator::DuhamelPicard, ..cfg.clone() };
        trajectories.push(duhamel_evolve(psi0, &c)?);
        steps.push(dt);
    }
    let mut distances = Vec::new();
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            distances.push((i, j, trajectories[i].sup_distance(&trajectories[j])?));
        }
    }
    let successive = (1..levels.len()).map(|i| trajectories[i - 1].sup_distance(&trajectories[i])).collect::<Result<_>>()?;
    let (direct_distance, direct_tolerance) = if direct {
        let c = SolverConfig { kernel: base, integrator: Integrator::ExponentialEuler, richardson: true, ..cfg.clone() };
        let d = evolve_noncutoff(psi0, &c)?;
        let last = trajectories.last().expect("at least one level");
        (Some(last.sup_distance(&d)?), d.integrator_tolerance)
    } else {
        (None, None)
    };
    Ok(SequenceStudy { levels: levels.to_vec(), trajectories, steps, distances, successive, direct_distance, direct_tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfun::CharFn;

    #[test]
    fn rhs_vanishes_for_one_and_gaussian() {
        let cfg = SolverConfig::new(KernelSpec::singular(0.25_f64, 1.0).unwrap());
        let one = CharFn::one(3).unwrap().sample_radial(cfg.grid.clone()).unwrap();
        let rep = rhs_noncutoff(&one, &cfg.kernel, &cfg.quadrature).unwrap();
        assert!(rep.values.iter().all(|&v| v == 0.0));
        let g = CharFn::gaussian(1.0, 3).unwrap().sample_radial(cfg.grid.clone()).unwrap();
        let rep = rhs_noncutoff(&g, &cfg.kernel, &cfg.quadrature).unwrap();
        assert!(rep.values.iter().all(|v| v.abs() < 1e-7));
    }

    #[test]
    fn rhs_of_stable_profile_has_decaying_bands() {
        let cfg = SolverConfig::new(KernelSpec::singular(0.25_f64, 1.0).unwrap());
        let p = CharFn::stable(1.0, 3).unwrap().sample_radial(cfg.grid.clone()).unwrap();
        let rep = rhs_noncutoff(&p, &cfg.kernel, &cfg.quadrature).unwrap();
        assert!(rep.values.iter().all(|v| v.is_finite()));
        let q = rep.decay_ratio.unwrap();
        // contributions scale like θ^{α-2s} per band: 0.7^{0.5}
        assert!(q < 0.9, "{q}");
    }

    #[test]
    fn rough_data_are_rejected() {
        let cfg = SolverConfig::new(KernelSpec::singular(0.75_f64, 1.0).unwrap());
        let p = CharFn::stable(1.0, 3).unwrap().sample_radial(cfg.grid.clone()).unwrap();
        assert!(matches!(rhs_noncutoff(&p, &cfg.kernel, &cfg.quadrature), Err(Error::Divergence(_))));
    }

    #[test]
    fn bounded_kernels_give_identical_levels() {
        let cfg = SolverConfig::new(KernelSpec::constant(1.0_f64).unwrap())
            .with_diagnostics(false)
            .with_horizon(0.1)
            .with_dt(0.05);
        let p = CharFn::uniform_sphere(1.0, 3).unwrap().sample_radial(cfg.grid.clone()).unwrap();
        let st = cutoff_sequence_study(&p, &cfg, &[2.0, 4.0], false).unwrap();
        assert_eq!(st.successive, vec![0.0]);
    }
}
