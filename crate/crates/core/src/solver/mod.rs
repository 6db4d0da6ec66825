//! Time evolution of isotropic characteristic functions.
//!
//! Cutoff kernels use the Duhamel fixed point
//! ψ(t) = ψ₀ e^{-γ₂t} + ∫₀ᵗ e^{-γ₂(t-τ)} 𝒢(ψ(τ)) dτ solved by Picard iteration
//! step by step; non-cutoff kernels use exponential Euler on the split
//! collision term Aψ + B.

mod collision;
mod duhamel;
mod noncutoff;
mod verify;

use std::fmt::Write as _;
use std::sync::Arc;

pub use collision::Stencil;
pub use duhamel::{duhamel_evolve, product_weights};
pub use noncutoff::{cutoff_sequence_study, evolve_noncutoff, rhs_noncutoff, RhsReport, SequenceStudy};
pub use verify::{
    rhs_mnorm_bound, verify_continuity, verify_stability, ContinuityReport, MnormBound, StabilityReport,
};

use crate::charfun::{CharFn, RadialCharFn, RadialGrid};
use crate::error::{Error, Result};
use crate::kernel::{AngularQuadrature, KernelSpec};
use crate::metric::{m_norm, moment_upper, sup_norm};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Picard iteration of the Duhamel map (integrable kernels only).
    DuhamelPicard,
    /// Exponential Euler on the split collision term.
    ExponentialEuler,
}

/// Angular rule used by the solver: geometric panels with q = 0.7 down to
/// θ = 1e-8, 8 Gauss nodes each, no panel wider than 0.05.
pub fn default_quadrature<T: Real>() -> AngularQuadrature<T> {
    AngularQuadrature::graded(T::lit(1e-8), T::lit(0.7), 8)
        .expect("default angular rule is valid")
        .with_max_width(T::lit(0.05))
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    pub kernel: KernelSpec<T>,
    /// Moment / norm index used by diagnostics and the contraction guard.
    pub alpha: T,
    pub grid: Arc<RadialGrid<T>>,
    pub quadrature: AngularQuadrature<T>,
    pub horizon: T,
    pub dt: T,
    /// Interval between stored snapshots, a multiple of `dt`.
    pub snapshot_every: T,
    pub picard_tol: T,
    pub picard_max_iter: usize,
    pub integrator: Integrator,
    /// Compute norm and moment diagnostics for every snapshot.
    pub diagnostics: bool,
    /// Exponential Euler only: repeat the run at dt/2 and report the
    /// difference as the integrator tolerance.
    pub richardson: bool,
}

impl<T: Real> SolverConfig<T> {
    /// Defaults: α = 1, 512-interval grid to r = 64, T = 1, Δt = 0.05.
    /// Integrable kernels get the Duhamel integrator, others exponential Euler.
    pub fn new(kernel: KernelSpec<T>) -> Self {
        let integrator = if kernel.is_integrable() { Integrator::DuhamelPicard } else { Integrator::ExponentialEuler };
        let dt = T::lit(0.05);
        Self {
            kernel,
            alpha: T::one(),
            grid: Arc::new(RadialGrid::standard()),
            quadrature: default_quadrature(),
            horizon: T::one(),
            dt,
            snapshot_every: dt,
            picard_tol: T::lit(1e-13).max(T::epsilon() * T::lit(100.0)),
            picard_max_iter: 60,
            integrator,
            diagnostics: true,
            richardson: true,
        }
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_horizon(mut self, horizon: T) -> Self {
        self.horizon = horizon;
        self
    }

    /// Sets Δt and the snapshot interval to the same value.
    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self.snapshot_every = dt;
        self
    }

    pub fn with_snapshot_every(mut self, every: T) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn with_grid(mut self, grid: Arc<RadialGrid<T>>) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_quadrature(mut self, quad: AngularQuadrature<T>) -> Self {
        self.quadrature = quad;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_diagnostics(mut self, on: bool) -> Self {
        self.diagnostics = on;
        self
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        self.richardson = on;
        self
    }

    /// (number of snapshot intervals, steps per interval).
    pub fn schedule(&self) -> Result<(usize, usize)> {
        if !(self.dt > T::zero()) || !(self.horizon >= T::zero()) || !(self.snapshot_every > T::zero()) {
            return Err(Error::Config(format!(
                "need dt > 0, T >= 0, snapshot interval > 0 (dt = {}, T = {}, every = {})",
                self.dt, self.horizon, self.snapshot_every
            )));
        }
        let sub = (self.snapshot_every / self.dt).round();
        let snaps = (self.horizon / self.snapshot_every).round();
        let tol = T::lit(1e-9);
        if (sub * self.dt - self.snapshot_every).abs() > tol * self.snapshot_every
            || (snaps * self.snapshot_every - self.horizon).abs() > tol * self.horizon.max(T::one())
            || sub < T::one()
        {
            return Err(Error::Config(format!(
                "snapshot interval {} must be a multiple of dt {} and divide T {}",
                self.snapshot_every, self.dt, self.horizon
            )));
        }
        Ok((snaps.to_usize().unwrap_or(0), sub.to_usize().unwrap_or(1)))
    }

    fn check_initial(&self, psi0: &RadialCharFn<T>) -> Result<()> {
        if psi0.grid().radii() != self.grid.radii() {
            return Err(Error::Config("initial datum is not sampled on the solver grid".into()));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::lit(2.0)) {
            return Err(Error::Config(format!("alpha = {} outside (0, 2]", self.alpha)));
        }
        Ok(())
    }
}

/// Per-snapshot diagnostics against the constant solution 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<T> {
    pub t: T,
    /// ψ(t, 0)
    pub mass: T,
    pub max_modulus: T,
    pub sup_norm: Option<T>,
    pub m_norm: Option<T>,
    pub moment_upper: Option<T>,
}

impl<T: Real> Diagnostics<T> {
    pub fn compute(t: T, psi: &RadialCharFn<T>, alpha: T, full: bool) -> Result<Self> {
        let mass = psi.values()[0];
        let max_modulus = psi.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut d = Self { t, mass, max_modulus, sup_norm: None, m_norm: None, moment_upper: None };
        if !full {
            return Ok(d);
        }
        let f = CharFn::radial(psi.clone());
        let one = CharFn::one(3)?;
        let s = sup_norm(&f, &one, alpha, psi.grid())?;
        d.sup_norm = (!s.is_divergent()).then_some(s.value);
        if alpha < T::lit(2.0) {
            let r = psi.grid().radii();
            let m = m_norm(&f, &one, alpha, r[1] * T::lit(1e-3), psi.r_max())?;
            d.m_norm = m.finite("snapshot norm").ok();
            d.moment_upper = moment_upper(&f, alpha)?.finite("snapshot moment").ok();
        }
        Ok(d)
    }
}

/// Contraction record of one Duhamel step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord<T> {
    pub t: T,
    pub picard_iterations: usize,
    /// Largest measured ratio of successive Picard differences in the
    /// weighted sup norm, when measurable above the noise floor.
    pub contraction: Option<T>,
    /// γ_α Δt
    pub bound: T,
    /// Sup change of the last Picard iteration.
    pub residual: T,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub kernel: KernelSpec<T>,
    pub alpha: T,
    pub times: Vec<T>,
    pub snapshots: Vec<RadialCharFn<T>>,
    pub diagnostics: Vec<Diagnostics<T>>,
    pub steps: Vec<StepRecord<T>>,
    /// Step-halving estimate of the time-discretisation error.
    pub integrator_tolerance: Option<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &RadialCharFn<T> {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }

    /// Snapshot at time `t` (matched to 1e-9).
    pub fn at(&self, t: T) -> Option<&RadialCharFn<T>> {
        self.times.iter().position(|&s| (s - t).abs() <= T::lit(1e-9)).map(|i| &self.snapshots[i])
    }

    /// max over common snapshot times and grid nodes of |ψ − ψ̃|.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        let mut worst = T::zero();
        let mut matched = 0;
        for (t, a) in self.times.iter().zip(&self.snapshots) {
            if let Some(b) = other.at(*t) {
                if a.grid().radii() != b.grid().radii() {
                    return Err(Error::Config("trajectories use different grids".into()));
                }
                matched += 1;
                for (x, y) in a.values().iter().zip(b.values()) {
                    worst = worst.max((*x - *y).abs());
                }
            }
        }
        if matched == 0 {
            return Err(Error::Config("trajectories share no snapshot times".into()));
        }
        Ok(worst)
    }

    /// `t,r,psi` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,r,psi\n");
        for (t, s) in self.times.iter().zip(&self.snapshots) {
            for (r, v) in s.grid().radii().iter().zip(s.values()) {
                let _ = writeln!(out, "{:.10e},{:.17e},{:.17e}", t.as_f64(), r.as_f64(), v.as_f64());
            }
        }
        out
    }

    /// `t,mass,sup_norm_vs_1,m_norm_vs_1,moment_upper` rows; missing values are empty.
    pub fn diagnostics_csv(&self) -> String {
        let opt = |v: Option<T>| v.map(|x| format!("{:.17e}", x.as_f64())).unwrap_or_default();
        let mut out = String::from("t,mass,sup_norm_vs_1,m_norm_vs_1,moment_upper\n");
        for d in &self.diagnostics {
            let _ = writeln!(
                out,
                "{:.10e},{:.17e},{},{},{}",
                d.t.as_f64(),
                d.mass.as_f64(),
                opt(d.sup_norm),
                opt(d.m_norm),
                opt(d.moment_upper)
            );
        }
        out
    }
}

/// Runs the integrator selected in `cfg`.
pub fn evolve<T: Real>(psi0: &RadialCharFn<T>, cfg: &SolverConfig<T>) -> Result<Trajectory<T>> {
    match cfg.integrator {
        Integrator::DuhamelPicard => duhamel_evolve(psi0, cfg),
        Integrator::ExponentialEuler => evolve_noncutoff(psi0, cfg),
    }
}
