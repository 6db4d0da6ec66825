//! Fourier-space solver and metric toolkit for the spatially homogeneous
//! Boltzmann equation with Maxwellian molecules.
//!
//! Probability measures are handled through their characteristic functions,
//! so measure-valued and infinite-energy data need no special treatment.
//! Everything is generic over the scalar type; the aliases below fix `f64`
//! (and `f32` for a few lightweight types).

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod charfun;
pub mod error;
pub mod kernel;
pub mod metric;
pub mod physical;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub type KernelSpecF64 = kernel::KernelSpec<f64>;
pub type KernelSpecF32 = kernel::KernelSpec<f32>;
pub type AngularQuadratureF64 = kernel::AngularQuadrature<f64>;
pub type CharFnF64 = charfun::CharFn<f64>;
pub type CharFnF32 = charfun::CharFn<f32>;
pub type DiscreteMeasureF64 = charfun::DiscreteMeasure<f64>;
pub type RadialGridF64 = charfun::RadialGrid<f64>;
pub type RadialCharFnF64 = charfun::RadialCharFn<f64>;
pub type NormResultF64 = metric::NormResult<f64>;
pub type SolverConfigF64 = solver::SolverConfig<f64>;
pub type TrajectoryF64 = solver::Trajectory<f64>;
pub type DensityProfileF64 = physical::DensityProfile<f64>;
