//! Experiment configuration: a JSON document with strict keys and
//! validated ranges.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use kinetic_fourier::charfun::{Atom, CharFn, DiscreteMeasure, RadialCharFn, RadialGrid};
use kinetic_fourier::kernel::{AngularQuadrature, KernelSpec};
use kinetic_fourier::solver::{Integrator, SolverConfig};

use crate::experiments::EXPERIMENTS;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    Constant {
        #[serde(default = "one")]
        b0: f64,
    },
    Singular {
        s: f64,
        #[serde(default = "one")]
        k: f64,
        /// Cap b_n = min{b, n}.
        #[serde(default)]
        cutoff: Option<f64>,
    },
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self::Constant { b0: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    One,
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
    },
    Stable {
        alpha: f64,
    },
    UniformSphere {
        #[serde(default = "one")]
        r0: f64,
    },
    /// Atoms as `[v_1, .., v_d, weight]`.
    Discrete {
        atoms: Vec<Vec<f64>>,
    },
    /// Seeded mean-zero measures in R³ (moments experiment only).
    Random {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_max_atoms")]
        max_atoms: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// A radial profile in `r,psi` CSV form.
    Profile {
        path: PathBuf,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self::Gaussian { sigma: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_intervals")]
    pub intervals: usize,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { intervals: default_intervals(), r_max: default_r_max() }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_theta_min")]
    pub theta_min: f64,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_nodes")]
    pub nodes_per_panel: usize,
    #[serde(default = "default_max_width")]
    pub max_width: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            theta_min: default_theta_min(),
            grading: default_grading(),
            nodes_per_panel: default_nodes(),
            max_width: default_max_width(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    DuhamelPicard,
    ExponentialEuler,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    /// Second datum for norms and stability runs; defaults to φ ≡ 1 or a copy.
    #[serde(default)]
    pub comparison: Option<InitialConfig>,
    #[serde(default = "one")]
    pub alpha: f64,
    /// Sup-norm index; defaults to α.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_alpha_prime")]
    pub alpha_prime: f64,
    /// Indices tabulated by `constants` and `moments`.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    #[serde(default)]
    pub integrator: Option<IntegratorName>,
    /// Repeat exponential Euler runs at Δt/2 to estimate the integrator error.
    #[serde(default = "yes")]
    pub richardson: bool,
    /// Cutoff levels n of the cutoff study.
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    /// Also run the uncut kernel in the cutoff study.
    #[serde(default = "yes")]
    pub direct: bool,
    /// Envelope limit for verify-stability.
    #[serde(default = "default_limit")]
    pub limit: f64,
    /// Radius threshold of the smoothing tail check.
    #[serde(default = "default_tail_radius")]
    pub tail_radius: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_samples() -> usize {
    50
}
fn default_max_atoms() -> usize {
    8
}
fn default_radius() -> f64 {
    10.0
}
fn default_intervals() -> usize {
    512
}
fn default_r_max() -> f64 {
    64.0
}
fn default_theta_min() -> f64 {
    1e-8
}
fn default_grading() -> f64 {
    0.7
}
fn default_nodes() -> usize {
    8
}
fn default_max_width() -> f64 {
    0.05
}
fn default_alpha_prime() -> f64 {
    0.5
}
fn default_alphas() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0]
}
fn default_dt() -> f64 {
    0.05
}
fn default_levels() -> Vec<f64> {
    vec![4.0, 16.0, 64.0, 256.0]
}
fn default_limit() -> f64 {
    1.05
}
fn default_tail_radius() -> f64 {
    20.0
}

/// Line of the first `"key":` found after the keys in `path` (each searched
/// from where the previous one was found). Falls back to line 1.
pub fn line_of(text: &str, path: &[&str]) -> usize {
    let mut from = 0;
    for key in path {
        let needle = format!("\"{key}\"");
        let mut found = None;
        let mut start = from;
        while let Some(pos) = text[start..].find(&needle) {
            let at = start + pos;
            let rest = text[at + needle.len()..].trim_start();
            if rest.starts_with(':') {
                found = Some(at);
                break;
            }
            start = at + needle.len();
        }
        match found {
            Some(at) => from = at,
            None => break,
        }
    }
    text[..from].matches('\n').count() + 1
}

impl ExperimentConfig {
    /// Parses and validates `text`; every error carries a line number.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError { line: e.line().max(1), msg: e.to_string() })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    fn validate(&self, text: &str) -> Result<(), ConfigError> {
        let fail = |path: &[&str], msg: String| Err(ConfigError { line: line_of(text, path), msg });
        if !EXPERIMENTS.iter().any(|(name, _)| *name == self.experiment) {
            let names: Vec<&str> = EXPERIMENTS.iter().map(|(n, _)| *n).collect();
            return fail(&["experiment"], format!("unknown experiment {:?}; expected one of {}", self.experiment, names.join(", ")));
        }
        match self.kernel {
            KernelConfig::Constant { b0 } if !(b0 > 0.0 && b0.is_finite()) => {
                return fail(&["kernel", "b0"], format!("b0 = {b0} must be positive"));
            }
            KernelConfig::Singular { s, k, cutoff } => {
                if !(s > 0.0 && s < 1.0) {
                    return fail(&["kernel", "s"], format!("s = {s} outside (0, 1)"));
                }
                if !(k > 0.0 && k.is_finite()) {
                    return fail(&["kernel", "k"], format!("k = {k} must be positive"));
                }
                if let Some(n) = cutoff {
                    if !(n > 0.0 && n.is_finite()) {
                        return fail(&["kernel", "cutoff"], format!("cutoff = {n} must be positive"));
                    }
                }
            }
            _ => {}
        }
        validate_initial(&self.initial, "initial", text)?;
        if let Some(c) = &self.comparison {
            validate_initial(c, "comparison", text)?;
            if matches!(c, InitialConfig::Random { .. }) {
                return fail(&["comparison", "family"], "a random family is only accepted as the initial datum".into());
            }
        }
        if matches!(self.initial, InitialConfig::Random { .. }) && self.experiment != "moments" {
            return fail(&["initial", "family"], "the random family is only accepted by the moments experiment".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return fail(&["alpha"], format!("alpha = {} outside (0, 2]", self.alpha));
        }
        let beta = self.beta();
        if !(beta > 0.0 && beta <= self.alpha) {
            return fail(&["beta"], format!("beta = {beta} outside (0, alpha]"));
        }
        if !(self.alpha_prime > 0.0 && self.alpha_prime < self.alpha) {
            return fail(&["alpha_prime"], format!("alpha_prime = {} outside (0, alpha)", self.alpha_prime));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a <= 2.0)) {
            return fail(&["alphas"], "alphas must be a non-empty list of values in (0, 2]".into());
        }
        if !(8..=65536).contains(&self.grid.intervals) {
            return fail(&["grid", "intervals"], format!("intervals = {} outside [8, 65536]", self.grid.intervals));
        }
        if !(self.grid.r_max > 1.0 && self.grid.r_max <= 1e6) {
            return fail(&["grid", "r_max"], format!("r_max = {} outside (1, 1e6]", self.grid.r_max));
        }
        let q = &self.quadrature;
        if !(q.theta_min > 0.0 && q.theta_min < 0.1) {
            return fail(&["quadrature", "theta_min"], format!("theta_min = {} outside (0, 0.1)", q.theta_min));
        }
        if !(q.grading > 0.0 && q.grading < 1.0) {
            return fail(&["quadrature", "grading"], format!("grading = {} outside (0, 1)", q.grading));
        }
        if !(1..=64).contains(&q.nodes_per_panel) {
            return fail(&["quadrature", "nodes_per_panel"], format!("nodes_per_panel = {} outside [1, 64]", q.nodes_per_panel));
        }
        if !(q.max_width > 0.0 && q.max_width <= std::f64::consts::FRAC_PI_2) {
            return fail(&["quadrature", "max_width"], format!("max_width = {} outside (0, pi/2]", q.max_width));
        }
        if !(self.horizon >= 0.0 && self.horizon <= 100.0) {
            return fail(&["horizon"], format!("horizon = {} outside [0, 100]", self.horizon));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return fail(&["dt"], format!("dt = {} outside (0, 1]", self.dt));
        }
        if let Some(e) = self.snapshot_every {
            if !(e > 0.0) {
                return fail(&["snapshot_every"], format!("snapshot_every = {e} must be positive"));
            }
        }
        if let Err(e) = self.solver(KernelSpec::constant(1.0).expect("unit kernel")).schedule() {
            let key = if self.snapshot_every.is_some() { "snapshot_every" } else { "dt" };
            return fail(&[key], e.to_string());
        }
        if self.integrator == Some(IntegratorName::DuhamelPicard) && !self.kernel_spec().map(|k| k.is_integrable()).unwrap_or(true) {
            return fail(&["integrator"], "the Duhamel integrator needs an integrable (cut-off) kernel".into());
        }
        if self.levels.is_empty() || self.levels.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
            return fail(&["levels"], "levels must be a non-empty list of positive numbers".into());
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return fail(&["levels"], "levels must be increasing".into());
        }
        if !(self.limit >= 1.0) {
            return fail(&["limit"], format!("limit = {} must be at least 1", self.limit));
        }
        if !(self.tail_radius > 0.0 && self.tail_radius < self.grid.r_max) {
            return fail(&["tail_radius"], format!("tail_radius = {} outside (0, r_max)", self.tail_radius));
        }
        if let Err(e) = self.kernel_spec() {
            return fail(&["kernel"], e.to_string());
        }
        if let Err(e) = self.angular_rule() {
            return fail(&["quadrature"], e.to_string());
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(self.alpha)
    }

    pub fn kernel_spec(&self) -> kinetic_fourier::Result<KernelSpec<f64>> {
        match self.kernel {
            KernelConfig::Constant { b0 } => KernelSpec::constant(b0),
            KernelConfig::Singular { s, k, cutoff } => {
                let spec = KernelSpec::singular(s, k)?;
                match cutoff {
                    Some(n) => spec.with_cutoff(n),
                    None => Ok(spec),
                }
            }
        }
    }

    pub fn angular_rule(&self) -> kinetic_fourier::Result<AngularQuadrature<f64>> {
        let q = &self.quadrature;
        Ok(AngularQuadrature::graded(q.theta_min, q.grading, q.nodes_per_panel)?.with_max_width(q.max_width))
    }

    pub fn radial_grid(&self) -> kinetic_fourier::Result<RadialGrid<f64>> {
        RadialGrid::mixed(self.grid.intervals, self.grid.r_max)
    }

    fn solver(&self, kernel: KernelSpec<f64>) -> SolverConfig<f64> {
        let mut cfg = SolverConfig::new(kernel)
            .with_alpha(self.alpha)
            .with_horizon(self.horizon)
            .with_dt(self.dt)
            .with_richardson(self.richardson);
        if let Some(e) = self.snapshot_every {
            cfg = cfg.with_snapshot_every(e);
        }
        match self.integrator {
            Some(IntegratorName::DuhamelPicard) => cfg.with_integrator(Integrator::DuhamelPicard),
            Some(IntegratorName::ExponentialEuler) => cfg.with_integrator(Integrator::ExponentialEuler),
            None => cfg,
        }
    }

    pub fn solver_config(&self) -> kinetic_fourier::Result<SolverConfig<f64>> {
        Ok(self
            .solver(self.kernel_spec()?)
            .with_grid(Arc::new(self.radial_grid()?))
            .with_quadrature(self.angular_rule()?))
    }
}

fn validate_initial(init: &InitialConfig, key: &str, text: &str) -> Result<(), ConfigError> {
    let fail = |field: &str, msg: String| Err(ConfigError { line: line_of(text, &[key, field]), msg });
    match init {
        InitialConfig::Gaussian { sigma } if !(*sigma > 0.0 && sigma.is_finite()) => fail("sigma", format!("sigma = {sigma} must be positive")),
        InitialConfig::Stable { alpha } if !(*alpha > 0.0 && *alpha <= 2.0) => fail("alpha", format!("alpha = {alpha} outside (0, 2]")),
        InitialConfig::UniformSphere { r0 } if !(*r0 > 0.0 && r0.is_finite()) => fail("r0", format!("r0 = {r0} must be positive")),
        InitialConfig::Discrete { atoms } => {
            if atoms.is_empty() {
                return fail("atoms", "at least one atom is required".into());
            }
            let width = atoms[0].len();
            if !(2..=4).contains(&width) || atoms.iter().any(|a| a.len() != width) {
                return fail("atoms", "every atom must be [v_1, .., v_d, weight] with the same d in 1..=3".into());
            }
            if let Err(e) = measure_from(atoms) {
                return fail("atoms", e.to_string());
            }
            Ok(())
        }
        InitialConfig::Random { samples, max_atoms, radius } => {
            if !(1..=10_000).contains(samples) {
                return fail("samples", format!("samples = {samples} outside [1, 10000]"));
            }
            if !(2..=64).contains(max_atoms) {
                return fail("max_atoms", format!("max_atoms = {max_atoms} outside [2, 64]"));
            }
            if !(*radius > 0.0 && radius.is_finite()) {
                return fail("radius", format!("radius = {radius} must be positive"));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn measure_from(atoms: &[Vec<f64>]) -> kinetic_fourier::Result<DiscreteMeasure<f64>> {
    let d = atoms[0].len() - 1;
    let atoms = atoms
        .iter()
        .map(|a| {
            let mut v = [0.0; 3];
            v[..d].copy_from_slice(&a[..d]);
            Atom { v, w: a[d] }
        })
        .collect();
    DiscreteMeasure::new(d, atoms)
}

/// The characteristic function described by `init` (random families excluded).
pub fn char_fn(init: &InitialConfig) -> kinetic_fourier::Result<CharFn<f64>> {
    match init {
        InitialConfig::One => CharFn::one(3),
        InitialConfig::Gaussian { sigma } => CharFn::gaussian(*sigma, 3),
        InitialConfig::Stable { alpha } => CharFn::stable(*alpha, 3),
        InitialConfig::UniformSphere { r0 } => CharFn::uniform_sphere(*r0, 3),
        InitialConfig::Discrete { atoms } => Ok(CharFn::discrete(measure_from(atoms)?)),
        InitialConfig::Profile { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| kinetic_fourier::Error::Config(format!("{}: {e}", path.display())))?;
            Ok(CharFn::radial(RadialCharFn::from_csv(&text)?))
        }
        InitialConfig::Random { .. } => Err(kinetic_fourier::Error::Config("random family has no single characteristic function".into())),
    }
}
