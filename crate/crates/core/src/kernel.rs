//! Angular collision kernels `b(cos θ)`, their cutoff approximations and the
//! angular constants γ₂, γ_α and λ_α.
//!
//! Every angular integral runs over θ ∈ [θ_min, π/2] on a geometrically graded
//! Gauss rule; the missing piece [0, θ_min] is estimated from the local power
//! law of the integrand. Divergent constants are reported as values, not
//! errors.

use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::scalar::Real;

/// Shape of the uncut angular kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily<T> {
    /// `b ≡ b₀`.
    Constant { b0: T },
    /// `b(cos θ) = K (sin θ/2)^{-2-2s}`, which behaves like `K 2^{2+2s} θ^{-2-2s}` at 0.
    Singular { s: T, k: T },
}

/// Angular kernel with an optional cap `b_n = min{b, n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<T> {
    pub family: KernelFamily<T>,
    pub cutoff: Option<T>,
}

impl<T: Real> KernelSpec<T> {
    pub fn constant(b0: T) -> Result<Self> {
        if !(b0 > T::zero()) || !b0.is_finite() {
            return Err(Error::Config(format!("constant kernel needs b0 > 0, got {b0}")));
        }
        Ok(Self { family: KernelFamily::Constant { b0 }, cutoff: None })
    }

    pub fn singular(s: T, k: T) -> Result<Self> {
        if !(s > T::zero() && s < T::one()) {
            return Err(Error::Config(format!("singular kernel needs s in (0,1), got {s}")));
        }
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::Config(format!("singular kernel needs K > 0, got {k}")));
        }
        Ok(Self { family: KernelFamily::Singular { s, k }, cutoff: None })
    }

    /// Same family capped at level `n`.
    pub fn with_cutoff(self, n: T) -> Result<Self> {
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::Config(format!("cutoff level must be positive, got {n}")));
        }
        Ok(Self { cutoff: Some(n), ..self })
    }

    /// The uncut kernel.
    pub fn uncut(self) -> Self {
        Self { cutoff: None, ..self }
    }

    /// Singularity order `s`, zero for the constant family.
    pub fn singularity(&self) -> T {
        match self.family {
            KernelFamily::Constant { .. } => T::zero(),
            KernelFamily::Singular { s, .. } => s,
        }
    }

    /// Whether γ₂ is finite.
    pub fn is_integrable(&self) -> bool {
        self.cutoff.is_some() || matches!(self.family, KernelFamily::Constant { .. })
    }

    /// `b(cos θ)` for θ ∈ (0, π/2].
    pub fn eval(&self, theta: T) -> Result<T> {
        if !(theta > T::zero() && theta <= T::FRAC_PI_2() * (T::one() + T::epsilon())) {
            return Err(Error::Domain(format!("theta = {theta} outside (0, pi/2]")));
        }
        Ok(self.eval_unchecked(theta))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, theta: T) -> T {
        let raw = match self.family {
            KernelFamily::Constant { b0 } => b0,
            KernelFamily::Singular { s, k } => {
                k * (theta * T::lit(0.5)).sin().powf(-(T::lit(2.0) + T::lit(2.0) * s))
            }
        };
        match self.cutoff {
            Some(n) => raw.min(n),
            None => raw,
        }
    }

    /// Angle where the cap starts to bind, if it does inside (0, π/2).
    pub fn cap_angle(&self) -> Option<T> {
        let n = self.cutoff?;
        match self.family {
            KernelFamily::Constant { .. } => None,
            KernelFamily::Singular { s, k } => {
                let x = (k / n).powf(T::one() / (T::lit(2.0) + T::lit(2.0) * s));
                if x >= T::FRAC_PI_4().sin() {
                    None
                } else {
                    Some(T::lit(2.0) * x.asin())
                }
            }
        }
    }

    /// Power-law exponent of `b` just above `theta` (0 where the cap binds).
    fn local_order(&self, theta: T) -> T {
        match (self.family, self.cutoff) {
            (KernelFamily::Constant { .. }, _) => T::zero(),
            (KernelFamily::Singular { s, .. }, None) => -(T::lit(2.0) + T::lit(2.0) * s),
            (KernelFamily::Singular { s, .. }, Some(_)) => match self.cap_angle() {
                Some(tc) if theta <= tc => T::zero(),
                Some(_) => -(T::lit(2.0) + T::lit(2.0) * s),
                None => T::zero(),
            },
        }
    }
}

impl<T: Real> fmt::Display for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::Constant { b0 } => write!(f, "constant(b0={b0})")?,
            KernelFamily::Singular { s, k } => write!(f, "singular(s={s}, K={k})")?,
        }
        if let Some(n) = self.cutoff {
            write!(f, " cut at {n}")?;
        }
        Ok(())
    }
}

/// Composite Gauss rule on geometrically graded panels of [θ_min, π/2].
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature<T> {
    pub theta_min: T,
    pub grading: T,
    pub nodes_per_panel: usize,
    /// Panel endpoints `(lo, hi)` ordered from π/2 down to θ_min.
    pub panels: Vec<(T, T)>,
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    /// Relative tolerance for the refinement check of the angular constants.
    pub tolerance: T,
}

impl<T: Real> AngularQuadrature<T> {
    /// Panels `[π/2 q^{k+1}, π/2 q^k]` for k < panel_count - 1, the last one
    /// closing at θ_min.
    pub fn build(theta_min: T, panel_count: usize, nodes_per_panel: usize, grading: T) -> Result<Self> {
        if !(theta_min > T::zero() && theta_min < T::FRAC_PI_2()) {
            return Err(Error::Config(format!("theta_min = {theta_min} outside (0, pi/2)")));
        }
        if !(grading > T::zero() && grading < T::one()) {
            return Err(Error::Config(format!("grading q = {grading} outside (0, 1)")));
        }
        if panel_count == 0 || nodes_per_panel == 0 {
            return Err(Error::Config("panel and node counts must be at least 1".into()));
        }
        let last_inner = T::FRAC_PI_2() * grading.powi(panel_count as i32 - 1);
        if panel_count > 1 && last_inner <= theta_min {
            return Err(Error::Config(format!(
                "{panel_count} panels with q = {grading} collapse below theta_min = {theta_min}"
            )));
        }
        let mut breaks: Vec<T> = (0..panel_count).map(|k| T::FRAC_PI_2() * grading.powi(k as i32)).collect();
        breaks.push(theta_min);
        Ok(Self::from_breaks(&breaks, theta_min, grading, nodes_per_panel))
    }

    /// Picks the panel count so that the geometric breakpoints reach θ_min.
    pub fn graded(theta_min: T, grading: T, nodes_per_panel: usize) -> Result<Self> {
        if !(theta_min > T::zero() && theta_min < T::FRAC_PI_2()) || !(grading > T::zero() && grading < T::one()) {
            return Err(Error::Config(format!("bad graded rule (theta_min={theta_min}, q={grading})")));
        }
        let ratio = (theta_min / T::FRAC_PI_2()).ln() / grading.ln();
        let mut count = ratio.ceil().to_usize().unwrap_or(1).max(1);
        while count > 1 && T::FRAC_PI_2() * grading.powi(count as i32 - 1) <= theta_min {
            count -= 1;
        }
        Self::build(theta_min, count, nodes_per_panel, grading)
    }

    fn from_breaks(breaks: &[T], theta_min: T, grading: T, nodes_per_panel: usize) -> Self {
        let (x, w) = gauss_legendre::<T>(nodes_per_panel);
        let mut panels = Vec::with_capacity(breaks.len());
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for pair in breaks.windows(2) {
            let (hi, lo) = (pair[0], pair[1]);
            panels.push((lo, hi));
            push_panel(&mut nodes, &mut weights, &x, &w, lo, hi);
        }
        let tolerance = T::lit(1e-7).max(T::epsilon() * T::lit(1e3));
        Self { theta_min, grading, nodes_per_panel, panels, nodes, weights, tolerance }
    }

    /// Splits every panel wider than `max_width` into equal pieces.
    pub fn with_max_width(&self, max_width: T) -> Self {
        let (x, w) = gauss_legendre::<T>(self.nodes_per_panel);
        let mut out = Self { panels: Vec::new(), nodes: Vec::new(), weights: Vec::new(), ..self.clone() };
        for &(lo, hi) in &self.panels {
            let pieces = ((hi - lo) / max_width).ceil().to_usize().unwrap_or(1).max(1);
            let h = (hi - lo) / T::from_count(pieces);
            for j in (0..pieces).rev() {
                let a = lo + h * T::from_count(j);
                let b = if j + 1 == pieces { hi } else { lo + h * T::from_count(j + 1) };
                out.panels.push((a, b));
                push_panel(&mut out.nodes, &mut out.weights, &x, &w, a, b);
            }
        }
        out
    }

    /// Twice as many panels over the same range (q → √q).
    pub fn refined(&self) -> Self {
        let (x, w) = gauss_legendre::<T>(self.nodes_per_panel);
        let mut out = Self { panels: Vec::new(), nodes: Vec::new(), weights: Vec::new(), ..self.clone() };
        out.grading = self.grading.sqrt();
        for &(lo, hi) in &self.panels {
            let mid = (lo * hi).sqrt();
            for (a, b) in [(mid, hi), (lo, mid)] {
                out.panels.push((a, b));
                push_panel(&mut out.nodes, &mut out.weights, &x, &w, a, b);
            }
        }
        out
    }

    /// Nodes and weights with any panel containing one of `kinks` split there.
    pub fn split_at(&self, kinks: &[T]) -> (Vec<T>, Vec<T>) {
        let (x, w) = gauss_legendre::<T>(self.nodes_per_panel);
        let mut nodes = Vec::with_capacity(self.nodes.len() + kinks.len() * self.nodes_per_panel);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for &(lo, hi) in &self.panels {
            let mut cuts: Vec<T> = kinks.iter().copied().filter(|&k| k > lo && k < hi).collect();
            cuts.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut upper = hi;
            for c in cuts {
                push_panel(&mut nodes, &mut weights, &x, &w, c, upper);
                upper = c;
            }
            push_panel(&mut nodes, &mut weights, &x, &w, lo, upper);
        }
        (nodes, weights)
    }

    /// Nodes and weights adapted to `kernel` (split at the cap angle).
    pub fn rule_for(&self, kernel: &KernelSpec<T>) -> (Vec<T>, Vec<T>) {
        match kernel.cap_angle() {
            Some(tc) => self.split_at(&[tc]),
            None => (self.nodes.clone(), self.weights.clone()),
        }
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn push_panel<T: Real>(nodes: &mut Vec<T>, weights: &mut Vec<T>, x: &[T], w: &[T], lo: T, hi: T) {
    let half = (hi - lo) * T::lit(0.5);
    let mid = (hi + lo) * T::lit(0.5);
    for (&xi, &wi) in x.iter().zip(w) {
        nodes.push(mid + half * xi);
        weights.push(half * wi);
    }
}

/// Value of an angular constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelConstant<T> {
    Finite { value: T, est_error: T },
    Divergent,
}

impl<T: Real> KernelConstant<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            Self::Finite { value, .. } => Some(value),
            Self::Divergent => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Self::Divergent)
    }

    /// The finite value, or a divergence error naming `what`.
    pub fn finite(&self, what: &str) -> Result<T> {
        self.value().ok_or_else(|| Error::Divergence(format!("{what} is infinite for this kernel")))
    }
}

/// Angular weight multiplying `b sin θ` in each constant.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Weight<T> {
    One,
    /// cos^α(θ/2) + sin^α(θ/2)
    Gamma(T),
    /// cos^α(θ/2) + sin^α(θ/2) - 1
    Lambda(T),
}

impl<T: Real> Weight<T> {
    fn eval(&self, theta: T) -> T {
        match *self {
            Self::One => T::one(),
            Self::Gamma(a) => {
                let u = theta * T::lit(0.5);
                u.cos().powf(a) + u.sin().powf(a)
            }
            Self::Lambda(a) => lambda_weight(a, theta),
        }
    }

    /// Power-law order at θ → 0, or None when the weight vanishes identically.
    fn order(&self) -> Option<T> {
        match *self {
            Self::One | Self::Gamma(_) => Some(T::zero()),
            Self::Lambda(a) if a == T::lit(2.0) => None,
            Self::Lambda(a) => Some(a.min(T::lit(2.0))),
        }
    }
}

/// `cos^α(θ/2) + sin^α(θ/2) - 1` evaluated without cancellation.
pub fn lambda_weight<T: Real>(alpha: T, theta: T) -> T {
    let u = theta * T::lit(0.5);
    let su = u.sin();
    // cos^α(u) - 1 = expm1(α/2 · ln(1 - sin²u))
    let cos_part = (alpha * T::lit(0.5) * (-su * su).ln_1p()).exp_m1();
    cos_part + su.powf(alpha)
}

fn constant<T: Real>(spec: &KernelSpec<T>, quad: &AngularQuadrature<T>, weight: Weight<T>) -> Result<KernelConstant<T>> {
    let Some(w_order) = weight.order() else {
        // Weight vanishes identically; the quadrature still runs so rounding is visible.
        let (x, w) = quad.rule_for(spec);
        let v = integrate_rule(spec, &x, &w, weight);
        return Ok(KernelConstant::Finite { value: v, est_error: v.abs() });
    };
    let tm = quad.theta_min;
    let order = spec.local_order(tm) + w_order + T::one();
    let uncut_order = match spec.family {
        KernelFamily::Singular { s, .. } if spec.cutoff.is_none() => -(T::lit(2.0) + T::lit(2.0) * s) + w_order + T::one(),
        _ => order,
    };
    if uncut_order <= -T::one() {
        return Ok(KernelConstant::Divergent);
    }
    let (x, w) = quad.rule_for(spec);
    let coarse = integrate_rule(spec, &x, &w, weight);
    let fine_quad = quad.refined();
    let (xf, wf) = fine_quad.rule_for(spec);
    let fine = integrate_rule(spec, &xf, &wf, weight);
    let head = T::lit(2.0) * T::PI() * spec.eval_unchecked(tm) * weight.eval(tm) * tm.sin() * tm / (order + T::one());
    let value = fine + head;
    // The head uses the leading power law; the next term is smaller by θ_min^κ.
    let kappa = match weight {
        Weight::Lambda(a) => T::lit(2.0) - a,
        _ => T::lit(2.0),
    };
    let est_error = (fine - coarse).abs() + head.abs() * tm.powf(kappa);
    if (fine - coarse).abs() > quad.tolerance * value.abs().max(T::one()) {
        return Err(Error::Accuracy(format!(
            "angular constant changes by {:e} under panel refinement",
            (fine - coarse).abs()
        )));
    }
    Ok(KernelConstant::Finite { value, est_error })
}

fn integrate_rule<T: Real>(spec: &KernelSpec<T>, x: &[T], w: &[T], weight: Weight<T>) -> T {
    let s: T = x
        .iter()
        .zip(w)
        .map(|(&t, &wt)| wt * spec.eval_unchecked(t) * weight.eval(t) * t.sin())
        .sum();
    T::lit(2.0) * T::PI() * s
}

/// γ₂ = 2π ∫₀^{π/2} b(cos θ) sin θ dθ.
pub fn gamma2<T: Real>(spec: &KernelSpec<T>, quad: &AngularQuadrature<T>) -> Result<KernelConstant<T>> {
    constant(spec, quad, Weight::One)
}

/// γ_α = 2π ∫₀^{π/2} b(cos θ)(cos^α θ/2 + sin^α θ/2) sin θ dθ.
pub fn gamma_alpha<T: Real>(spec: &KernelSpec<T>, alpha: T, quad: &AngularQuadrature<T>) -> Result<KernelConstant<T>> {
    if !(alpha > T::zero() && alpha <= T::lit(2.0)) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, 2]")));
    }
    constant(spec, quad, Weight::Gamma(alpha))
}

/// λ_α = 2π ∫₀^{π/2} b(cos θ)(cos^α θ/2 + sin^α θ/2 − 1) sin θ dθ.
pub fn lambda_alpha<T: Real>(spec: &KernelSpec<T>, alpha: T, quad: &AngularQuadrature<T>) -> Result<KernelConstant<T>> {
    if !(alpha > T::zero() && alpha <= T::lit(2.0)) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, 2]")));
    }
    constant(spec, quad, Weight::Lambda(alpha))
}

/// ∫₀¹ (1−τ)^{α/2} b(τ) dτ, the kernel factor bounding the collision term in the ℳ^α norm.
pub fn moment_kernel_factor<T: Real>(spec: &KernelSpec<T>, alpha: T, quad: &AngularQuadrature<T>) -> Result<KernelConstant<T>> {
    let s = spec.singularity();
    if spec.cutoff.is_none() && matches!(spec.family, KernelFamily::Singular { .. }) && alpha <= T::lit(2.0) * s {
        return Ok(KernelConstant::Divergent);
    }
    let (x, w) = quad.rule_for(spec);
    let f = |t: T| {
        let h = (t * T::lit(0.5)).sin();
        (T::lit(2.0) * h * h).powf(alpha * T::lit(0.5)) * spec.eval_unchecked(t) * t.sin()
    };
    let v: T = x.iter().zip(&w).map(|(&t, &wt)| wt * f(t)).sum();
    let (xf, wf) = quad.refined().rule_for(spec);
    let vf: T = xf.iter().zip(&wf).map(|(&t, &wt)| wt * f(t)).sum();
    Ok(KernelConstant::Finite { value: vf, est_error: (vf - v).abs() })
}
