//! Radial grids and sampled isotropic characteristic functions ψ(r) = φ(|ξ|).
//!
//! Off-grid values come from a cubic Hermite interpolant whose node slopes are
//! five-point finite differences passed through a Hyman monotonicity filter,
//! so monotone runs of data stay monotone. Interpolated values are clamped to
//! [-1, 1].
//!
//! Profiles that are smooth at the origin (fitted Hölder exponent near 2) are
//! interpolated in u = r² on the cells below r = 1: an even smooth ψ is a
//! smooth function of r², so the r⁴ and higher terms that a cubic in r cannot
//! follow on the first cells are resolved.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Strictly increasing radii starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    r: Vec<T>,
    /// Five-point first-derivative stencils: (first index, weights).
    slope_stencils: Vec<(usize, [T; 5])>,
    /// Number of leading cells inside r ≤ 1.
    even_cells: usize,
    /// Five-point d/d(r²) stencils on the nodes of those cells.
    even_stencils: Vec<(usize, [T; 5])>,
}

impl<T: Real> RadialGrid<T> {
    /// Linear spacing on [0, 1] (a quarter of the intervals) and logarithmic
    /// spacing on [1, r_max].
    pub fn mixed(intervals: usize, r_max: T) -> Result<Self> {
        if intervals < 8 {
            return Err(Error::Config(format!("grid needs at least 8 intervals, got {intervals}")));
        }
        if !(r_max > T::one()) {
            return Err(Error::Config(format!("grid radius must exceed 1, got {r_max}")));
        }
        let n_lin = intervals / 4;
        let n_log = intervals - n_lin;
        let mut r = Vec::with_capacity(intervals + 1);
        for i in 0..=n_lin {
            r.push(T::from_count(i) / T::from_count(n_lin));
        }
        let log_max = r_max.ln();
        for j in 1..=n_log {
            r.push((log_max * T::from_count(j) / T::from_count(n_log)).exp());
        }
        *r.last_mut().unwrap() = r_max;
        Self::from_points(r)
    }

    /// Default solver grid: 512 intervals up to r = 64.
    pub fn standard() -> Self {
        Self::mixed(512, T::lit(64.0)).expect("default grid parameters are valid")
    }

    pub fn from_points(r: Vec<T>) -> Result<Self> {
        if r.len() < 2 || r[0] != T::zero() {
            return Err(Error::Config("grid must start at 0 and have at least two points".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid radii must strictly increase".into()));
        }
        let slope_stencils = fd_stencils(&r);
        let even_cells = r.windows(2).take_while(|w| w[1] <= T::one()).count();
        let even_stencils = if even_cells >= 4 {
            let u: Vec<T> = r[..=even_cells].iter().map(|&x| x * x).collect();
            fd_stencils(&u)
        } else {
            Vec::new()
        };
        Ok(Self { r, slope_stencils, even_cells, even_stencils })
    }

    pub fn radii(&self) -> &[T] {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> T {
        *self.r.last().unwrap()
    }

    /// Interval containing `x` with local coordinates, computed so that the
    /// distance to either endpoint keeps full relative precision.
    pub fn locate(&self, x: T) -> Result<Cell<T>> {
        let r_max = self.r_max();
        if x < T::zero() || x > r_max * (T::one() + T::lit(1e-12)) || x.is_nan() {
            return Err(Error::Range { r: x.as_f64(), r_max: r_max.as_f64() });
        }
        let x = x.min(r_max);
        let k = self.r.partition_point(|&ri| ri <= x).clamp(1, self.r.len() - 1) - 1;
        let h = self.r[k + 1] - self.r[k];
        let t = (x - self.r[k]) / h;
        let u = (self.r[k + 1] - x) / h;
        Ok(Cell { k, t, u, h })
    }

    /// Same as [`locate`](Self::locate) for a point `x = r_i · c` with a
    /// known small offset `r_i - x = gap`, keeping `u` accurate when `gap` is
    /// tiny.
    pub fn locate_below(&self, i: usize, gap: T) -> Result<Cell<T>> {
        let x = self.r[i] - gap;
        let mut cell = self.locate(x)?;
        if i > 0 && gap > T::zero() && cell.k >= i {
            // x rounded back onto r_i
            cell.k = i - 1;
            cell.h = self.r[i] - self.r[i - 1];
        }
        if cell.k + 1 == i {
            cell.u = gap / cell.h;
            cell.t = T::one() - cell.u;
        }
        Ok(cell)
    }
}

/// Position of a point inside grid interval `[r_k, r_{k+1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<T> {
    pub k: usize,
    /// (x - r_k)/h
    pub t: T,
    /// (r_{k+1} - x)/h
    pub u: T,
    pub h: T,
}

impl<T: Real> Cell<T> {
    /// Hermite basis `[h00, h01, h·h10, h·h11]`.
    #[inline]
    pub fn basis(&self) -> [T; 4] {
        let (t, u, h) = (self.t, self.u, self.h);
        let two = T::lit(2.0);
        [
            (T::one() + two * t) * u * u,
            (T::one() + two * u) * t * t,
            h * t * u * u,
            -h * t * t * u,
        ]
    }
}

fn fd_stencils<T: Real>(r: &[T]) -> Vec<(usize, [T; 5])> {
    let n = r.len();
    (0..n)
        .map(|i| {
            if n < 5 {
                // two-point slopes on tiny grids
                let (a, b) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
                let w = T::one() / (r[b] - r[a]);
                let mut ws = [T::zero(); 5];
                let start = a.min(n.saturating_sub(2));
                ws[a - start] = -w;
                ws[b - start] = w;
                return (start, ws);
            }
            let start = i.saturating_sub(2).min(n - 5);
            let xs: Vec<f64> = (0..5).map(|j| r[start + j].as_f64()).collect();
            let x0 = r[i].as_f64();
            let mut ws = [T::zero(); 5];
            for j in 0..5 {
                ws[j] = T::lit(lagrange_derivative(&xs, j, x0));
            }
            (start, ws)
        })
        .collect()
}

/// d/dx of the j-th Lagrange basis polynomial on `xs`, evaluated at `x0`.
fn lagrange_derivative(xs: &[f64], j: usize, x0: f64) -> f64 {
    let denom: f64 = (0..xs.len()).filter(|&m| m != j).map(|m| xs[j] - xs[m]).product();
    let mut sum = 0.0;
    for l in 0..xs.len() {
        if l == j {
            continue;
        }
        let prod: f64 = (0..xs.len()).filter(|&m| m != j && m != l).map(|m| x0 - xs[m]).product();
        sum += prod;
    }
    sum / denom
}

/// Node slopes of the monotone cubic interpolant of `y` on `grid`.
pub fn monotone_slopes<T: Real>(grid: &RadialGrid<T>, y: &[T]) -> Vec<T> {
    let r = &grid.r;
    let n = r.len();
    let secant: Vec<T> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (r[k + 1] - r[k])).collect();
    let three = T::lit(3.0);
    (0..n)
        .map(|i| {
            let (start, ws) = &grid.slope_stencils[i];
            let mut d = T::zero();
            for j in 0..5.min(n) {
                d = d + ws[j] * (y[start + j] - y[i]);
            }
            let left = if i > 0 { Some(secant[i - 1]) } else { None };
            let right = if i + 1 < n { Some(secant[i]) } else { None };
            match (left, right) {
                (Some(a), Some(b)) if a * b > T::zero() => limit(d, a.signum(), three * a.abs().min(b.abs())),
                (Some(a), Some(b)) if a == T::zero() && b == T::zero() => T::zero(),
                (None, Some(b)) | (Some(b), None) => {
                    if b == T::zero() {
                        T::zero()
                    } else {
                        limit(d, b.signum(), three * b.abs())
                    }
                }
                _ => d,
            }
        })
        .collect()
}

#[inline]
fn limit<T: Real>(d: T, sign: T, cap: T) -> T {
    if d * sign <= T::zero() {
        T::zero()
    } else {
        sign * (d * sign).min(cap)
    }
}

/// Sampled isotropic characteristic function on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialCharFn<T> {
    grid: Arc<RadialGrid<T>>,
    values: Vec<T>,
    slopes: Vec<T>,
    /// dψ/d(r²) on the nodes of the even cells; empty when ψ is interpolated in r.
    even_slopes: Vec<T>,
    holder: T,
}

impl<T: Real> RadialCharFn<T> {
    /// Checks ψ(0) = 1 and |ψ| ≤ 1 (both to 1e-10).
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!("{} values for {} grid points", values.len(), grid.len())));
        }
        let tol = T::lit(1e-10).max(T::epsilon() * T::lit(16.0));
        if (values[0] - T::one()).abs() > tol {
            return Err(Error::Numeric(format!("psi(0) = {} is not 1", values[0])));
        }
        if let Some(v) = values.iter().find(|v| !(v.abs() <= T::one() + tol)) {
            return Err(Error::Numeric(format!("|psi| = {v} exceeds 1")));
        }
        Ok(Self::from_parts(grid, values))
    }

    /// Builds without the characteristic-function checks (solver internals,
    /// surrogates in scaling probes).
    pub(crate) fn from_parts(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Self {
        let mut slopes = monotone_slopes(&grid, &values);
        let holder = holder_exponent(&grid, &values);
        // An even profile with |1 - ψ| = O(r^a), a > 1, is flat at the origin.
        if holder > T::lit(1.1) {
            slopes[0] = T::zero();
        }
        let even_slopes = if holder >= T::lit(SMOOTH_HOLDER) && !grid.even_stencils.is_empty() {
            even_slopes(&grid, &values, &slopes)
        } else {
            Vec::new()
        };
        Self { grid, values, slopes, even_slopes, holder }
    }

    /// Arbitrary radial data on `grid` (no characteristic-function checks),
    /// e.g. collision terms or linearised surrogates.
    pub fn profile(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!("{} values for {} grid points", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite profile value".into()));
        }
        Ok(Self::from_parts(grid, values))
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn slopes(&self) -> &[T] {
        &self.slopes
    }

    /// Fitted exponent `a` in |1 − ψ(r)| ≈ C r^a near 0 (∞ when ψ ≡ 1 there).
    pub fn holder_exponent(&self) -> T {
        self.holder
    }

    pub fn r_max(&self) -> T {
        self.grid.r_max()
    }

    /// ψ(r) by monotone cubic interpolation, clamped to [-1, 1].
    pub fn eval(&self, r: T) -> Result<T> {
        let cell = self.grid.locate(r)?;
        Ok(self.eval_cell(&cell))
    }

    #[inline]
    pub fn eval_cell(&self, c: &Cell<T>) -> T {
        self.raw_cell(c).max(-T::one()).min(T::one())
    }

    /// Whether the first cells are interpolated in r².
    pub fn is_even_smooth(&self) -> bool {
        !self.even_slopes.is_empty()
    }

    /// Hermite basis and the two node slopes in the interpolation variable of cell `c`.
    #[inline]
    fn local(&self, c: &Cell<T>) -> ([T; 4], T, T) {
        let k = c.k;
        if k < self.grid.even_cells && !self.even_slopes.is_empty() {
            let r = &self.grid.r;
            let (a, b) = (r[k], r[k + 1]);
            let x = a + c.t * c.h;
            let sum = a + b;
            let cu = Cell { k, t: c.t * (x + a) / sum, u: c.u * (b + x) / sum, h: c.h * sum };
            (cu.basis(), self.even_slopes[k], self.even_slopes[k + 1])
        } else {
            (c.basis(), self.slopes[c.k], self.slopes[c.k + 1])
        }
    }

    /// p(x) − ψ(r_k) for x in cell `c`, without cancellation (unclamped).
    #[inline]
    pub fn offset_left(&self, c: &Cell<T>) -> T {
        let ([_, h01, h10, h11], dk, dk1) = self.local(c);
        h01 * (self.values[c.k + 1] - self.values[c.k]) + h10 * dk + h11 * dk1
    }

    /// p(x) − ψ(r_{k+1}) for x in cell `c`, without cancellation (unclamped).
    #[inline]
    pub fn offset_right(&self, c: &Cell<T>) -> T {
        let ([h00, _, h10, h11], dk, dk1) = self.local(c);
        h00 * (self.values[c.k] - self.values[c.k + 1]) + h10 * dk + h11 * dk1
    }

    /// Hermite interpolant in the form y_k + (p − y_k), exact on constants.
    #[inline]
    fn raw_cell(&self, c: &Cell<T>) -> T {
        self.values[c.k] + self.offset_left(c)
    }

    /// Interpolated value without the [-1, 1] clamp.
    pub fn eval_raw(&self, r: T) -> Result<T> {
        let c = self.grid.locate(r)?;
        Ok(self.raw_cell(&c))
    }

    /// 1 − ψ(r), anchored at ψ(0) on the first interval so tiny radii keep precision.
    pub fn one_minus(&self, r: T) -> Result<T> {
        let cell = self.grid.locate(r)?;
        if cell.k == 0 {
            Ok((T::one() - self.values[0]) - self.offset_left(&cell))
        } else {
            Ok(T::one() - self.eval_cell(&cell))
        }
    }

    /// `r,psi` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,psi\n");
        for (r, v) in self.grid.radii().iter().zip(&self.values) {
            out.push_str(&format!("{:.17e},{:.17e}\n", r.as_f64(), v.as_f64()));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rs = Vec::new();
        let mut vs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('r') || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = || -> Result<f64> {
                parts
                    .next()
                    .ok_or(Error::Parse { line: idx + 1, msg: "missing column".into() })?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })
            };
            rs.push(T::lit(next()?));
            vs.push(T::lit(next()?));
        }
        Self::new(Arc::new(RadialGrid::from_points(rs)?), vs)
    }
}

/// Hölder exponent from which a profile counts as smooth and even at 0.
const SMOOTH_HOLDER: f64 = 1.9;

/// dψ/du, u = r², on the even-cell nodes: five-point differences in u with
/// the Hyman filter, matched to the r-slope at the outer node so the
/// interpolant stays C¹ there.
fn even_slopes<T: Real>(grid: &RadialGrid<T>, y: &[T], slopes: &[T]) -> Vec<T> {
    let m = grid.even_cells;
    let r = &grid.r;
    let u: Vec<T> = r[..=m].iter().map(|&x| x * x).collect();
    let secant: Vec<T> = (0..m).map(|k| (y[k + 1] - y[k]) / (u[k + 1] - u[k])).collect();
    let three = T::lit(3.0);
    let mut out: Vec<T> = (0..=m)
        .map(|i| {
            let (start, ws) = &grid.even_stencils[i];
            let mut d = T::zero();
            for j in 0..5 {
                d = d + ws[j] * (y[start + j] - y[i]);
            }
            let left = if i > 0 { Some(secant[i - 1]) } else { None };
            let right = if i < m { Some(secant[i]) } else { None };
            match (left, right) {
                (Some(a), Some(b)) if a * b > T::zero() => limit(d, a.signum(), three * a.abs().min(b.abs())),
                (Some(a), Some(b)) if a == T::zero() && b == T::zero() => T::zero(),
                (None, Some(b)) | (Some(b), None) => {
                    if b == T::zero() {
                        T::zero()
                    } else {
                        limit(d, b.signum(), three * b.abs())
                    }
                }
                _ => d,
            }
        })
        .collect();
    out[m] = slopes[m] / (T::lit(2.0) * r[m]);
    out
}

/// Log–log slope of |1 − ψ| over the five smallest positive radii.
fn holder_exponent<T: Real>(grid: &RadialGrid<T>, values: &[T]) -> T {
    let n = 5.min(grid.len() - 1);
    let mut pts = Vec::with_capacity(n);
    for i in 1..=n {
        let gap = (T::one() - values[i]).abs();
        if gap == T::zero() {
            return T::infinity();
        }
        pts.push((grid.r[i].ln(), gap.ln()));
    }
    if pts.len() < 2 {
        return T::infinity();
    }
    let m = T::from_count(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / m;
    let my = pts.iter().map(|p| p.1).sum::<T>() / m;
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
