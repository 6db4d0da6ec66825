use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One point mass of a [`DiscreteMeasure`]; unused coordinates are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub v: [T; 3],
    pub w: T,
}

impl<T: Real> Atom<T> {
    pub fn speed(&self) -> T {
        (self.v[0] * self.v[0] + self.v[1] * self.v[1] + self.v[2] * self.v[2]).sqrt()
    }
}

/// Finite atomic probability measure on R^d, d ∈ {1, 2, 3}.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<T> {
    dim: usize,
    atoms: Vec<Atom<T>>,
}

impl<T: Real> DiscreteMeasure<T> {
    /// Validates positivity and unit total mass (to 1e-9).
    pub fn new(dim: usize, atoms: Vec<Atom<T>>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} not in 1..=3")));
        }
        if atoms.is_empty() {
            return Err(Error::Config("measure needs at least one atom".into()));
        }
        let mut total = T::zero();
        for a in &atoms {
            if !(a.w > T::zero()) {
                return Err(Error::Config(format!("atom weight {} not positive", a.w)));
            }
            if a.v[dim..].iter().any(|&x| x != T::zero()) || a.v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("atom coordinates invalid for the dimension".into()));
            }
            total = total + a.w;
        }
        if (total - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(64.0)) {
            return Err(Error::Config(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { dim, atoms })
    }

    /// Rescales weights to unit mass before validating.
    pub fn normalized(dim: usize, mut atoms: Vec<Atom<T>>) -> Result<Self> {
        let total: T = atoms.iter().map(|a| a.w).sum();
        if !(total > T::zero()) {
            return Err(Error::Config("total weight must be positive".into()));
        }
        for a in &mut atoms {
            a.w = a.w / total;
        }
        Self::new(dim, atoms)
    }

    /// Unit mass at the origin; its transform is φ ≡ 1.
    pub fn dirac(dim: usize) -> Self {
        Self { dim, atoms: vec![Atom { v: [T::zero(); 3], w: T::one() }] }
    }

    /// Mean-zero measure with `n` atoms (n ≥ 2) of speed at most `radius`.
    ///
    /// Atoms are drawn uniformly in the ball, centred, and shrunk if centring
    /// pushed any of them outside the ball.
    pub fn random_mean_zero(dim: usize, n: usize, radius: T, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("a mean-zero random measure needs at least two atoms".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = radius.as_f64();
        let mut pts: Vec<[f64; 3]> = Vec::with_capacity(n);
        while pts.len() < n {
            let mut p = [0.0; 3];
            for c in p.iter_mut().take(dim) {
                *c = rng.gen_range(-r..=r);
            }
            if p.iter().map(|x| x * x).sum::<f64>().sqrt() <= r {
                pts.push(p);
            }
        }
        let mut ws: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= total);
        let mut mean = [0.0; 3];
        for (p, w) in pts.iter().zip(&ws) {
            for c in 0..3 {
                mean[c] += w * p[c];
            }
        }
        let mut max_speed: f64 = 0.0;
        for p in &mut pts {
            for c in 0..3 {
                p[c] -= mean[c];
            }
            max_speed = max_speed.max(p.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        // the margin keeps rounding in the products from landing just outside
        let shrink = if max_speed > r { r / max_speed * (1.0 - 4.0 * f64::EPSILON) } else { 1.0 };
        let atoms = pts
            .iter()
            .zip(&ws)
            .map(|(p, &w)| Atom { v: [T::lit(p[0] * shrink), T::lit(p[1] * shrink), T::lit(p[2] * shrink)], w: T::lit(w) })
            .collect();
        Self::normalized(dim, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn mean(&self) -> [T; 3] {
        let mut m = [T::zero(); 3];
        for a in &self.atoms {
            for c in 0..3 {
                m[c] = m[c] + a.w * a.v[c];
            }
        }
        m
    }

    pub fn is_mean_zero(&self, tol: T) -> bool {
        self.mean().iter().all(|c| c.abs() <= tol)
    }

    /// Σ wᵢ |vᵢ|^α by direct summation.
    pub fn absolute_moment(&self, alpha: T) -> T {
        self.atoms.iter().map(|a| a.w * a.speed().powf(alpha)).sum()
    }

    /// Σ wᵢ ψ(vᵢ).
    pub fn integrate<F: Fn(&[T; 3]) -> T>(&self, f: F) -> T {
        self.atoms.iter().map(|a| a.w * f(&a.v)).sum()
    }

    /// Smallest nonzero atom speed.
    pub fn min_speed(&self) -> Option<T> {
        self.atoms.iter().map(Atom::speed).filter(|&s| s > T::zero()).reduce(T::min)
    }

    pub fn max_speed(&self) -> T {
        self.atoms.iter().map(Atom::speed).fold(T::zero(), T::max)
    }

    /// Whether the transform depends on |ξ| only: a mass at the origin, or
    /// a symmetric measure on the line.
    pub fn is_isotropic(&self) -> bool {
        let tol = T::lit(1e-12);
        if self.atoms.iter().all(|a| a.speed() <= tol) {
            return true;
        }
        if self.dim != 1 {
            return false;
        }
        self.atoms.iter().all(|a| {
            let mirrored: T = self
                .atoms
                .iter()
                .filter(|b| (b.v[0] + a.v[0]).abs() <= tol)
                .map(|b| b.w)
                .sum();
            let same: T = self.atoms.iter().filter(|b| (b.v[0] - a.v[0]).abs() <= tol).map(|b| b.w).sum();
            (mirrored - same).abs() <= tol
        })
    }

    /// Parses one atom per line: `d` coordinates followed by the weight.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut atoms = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse { line: idx + 1, msg: format!("{s}: {e}") }))
                .collect::<Result<_>>()?;
            let d = nums.len().checked_sub(1).filter(|d| (1..=3).contains(d)).ok_or(Error::Parse {
                line: idx + 1,
                msg: format!("expected 2 to 4 columns, found {}", nums.len()),
            })?;
            match dim {
                None => dim = Some(d),
                Some(prev) if prev != d => {
                    return Err(Error::Parse { line: idx + 1, msg: format!("dimension {d} differs from {prev}") })
                }
                _ => {}
            }
            let mut v = [T::zero(); 3];
            for c in 0..d {
                v[c] = T::lit(nums[c]);
            }
            atoms.push(Atom { v, w: T::lit(nums[d]) });
        }
        let dim = dim.ok_or(Error::Parse { line: 0, msg: "no atoms found".into() })?;
        Self::new(dim, atoms)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.atoms {
            for c in 0..self.dim {
                out.push_str(&format!("{:e} ", a.v[c].as_f64()));
            }
            out.push_str(&format!("{:e}\n", a.w.as_f64()));
        }
        out
    }
}
