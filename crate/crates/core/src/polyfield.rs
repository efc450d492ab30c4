//! Complex polynomials and the symmetric family `z^{2m} - c z^{m-1}`.
//!
//! Coefficients are stored in ascending degree order. Root finding uses the
//! Aberth-Ehrlich simultaneous iteration started from a randomly perturbed
//! circle; nearly coincident approximations are merged into clusters whose
//! size is reported as the multiplicity.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial is constant; it has no roots")]
    DegreeZero,
    #[error("root iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("degenerate family: c = 0 collapses every zero to the origin (multiplicity {multiplicity})")]
    DegenerateFamily { multiplicity: usize },
    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
}

/// A polynomial with complex coefficients, ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    /// Trailing (high-degree) zero coefficients are dropped.
    pub fn new(coeffs: impl Into<Vec<Complex64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect::<Vec<_>>())
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `z^n - c`
    pub fn monomial_minus(n: usize, c: Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
        coeffs[0] = -c;
        coeffs[n] += Complex64::new(1.0, 0.0);
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect::<Vec<_>>(),
        )
    }

    /// Taylor coefficients `p^{(j)}(z0)/j!` for `j = 0..=deg`.
    pub fn taylor_at(&self, z0: Complex64) -> Vec<Complex64> {
        // repeated synthetic division by (z - z0)
        let mut work = self.coeffs.clone();
        let mut out = Vec::with_capacity(work.len());
        while !work.is_empty() {
            let mut carry = Complex64::new(0.0, 0.0);
            for c in work.iter_mut().rev() {
                let next = *c + carry * z0;
                *c = carry;
                carry = next;
            }
            out.push(carry);
            work.pop();
        }
        out
    }

    /// Magnitude scale `sum |c_k| |z|^k` used to judge residuals.
    pub fn scale_at(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// `p(w z) * s`, used for symmetry checks.
    pub fn rotated(&self, w: Complex64, s: Complex64) -> Self {
        let mut pow = Complex64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &c in &self.coeffs {
            out.push(c * pow * s);
            pow *= w;
        }
        Self::new(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCluster {
    pub root: Complex64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct RootConfig {
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            seed: 0x5eed,
        }
    }
}

pub fn roots(p: &ComplexPoly, tol: f64) -> Result<Vec<RootCluster>, PolyError> {
    roots_with(p, tol, &RootConfig::default())
}

pub fn roots_with(
    p: &ComplexPoly,
    tol: f64,
    cfg: &RootConfig,
) -> Result<Vec<RootCluster>, PolyError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(PolyError::BadTolerance(tol));
    }
    let n = match p.degree() {
        None | Some(0) => return Err(PolyError::DegreeZero),
        Some(n) => n,
    };
    let zero = Complex64::new(0.0, 0.0);
    let lead = p.coeffs[n];
    // monic copy keeps the iteration scale-free
    let monic = ComplexPoly::new(p.coeffs.iter().map(|c| c / lead).collect::<Vec<_>>());

    // exact zeros at the origin are peeled off first
    let mut low = 0;
    while monic.coeffs[low] == zero {
        low += 1;
    }
    let reduced = ComplexPoly::new(monic.coeffs[low..].to_vec());
    let rn = n - low;

    let mut approx = if rn > 0 {
        aberth(&reduced, rn, tol, cfg)?
    } else {
        Vec::new()
    };
    approx.extend(std::iter::repeat(zero).take(low));

    let mut clusters = cluster(&monic, &approx, tol);
    for cl in &mut clusters {
        let scale = monic.scale_at(cl.root).max(1.0);
        let residual = monic.eval(cl.root).norm();
        if residual > tol * scale {
            return Err(PolyError::NonConvergence {
                iterations: cfg.max_iter,
                residual,
            });
        }
    }
    sort_roots(&mut clusters);
    Ok(clusters)
}

fn aberth(
    p: &ComplexPoly,
    n: usize,
    tol: f64,
    cfg: &RootConfig,
) -> Result<Vec<Complex64>, PolyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // geometric-mean radius of the roots
    let c0 = p.coeffs[0].norm();
    let radius = if c0 > 0.0 {
        c0.powf(1.0 / n as f64)
    } else {
        1.0
    };
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let jitter: f64 = rng.gen_range(-0.25..0.25);
            let rscale: f64 = rng.gen_range(0.9..1.1);
            let theta = 2.0 * PI * (k as f64 + 0.5 + jitter) / n as f64 + 0.4;
            Complex64::from_polar(radius * rscale, theta)
        })
        .collect();

    let eps = f64::EPSILON;
    let mut converged = vec![false; n];
    for _ in 0..cfg.max_iter {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let (pv, dpv) = p.eval_with_derivative(z[i]);
            if pv.norm() <= 4.0 * eps * p.scale_at(z[i]) {
                converged[i] = true;
                continue;
            }
            let ratio = pv / dpv;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() > 0.0 {
                        d.inv()
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            let rel = step.norm() / z[i].norm().max(1e-300);
            max_step = max_step.max(rel.min(step.norm()));
            if step.norm() <= eps * z[i].norm().max(tol) {
                converged[i] = true;
            }
        }
        if converged.iter().all(|&c| c) || max_step <= eps {
            return Ok(z);
        }
    }
    // multiple roots converge only linearly; the caller's residual check
    // decides whether what we have is acceptable
    Ok(z)
}

/// Merge approximations that belong to one multiple root.
fn cluster(p: &ComplexPoly, approx: &[Complex64], tol: f64) -> Vec<RootCluster> {
    let mut groups: Vec<Vec<Complex64>> = approx.iter().map(|&z| vec![z]).collect();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..groups.len() {
            for j in (i + 1)..groups.len() {
                let ci = centroid(&groups[i]);
                let cj = centroid(&groups[j]);
                let k = groups[i].len() + groups[j].len();
                let scale = 1.0 + ci.norm().max(cj.norm());
                let radius = tol.powf(1.0 / k as f64) * scale;
                let d = (ci - cj).norm();
                if d <= radius && best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        match best {
            Some((i, j, _)) => {
                let g = groups.remove(j);
                groups[i].extend(g);
            }
            None => break,
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let k = g.len();
            RootCluster {
                root: polish(p, centroid(&g), k),
                multiplicity: k,
            }
        })
        .collect()
}

fn centroid(g: &[Complex64]) -> Complex64 {
    g.iter().sum::<Complex64>() / g.len() as f64
}

/// Newton on `p^{(k-1)}`, which has a simple root at a k-fold root of `p`.
fn polish(p: &ComplexPoly, z0: Complex64, k: usize) -> Complex64 {
    let mut q = p.clone();
    for _ in 1..k {
        q = q.derivative();
    }
    let mut z = z0;
    for _ in 0..8 {
        let (v, dv) = q.eval_with_derivative(z);
        if dv.norm() == 0.0 {
            break;
        }
        let step = v / dv;
        let next = z - step;
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        // accept only steps that do not increase |p|
        if p.eval(next).norm() > p.eval(z).norm() * 1.5 + f64::MIN_POSITIVE {
            break;
        }
        z = next;
        if step.norm() <= f64::EPSILON * z.norm() {
            break;
        }
    }
    z
}

fn arg_2pi(z: Complex64) -> f64 {
    if z.norm() == 0.0 {
        return 0.0;
    }
    let a = z.arg().rem_euclid(2.0 * PI);
    // -0.0 style wraparound lands at 2π
    if (2.0 * PI - a) < 1e-13 {
        0.0
    } else {
        a
    }
}

fn sort_roots(r: &mut [RootCluster]) {
    r.sort_by(|x, y| {
        let (ax, ay) = (arg_2pi(x.root), arg_2pi(y.root));
        if (ax - ay).abs() > 1e-12 {
            ax.total_cmp(&ay)
        } else {
            x.root.norm().total_cmp(&y.root.norm())
        }
    });
}

/// Parameters of `Φ = [z^{2m} - (a + ib) z^{m-1}] dz²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricFamily {
    m: u32,
    a: f64,
    b: f64,
}

impl SymmetricFamily {
    pub fn new(m: u32, a: f64, b: f64) -> Result<Self, PolyError> {
        if m == 0 {
            return Err(PolyError::InvalidFamily("m must be at least 1".into()));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(PolyError::InvalidFamily("a and b must be finite".into()));
        }
        Ok(Self { m, a, b })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    /// Common length of the finite edges of the vertical R-tree, `π|b|/(2(m+1))`.
    pub fn nu(&self) -> f64 {
        PI * self.b.abs() / (2.0 * (self.m as f64 + 1.0))
    }

    /// Primitive root of unity `e^{2πi/(m+1)}`.
    pub fn omega(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI / (self.m as f64 + 1.0))
    }

    pub fn expand(&self) -> ComplexPoly {
        let m = self.m as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
        coeffs[2 * m] += Complex64::new(1.0, 0.0);
        coeffs[m - 1] -= self.c();
        ComplexPoly::new(coeffs)
    }

    /// Same family with `b` negated (complex conjugate coefficient).
    pub fn conjugate(&self) -> Self {
        Self { b: -self.b, ..*self }
    }
}

/// Zeros of the family coefficient split into the origin and the outer ring.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyRoots {
    /// Multiplicity of the zero at the origin (`m - 1`; zero when `m = 1`).
    pub center_multiplicity: usize,
    /// The `(m+1)`-th roots of `c`, counterclockwise from the principal one.
    pub outer: Vec<Complex64>,
}

pub fn family_roots(f: &SymmetricFamily) -> Result<FamilyRoots, PolyError> {
    let c = f.c();
    let m = f.m as usize;
    if c.norm() == 0.0 {
        return Err(PolyError::DegenerateFamily { multiplicity: 2 * m });
    }
    let k = (m + 1) as f64;
    let eta = Complex64::from_polar(c.norm().powf(1.0 / k), c.arg() / k);
    let outer = (0..=m)
        .map(|j| eta * Complex64::from_polar(1.0, 2.0 * PI * j as f64 / k))
        .collect();
    Ok(FamilyRoots {
        center_multiplicity: m - 1,
        outer,
    })
}
