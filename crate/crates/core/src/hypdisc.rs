//! Hyperbolic plane in the unit-disc model: distance, disc automorphisms,
//! the hyperbolic cosine rule, curves in Fermi coordinates, and ideal
//! polygons up to isometry.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypError {
    #[error("{0} is not inside the unit disc")]
    NotInDisc(Complex64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("curve is not unit speed: residual {residual:e} at sample {index}")]
    NotUnitSpeed { index: usize, residual: f64 },
    #[error("curvature hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("ideal vertices {0} and {1} coincide")]
    DegenerateVertices(usize, usize),
    #[error("invalid ideal polygon: {0}")]
    InvalidPolygon(String),
}

/// A point strictly inside the unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscPoint(Complex64);

impl DiscPoint {
    pub fn new(z: Complex64) -> Result<Self, HypError> {
        if z.norm() < 1.0 && z.re.is_finite() && z.im.is_finite() {
            Ok(Self(z))
        } else {
            Err(HypError::NotInDisc(z))
        }
    }

    pub fn origin() -> Self {
        Self(Complex64::new(0.0, 0.0))
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }
}

/// Hyperbolic distance (curvature -1).
pub fn dist(p: DiscPoint, q: DiscPoint) -> f64 {
    let num = (p.0 - q.0).norm();
    let den = (Complex64::new(1.0, 0.0) - p.0.conj() * q.0).norm();
    2.0 * (num / den).atanh()
}

/// Orientation-preserving automorphism `z ↦ rot (z - a) / (1 - ā z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscAutomorphism {
    rot: Complex64,
    a: Complex64,
}

impl DiscAutomorphism {
    pub fn new(rotation_angle: f64, a: DiscPoint) -> Self {
        Self {
            rot: Complex64::from_polar(1.0, rotation_angle),
            a: a.0,
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, DiscPoint::origin())
    }

    /// The automorphism sending `a` to the origin with no extra rotation.
    pub fn to_origin(a: DiscPoint) -> Self {
        Self::new(0.0, a)
    }

    pub fn rotation(angle: f64) -> Self {
        Self::new(angle, DiscPoint::origin())
    }

    /// Hyperbolic translation along the real diameter by signed distance `d`.
    pub fn translation(d: f64) -> Self {
        // sends 0 to tanh(d/2)
        Self {
            rot: Complex64::new(1.0, 0.0),
            a: Complex64::new(-(0.5 * d).tanh(), 0.0),
        }
    }

    /// Applies the map to any point of the closed disc.
    pub fn apply(&self, z: Complex64) -> Complex64 {
        self.rot * (z - self.a) / (Complex64::new(1.0, 0.0) - self.a.conj() * z)
    }

    pub fn apply_point(&self, p: DiscPoint) -> DiscPoint {
        let w = self.apply(p.0);
        // rounding can push a point near the boundary outwards
        DiscPoint(if w.norm() >= 1.0 { w / (w.norm() * (1.0 + 1e-16)) } else { w })
    }

    fn matrix(&self) -> [Complex64; 4] {
        let one = Complex64::new(1.0, 0.0);
        [self.rot, -self.rot * self.a, -self.a.conj(), one]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        from_disc_matrix(mat_mul(self.matrix(), other.matrix()))
    }

    pub fn inverse(&self) -> Self {
        from_disc_matrix(mat_inv(self.matrix()))
    }
}

fn from_disc_matrix(mm: [Complex64; 4]) -> DiscAutomorphism {
    // [[α, β], [γ, δ]] with z ↦ (αz + β)/(γz + δ) preserving the disc
    let [al, be, _, de] = mm;
    let a = -be / al;
    let rot = al / de;
    DiscAutomorphism {
        rot: rot / rot.norm(),
        a,
    }
}

fn mat_mul(x: [Complex64; 4], y: [Complex64; 4]) -> [Complex64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

fn mat_inv(x: [Complex64; 4]) -> [Complex64; 4] {
    let det = x[0] * x[3] - x[1] * x[2];
    [x[3] / det, -x[1] / det, -x[2] / det, x[0] / det]
}

fn mobius_apply(x: [Complex64; 4], z: Complex64) -> Complex64 {
    (x[0] * z + x[1]) / (x[2] * z + x[3])
}

/// Side opposite the angle `gamma` in a hyperbolic triangle with adjacent
/// sides `x1`, `x2`.
pub fn cosine_rule(x1: f64, x2: f64, gamma: f64) -> f64 {
    // sinh²(c/2) = sinh²((x1-x2)/2) + sinh x1 sinh x2 sin²(γ/2)
    let s = (0.5 * (x1 - x2)).sinh().powi(2) + x1.sinh() * x2.sinh() * (0.5 * gamma).sin().powi(2);
    2.0 * s.max(0.0).sqrt().asinh()
}

/// Point at Fermi coordinates `(u, v)` relative to the real diameter: move
/// distance `v` along the imaginary diameter, then translate by `u`.
pub fn fermi_to_disc(u: f64, v: f64) -> DiscPoint {
    let p = Complex64::new(0.0, (0.5 * v).tanh());
    DiscAutomorphism::translation(u).apply_point(DiscPoint(p))
}

/// Point at Fermi coordinates `(u, v)` on the hyperboloid `x0² - x1² - x2² = 1`.
pub fn fermi_to_hyperboloid(u: f64, v: f64) -> [f64; 3] {
    [u.cosh() * v.cosh(), u.sinh() * v.cosh(), v.sinh()]
}

/// Distance between two points given in Fermi coordinates. Uses the
/// hyperboloid inner product, which stays accurate far from the origin.
pub fn fermi_distance(p: (f64, f64), q: (f64, f64)) -> f64 {
    // -<X, Y> = cosh(Δu) cosh v1 cosh v2 - sinh v1 sinh v2
    let (u1, v1) = p;
    let (u2, v2) = q;
    let du = u2 - u1;
    // cosh d - 1 = (cosh Δu - 1) cosh v1 cosh v2 + cosh(v1 - v2) - 1
    let t = 2.0 * (0.5 * du).sinh().powi(2) * v1.cosh() * v2.cosh()
        + 2.0 * (0.5 * (v1 - v2)).sinh().powi(2);
    // cosh d - 1 = 2 sinh²(d/2)
    2.0 * (0.5 * t).sqrt().asinh()
}

/// Unit-speed curve sampled on a uniform arclength grid in Fermi
/// coordinates, metric `cosh²v du² + dv²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FermiCurve {
    step: f64,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FermiCurve {
    /// Wraps samples, checking unit speed to `1e-6` with finite differences.
    pub fn from_samples(step: f64, u: Vec<f64>, v: Vec<f64>) -> Result<Self, HypError> {
        if u.len() != v.len() {
            return Err(HypError::InvalidPolygon("u and v lengths differ".into()));
        }
        if u.len() < 3 {
            return Err(HypError::TooFewSamples { needed: 3, got: u.len() });
        }
        let c = Self { step, u, v };
        let (du, dv) = (c.first_derivative(&c.u), c.first_derivative(&c.v));
        for i in 0..c.len() {
            let speed2 = du[i].powi(2) * c.v[i].cosh().powi(2) + dv[i].powi(2);
            let residual = (speed2 - 1.0).abs();
            if residual > 1e-6 {
                return Err(HypError::NotUnitSpeed { index: i, residual });
            }
        }
        Ok(c)
    }

    /// Unit-speed curve of length `length` whose height above the base
    /// geodesic is `height(s)` with derivative `slope(s)` (`|slope| < 1`).
    /// The along-geodesic coordinate is integrated from `u(0) = 0`.
    pub fn from_height<V, D>(height: V, slope: D, length: f64, step: f64) -> Result<Self, HypError>
    where
        V: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let n = (length / step).round() as usize;
        if n < 2 {
            return Err(HypError::TooFewSamples { needed: 3, got: n + 1 });
        }
        let h = length / n as f64;
        // u' = sqrt(1 - v'²)/cosh v = 1 - deficit, evaluated without cancellation
        let deficit = |s: f64| -> f64 {
            let v = height(s);
            let q = slope(s).powi(2);
            let sech = 1.0 / v.cosh();
            2.0 * (0.5 * v).sinh().powi(2) * sech + sech * q / (1.0 + (1.0 - q).max(0.0).sqrt())
        };
        let mut u = Vec::with_capacity(n + 1);
        let mut v = Vec::with_capacity(n + 1);
        let mut lost = 0.0;
        u.push(0.0);
        v.push(height(0.0));
        for i in 1..=n {
            let (s0, s1) = ((i - 1) as f64 * h, i as f64 * h);
            let (d, _) = quad::integrate(|s| [deficit(s)], s0, s1, 1e-300, 1e-14, 50);
            lost += d[0];
            u.push(s1 - lost);
            v.push(height(s1));
        }
        Self::from_samples(h, u, v)
    }

    /// Curve at constant height `v0` above the base geodesic.
    pub fn hypercycle(v0: f64, length: f64, step: f64) -> Result<Self, HypError> {
        Self::from_height(|_| v0, |_| 0.0, length, step)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Arclength of the sampled curve.
    pub fn length(&self) -> f64 {
        self.step * (self.len() - 1) as f64
    }

    pub fn start(&self) -> (f64, f64) {
        (self.u[0], self.v[0])
    }

    pub fn end(&self) -> (f64, f64) {
        (self.u[self.len() - 1], self.v[self.len() - 1])
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    fn first_derivative(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h = self.step;
        (0..n)
            .map(|i| {
                if i == 0 {
                    (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
                } else if i == n - 1 {
                    (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
                } else {
                    (f[i + 1] - f[i - 1]) / (2.0 * h)
                }
            })
            .collect()
    }

    fn second_derivative(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let h2 = self.step * self.step;
        (0..n)
            .map(|i| {
                if n >= 4 && i == 0 {
                    (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
                } else if n >= 4 && i == n - 1 {
                    (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2
                } else {
                    let j = i.clamp(1, n - 2);
                    (f[j + 1] - 2.0 * f[j] + f[j - 1]) / h2
                }
            })
            .collect()
    }
}

/// Geodesic curvature `|k_g|` at every sample, from
/// `k_g² = cosh²v (u'' + 2u'v' tanh v)² + (v'' - u'² cosh v sinh v)²`.
pub fn fermi_curvature(c: &FermiCurve) -> Result<Vec<f64>, HypError> {
    if c.len() < 3 {
        return Err(HypError::TooFewSamples { needed: 3, got: c.len() });
    }
    let (du, dv) = (c.first_derivative(&c.u), c.first_derivative(&c.v));
    let (ddu, ddv) = (c.second_derivative(&c.u), c.second_derivative(&c.v));
    Ok((0..c.len())
        .map(|i| {
            let v = c.v[i];
            let a = v.cosh() * (ddu[i] + 2.0 * du[i] * dv[i] * v.tanh());
            let b = ddv[i] - du[i] * du[i] * v.cosh() * v.sinh();
            a.hypot(b)
        })
        .collect())
}

/// Least-squares fit `ln y ≈ ln C - rate·x`; returns `(rate, ln C, R²)`.
pub fn exponential_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x, y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, 0.0, 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (-slope, my - slope * mx, r2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub r: f64,
    pub length: f64,
    pub distance: f64,
    pub gap: f64,
    pub sup_curvature: f64,
}

impl GapRow {
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    /// Fitted decay rate of `sup |k_g|` in `R`; `None` for geodesic families.
    pub curvature_rate: Option<f64>,
}

impl GapReport {
    /// Whether `gap / R` decreases strictly along the rows.
    pub fn relative_gap_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].relative_gap() < w[0].relative_gap())
    }
}

/// For each `R`, compares the length of `family(R)` with the distance
/// between its endpoints.
///
/// Fails with `HypothesisViolated` unless `sup |k_g|` decays exponentially
/// in `R` (families with negligible curvature are accepted as geodesic).
pub fn endpoint_gap_check<F>(family: F, rs: &[f64]) -> Result<GapReport, HypError>
where
    F: Fn(f64) -> Result<FermiCurve, HypError>,
{
    let mut rows = Vec::with_capacity(rs.len());
    for &r in rs {
        let curve = family(r)?;
        let kg = fermi_curvature(&curve)?;
        let length = curve.length();
        let distance = fermi_distance(curve.start(), curve.end());
        rows.push(GapRow {
            r,
            length,
            distance,
            gap: length - distance,
            sup_curvature: kg.iter().cloned().fold(0.0, f64::max),
        });
    }
    let nontrivial = rows.iter().any(|row| row.sup_curvature > 1e-9);
    let curvature_rate = if nontrivial {
        let xs: Vec<f64> = rows.iter().map(|r| r.r).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.sup_curvature).collect();
        let (rate, _, _) = exponential_fit(&xs, &ys);
        if !(rate > 0.0) {
            return Err(HypError::HypothesisViolated(format!(
                "sup |k_g| does not decay (fitted rate {rate:.3e})"
            )));
        }
        Some(rate)
    } else {
        None
    };
    Ok(GapReport { rows, curvature_rate })
}

/// Cross ratio `(z1 - z3)(z2 - z4) / ((z1 - z4)(z2 - z3))`.
pub fn cross_ratio(z1: Complex64, z2: Complex64, z3: Complex64, z4: Complex64) -> Complex64 {
    (z1 - z3) * (z2 - z4) / ((z1 - z4) * (z2 - z3))
}

/// Ideal polygon: distinct unit complex numbers in counterclockwise order.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealPolygon {
    vertices: Vec<Complex64>,
}

const VERTEX_TOL: f64 = 1e-12;

impl IdealPolygon {
    pub fn new(vertices: Vec<Complex64>) -> Result<Self, HypError> {
        let n = vertices.len();
        if n < 3 {
            return Err(HypError::InvalidPolygon(format!("{n} vertices, need at least 3")));
        }
        for (i, z) in vertices.iter().enumerate() {
            if (z.norm() - 1.0).abs() > 1e-9 {
                return Err(HypError::InvalidPolygon(format!("vertex {i} is not unimodular")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if (vertices[i] - vertices[j]).norm() <= VERTEX_TOL {
                    return Err(HypError::DegenerateVertices(i, j));
                }
            }
        }
        // counterclockwise: consecutive turns in (0, 2π) sum to one full turn
        let winding: f64 = (0..n)
            .map(|i| (vertices[(i + 1) % n] / vertices[i]).arg().rem_euclid(2.0 * PI))
            .sum();
        if (winding - 2.0 * PI).abs() > 1e-9 {
            return Err(HypError::InvalidPolygon("vertices are not in counterclockwise order".into()));
        }
        let vertices = vertices.into_iter().map(|z| z / z.norm()).collect();
        Ok(Self { vertices })
    }

    pub fn from_angles(angles: &[f64]) -> Result<Self, HypError> {
        Self::new(angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect())
    }

    /// Regular ideal `n`-gon with a vertex at 1.
    pub fn regular(n: usize) -> Result<Self, HypError> {
        let angles: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        Self::from_angles(&angles)
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    /// Vertex arguments in `[0, 2π)`, ascending.
    pub fn angles(&self) -> Vec<f64> {
        let mut a: Vec<f64> = self.vertices.iter().map(|z| z.arg().rem_euclid(2.0 * PI)).collect();
        a.sort_by(f64::total_cmp);
        a
    }

    /// Image under a disc automorphism.
    pub fn mapped(&self, g: &DiscAutomorphism) -> Self {
        Self {
            vertices: self
                .vertices
                .iter()
                .map(|&z| {
                    let w = g.apply(z);
                    w / w.norm()
                })
                .collect(),
        }
    }

    /// Image under the reflection `z ↦ z̄`, reordered to stay counterclockwise.
    pub fn reflected(&self) -> Self {
        Self {
            vertices: self.vertices.iter().rev().map(|z| z.conj()).collect(),
        }
    }

    /// Canonical form up to isometry (including reflections).
    pub fn normalize(&self) -> CanonicalForm {
        let n = self.vertices.len();
        let mut best: Option<Vec<f64>> = None;
        for poly in [self.clone(), self.reflected()] {
            for start in 0..n {
                let v = |k: usize| poly.vertices[(start + k) % n];
                let m = three_point_map(v(0), v(1), v(2));
                let rest: Vec<f64> = (3..n)
                    .map(|k| {
                        let w = mobius_apply(m, v(k));
                        w.arg().rem_euclid(2.0 * PI)
                    })
                    .collect();
                best = match best {
                    Some(b) if tolerant_cmp(&b, &rest) != Ordering::Greater => Some(b),
                    _ => Some(rest),
                };
            }
        }
        CanonicalForm {
            n,
            angles: best.unwrap_or_default(),
        }
    }

    pub fn equivalent(&self, other: &IdealPolygon, tol: f64) -> bool {
        self.normalize().matches(&other.normalize(), tol)
    }
}

/// Matrix of the Möbius map sending `(z0, z1, z2)` to `(1, i, -1)`.
fn three_point_map(z0: Complex64, z1: Complex64, z2: Complex64) -> [Complex64; 4] {
    let one = Complex64::new(1.0, 0.0);
    // sends (p, q, r) to (0, 1, ∞)
    let to_std = |p: Complex64, q: Complex64, r: Complex64| -> [Complex64; 4] {
        [q - r, -p * (q - r), q - p, -r * (q - p)]
    };
    let a = to_std(z0, z1, z2);
    let b = to_std(one, Complex64::new(0.0, 1.0), -one);
    mat_mul(mat_inv(b), a)
}

fn tolerant_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 {
            return x.total_cmp(y);
        }
    }
    a.len().cmp(&b.len())
}

/// Arguments of the vertices beyond the first three after the normalizing
/// map; empty for triangles (all ideal triangles are congruent).
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub n: usize,
    pub angles: Vec<f64>,
}

impl CanonicalForm {
    pub fn matches(&self, other: &CanonicalForm, tol: f64) -> bool {
        self.n == other.n
            && self
                .angles
                .iter()
                .zip(&other.angles)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Largest vertex-angle deviation from `other` (infinite if the vertex
    /// counts differ).
    pub fn deviation(&self, other: &CanonicalForm) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        self.angles
            .iter()
            .zip(&other.angles)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
