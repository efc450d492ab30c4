//! Numerical harmonic-map data for a polynomial Hopf differential `P dz²`.
//!
//! The energy density `H = ‖∂u‖²` (Euclidean gauge) solves
//! `Δ log H = 2H - 2|P|²/H`; in natural coordinates with `e^{2w} = H/|P|`
//! this is `Δw = 2 sinh 2w`. The pullback metric is
//! `g = (H + |P|²/H)|dz|² + 2 Re(P dz²)` and has curvature `-1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::hypdisc::{exponential_fit, DiscAutomorphism, DiscPoint, HypError};
use crate::imagelaw::alpha_of_nu;
use crate::polyfield::{ComplexPoly, PolyError, SymmetricFamily};
use crate::quaddiff::{
    Foliation, NaturalPath, QuadDiffError, QuadraticDifferential, Termination, TraceConfig, TracedTrajectory,
    ZetaConfig,
};
use crate::realtree::build_family_tree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VortexError {
    #[error("Newton iteration diverged after {iterations} steps (residual {residual:e}); try a smaller newtonDamping or a finer grid")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("grid too coarse: spacing {h} gives fewer than 8 points across the root separation {separation}")]
    GridTooCoarse { h: f64, separation: f64 },
    #[error("domain radius {radius} is below the required {required}")]
    DomainTooSmall { radius: f64, required: f64 },
    #[error("{0} lies outside the solved grid")]
    OutsideGrid(Complex64),
    #[error("construction does not fit in the solved region: {0}")]
    RegionTooSmall(String),
    #[error("metric is degenerate near {0}")]
    DegenerateMetric(Complex64),
    #[error("bad solver configuration: {0}")]
    BadConfig(String),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Quad(#[from] QuadDiffError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Hyp(#[from] HypError),
}

/// Solver settings, readable from `key = value` text.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Half-width of the square `[-radius, radius]²`.
    pub radius: f64,
    /// Grid spacing; ignored when `grid_points` is set.
    pub h: f64,
    /// Points per side (overrides `h`).
    pub grid_points: Option<usize>,
    /// Bound on the max-norm of the discrete residual.
    pub tol: f64,
    /// Largest Newton step fraction tried first (1 = full Newton).
    pub newton_damping: f64,
    pub max_iter: usize,
    /// Exclusion radius factor around zeros for tracing and quadrature.
    pub exclusion_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            radius: 6.0,
            h: 12.0 / 255.0,
            grid_points: None,
            tol: 1e-8,
            newton_damping: 1.0,
            max_iter: 50,
            exclusion_eps: 1e-3,
        }
    }
}

impl SolverConfig {
    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    /// Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, VortexError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| VortexError::BadConfig(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || -> Result<f64, VortexError> {
                value
                    .parse::<f64>()
                    .map_err(|_| VortexError::BadConfig(format!("line {}: '{value}' is not a number", lineno + 1)))
            };
            let int = || -> Result<usize, VortexError> {
                value
                    .parse::<usize>()
                    .map_err(|_| VortexError::BadConfig(format!("line {}: '{value}' is not an integer", lineno + 1)))
            };
            match key {
                "radius" => cfg.radius = num()?,
                "h" => cfg.h = num()?,
                "gridPoints" => cfg.grid_points = Some(int()?),
                "tol" => cfg.tol = num()?,
                "newtonDamping" => cfg.newton_damping = num()?,
                "maxIter" => cfg.max_iter = int()?,
                "exclusionEps" => cfg.exclusion_eps = num()?,
                other => return Err(VortexError::BadConfig(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), VortexError> {
        let bad = |s: &str| Err(VortexError::BadConfig(s.into()));
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be positive");
        }
        if self.grid_points.is_none() && !(self.h > 0.0) {
            return bad("h must be positive");
        }
        if matches!(self.grid_points, Some(n) if n < 5) {
            return bad("gridPoints must be at least 5");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(self.newton_damping > 0.0 && self.newton_damping <= 1.0) {
            return bad("newtonDamping must lie in (0, 1]");
        }
        if self.max_iter == 0 {
            return bad("maxIter must be positive");
        }
        if !(self.exclusion_eps > 0.0) {
            return bad("exclusionEps must be positive");
        }
        Ok(())
    }

    /// Points per side and the resulting spacing.
    pub fn resolve_grid(&self) -> (usize, f64) {
        let n = self
            .grid_points
            .unwrap_or_else(|| ((2.0 * self.radius / self.h).round() as usize + 1).max(5));
        (n, 2.0 * self.radius / (n - 1) as f64)
    }
}

/// Uniform `n × n` grid on `[-radius, radius]²`, row-major with rows along `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub radius: f64,
    pub h: f64,
}

impl Grid {
    pub fn new(n: usize, radius: f64) -> Self {
        Self {
            n,
            radius,
            h: 2.0 * radius / (n - 1) as f64,
        }
    }

    pub fn x0(&self) -> f64 {
        -self.radius
    }

    pub fn node(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(-self.radius + i as f64 * self.h, -self.radius + j as f64 * self.h)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Cell containing `z` and the fractional offsets inside it.
    pub fn locate(&self, z: Complex64) -> Option<(usize, usize, f64, f64)> {
        let fx = (z.re + self.radius) / self.h;
        let fy = (z.im + self.radius) / self.h;
        let last = (self.n - 1) as f64;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= last && fy <= last) {
            return None;
        }
        let i = (fx.floor() as usize).min(self.n - 2);
        let j = (fy.floor() as usize).min(self.n - 2);
        Some((i, j, fx - i as f64, fy - j as f64))
    }

    pub fn bilinear(&self, field: &[f64], z: Complex64) -> Option<f64> {
        let (i, j, tx, ty) = self.locate(z)?;
        let f = |a: usize, b: usize| field[self.index(a, b)];
        Some(
            (1.0 - tx) * (1.0 - ty) * f(i, j)
                + tx * (1.0 - ty) * f(i + 1, j)
                + (1.0 - tx) * ty * f(i, j + 1)
                + tx * ty * f(i + 1, j + 1),
        )
    }
}

/// Solved energy density on a grid.
#[derive(Debug)]
pub struct VortexSolution {
    grid: Grid,
    poly: ComplexPoly,
    qd: QuadraticDifferential,
    family: Option<SymmetricFamily>,
    log_h: Vec<f64>,
    p_vals: Vec<Complex64>,
    iterations: usize,
    residual: f64,
    phi_distance: OnceLock<Vec<f64>>,
}

/// Which field to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    LogH,
    H,
    W,
}

impl VortexSolution {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn poly(&self) -> &ComplexPoly {
        &self.poly
    }

    pub fn quadratic_differential(&self) -> &QuadraticDifferential {
        &self.qd
    }

    pub fn family(&self) -> Option<&SymmetricFamily> {
        self.family.as_ref()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Max-norm of the discrete residual at the returned iterate.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn log_h(&self) -> &[f64] {
        &self.log_h
    }

    pub fn h_field(&self) -> Vec<f64> {
        self.log_h.iter().map(|s| s.exp()).collect()
    }

    /// `w = (log H - log|P|)/2` at every node (`+∞` at exact zeros of `P`).
    pub fn w_field(&self) -> Vec<f64> {
        self.log_h
            .iter()
            .zip(&self.p_vals)
            .map(|(s, p)| 0.5 * (s - p.norm().ln()))
            .collect()
    }

    /// Jacobian `J = H - |P|²/H` at every node.
    pub fn jacobian_field(&self) -> Vec<f64> {
        self.log_h
            .iter()
            .zip(&self.p_vals)
            .map(|(s, p)| s.exp() - p.norm_sqr() * (-s).exp())
            .collect()
    }

    /// Bilinear interpolation of `w`; computed from interpolated `log H`
    /// so that cells next to a zero stay finite.
    pub fn w_at(&self, z: Complex64) -> Result<f64, VortexError> {
        let s = self.grid.bilinear(&self.log_h, z).ok_or(VortexError::OutsideGrid(z))?;
        Ok(0.5 * (s - self.poly.eval(z).norm().ln()))
    }

    pub fn field(&self, kind: FieldKind) -> Vec<f64> {
        match kind {
            FieldKind::LogH => self.log_h.clone(),
            FieldKind::H => self.h_field(),
            FieldKind::W => self.w_field(),
        }
    }

    /// Writes `nx, ny` (u64), `x0, y0, h` (f64), all little-endian, then
    /// the field row by row.
    pub fn write_field<W: Write>(&self, kind: FieldKind, out: &mut W) -> std::io::Result<()> {
        let g = &self.grid;
        out.write_all(&(g.n as u64).to_le_bytes())?;
        out.write_all(&(g.n as u64).to_le_bytes())?;
        out.write_all(&g.x0().to_le_bytes())?;
        out.write_all(&g.x0().to_le_bytes())?;
        out.write_all(&g.h.to_le_bytes())?;
        for v in self.field(kind) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Φ-distance from the zeros of `P` at every node (16-neighbour
    /// Dijkstra weighted by `√|P|`), computed on first use.
    pub fn phi_distance_field(&self) -> &[f64] {
        self.phi_distance.get_or_init(|| phi_distance(&self.grid, &self.qd))
    }

    pub fn phi_distance_at(&self, z: Complex64) -> Result<f64, VortexError> {
        self.grid
            .bilinear(self.phi_distance_field(), z)
            .ok_or(VortexError::OutsideGrid(z))
    }

    /// Trace settings that keep leaves inside the grid.
    pub fn trace_config(&self) -> TraceConfig {
        TraceConfig {
            max_step: 0.05,
            tol: 1e-10,
            escape_radius: Some(self.grid.radius - 2.0 * self.grid.h),
            max_steps: 1_000_000,
        }
    }
}

/// Solves for the energy density of `P dz²` on the configured square.
pub fn solve_vortex_poly(p: &ComplexPoly, cfg: &SolverConfig) -> Result<VortexSolution, VortexError> {
    solve_impl(p.clone(), None, cfg)
}

/// Solves for the energy density of the family's Hopf differential.
pub fn solve_vortex(f: &SymmetricFamily, cfg: &SolverConfig) -> Result<VortexSolution, VortexError> {
    solve_impl(f.expand(), Some(*f), cfg)
}

fn solve_impl(p: ComplexPoly, family: Option<SymmetricFamily>, cfg: &SolverConfig) -> Result<VortexSolution, VortexError> {
    cfg.validate()?;
    let qd = QuadraticDifferential::with_config(
        p.clone(),
        ZetaConfig {
            exclusion_eps: cfg.exclusion_eps,
            ..ZetaConfig::default()
        },
    )?;
    let zeros: Vec<Complex64> = qd.zeros().iter().map(|r| r.root).collect();
    let rmax = zeros.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let required = 3.0 * (1.0 + rmax);
    if cfg.radius < required {
        return Err(VortexError::DomainTooSmall {
            radius: cfg.radius,
            required,
        });
    }
    let (n, h) = cfg.resolve_grid();
    let separation = zeros
        .iter()
        .enumerate()
        .flat_map(|(i, a)| zeros[i + 1..].iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min);
    if separation.is_finite() && separation / h < 8.0 {
        return Err(VortexError::GridTooCoarse { h, separation });
    }
    let grid = Grid::new(n, cfg.radius);

    let p_vals: Vec<Complex64> = (0..n * n).map(|k| p.eval(grid.node(k % n, k / n))).collect();
    let p2: Vec<f64> = p_vals.iter().map(|v| v.norm_sqr()).collect();
    // boundary: w = 0; interior start: log max(|P|, 1)
    let mut s: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let a = p_vals[k].norm();
            if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                a.ln()
            } else {
                a.max(1.0).ln()
            }
        })
        .collect();

    let mut newton = Newton {
        n,
        h,
        p2: &p2,
    };
    let mut f = vec![0.0; n * n];
    let mut res = newton.residual(&s, &mut f);
    let mut iterations = 0;
    let mut delta = vec![0.0; n * n];
    while res > cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(VortexError::NewtonDiverged {
                iterations,
                residual: res,
            });
        }
        iterations += 1;
        let forcing = (0.1f64).min(res.sqrt()).max(1e-12);
        newton.solve_linear(&s, &f, &mut delta, forcing);
        let e0 = newton.energy(&s);
        let slope: f64 = -h * h * f.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
        let mut lambda = cfg.newton_damping;
        let mut trial = vec![0.0; n * n];
        let mut f_trial = vec![0.0; n * n];
        loop {
            for k in 0..n * n {
                trial[k] = s[k] + lambda * delta[k];
            }
            let r_trial = newton.residual(&trial, &mut f_trial);
            let e1 = newton.energy(&trial);
            let armijo = e1 <= e0 + 1e-4 * lambda * slope;
            if r_trial.is_finite() && (armijo || r_trial < res) {
                s.copy_from_slice(&trial);
                f.copy_from_slice(&f_trial);
                res = r_trial;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(VortexError::NewtonDiverged {
                    iterations,
                    residual: res,
                });
            }
        }
        newton.h = h;
    }

    Ok(VortexSolution {
        grid,
        poly: p,
        qd,
        family,
        log_h: s,
        p_vals,
        iterations,
        residual: res,
        phi_distance: OnceLock::new(),
    })
}

struct Newton<'a> {
    n: usize,
    h: f64,
    p2: &'a [f64],
}

impl Newton<'_> {
    fn interior(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n;
        (1..n - 1).flat_map(move |j| (1..n - 1).map(move |i| (i, j, j * n + i)))
    }

    /// `F = Δ_h s - 2e^s + 2|P|²e^{-s}` on interior nodes; returns `max |F|`.
    fn residual(&self, s: &[f64], f: &mut [f64]) -> f64 {
        let n = self.n;
        let ih2 = 1.0 / (self.h * self.h);
        let mut worst: f64 = 0.0;
        for (_, _, k) in self.interior() {
            let lap = (s[k + 1] + s[k - 1] + s[k + n] + s[k - n] - 4.0 * s[k]) * ih2;
            let v = lap - 2.0 * s[k].exp() + 2.0 * self.p2[k] * (-s[k]).exp();
            f[k] = v;
            worst = worst.max(v.abs());
        }
        if worst.is_nan() {
            f64::INFINITY
        } else {
            worst
        }
    }

    /// Discrete convex functional whose negative gradient is `h² F`.
    fn energy(&self, s: &[f64]) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                if i + 1 < n && j > 0 && j < n - 1 {
                    e += 0.5 * (s[k + 1] - s[k]).powi(2);
                }
                if j + 1 < n && i > 0 && i < n - 1 {
                    e += 0.5 * (s[k + n] - s[k]).powi(2);
                }
            }
        }
        let h2 = self.h * self.h;
        for (_, _, k) in self.interior() {
            e += h2 * (2.0 * s[k].exp() + 2.0 * self.p2[k] * (-s[k]).exp());
        }
        e
    }

    /// Solves `(-Δ_h + D) δ = F` by Jacobi-preconditioned conjugate
    /// gradients to relative tolerance `rtol`.
    fn solve_linear(&self, s: &[f64], f: &[f64], delta: &mut [f64], rtol: f64) {
        let n = self.n;
        let ih2 = 1.0 / (self.h * self.h);
        let mut diag = vec![0.0; n * n];
        for (_, _, k) in self.interior() {
            diag[k] = 2.0 * s[k].exp() + 2.0 * self.p2[k] * (-s[k]).exp();
        }
        let apply = |x: &[f64], y: &mut [f64]| {
            for (_, _, k) in self.interior() {
                y[k] = (4.0 * x[k] - x[k + 1] - x[k - 1] - x[k + n] - x[k - n]) * ih2 + diag[k] * x[k];
            }
        };
        let precond: Vec<f64> = (0..n * n)
            .map(|k| if diag[k] > 0.0 { 1.0 / (4.0 * ih2 + diag[k]) } else { 0.0 })
            .collect();
        delta.iter_mut().for_each(|d| *d = 0.0);
        let mut r = f.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n * n];
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut rz = dot(&r, &z);
        let r0 = dot(&r, &r).sqrt();
        if r0 == 0.0 {
            return;
        }
        for _ in 0..20 * n {
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let a = rz / pap;
            for k in 0..n * n {
                delta[k] += a * p[k];
                r[k] -= a * ap[k];
            }
            if dot(&r, &r).sqrt() <= rtol * r0 {
                break;
            }
            for k in 0..n * n {
                z[k] = r[k] * precond[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n * n {
                p[k] = z[k] + beta * p[k];
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn phi_distance(grid: &Grid, qd: &QuadraticDifferential) -> Vec<f64> {
    let n = grid.n;
    let h = grid.h;
    let mut dist = vec![f64::INFINITY; n * n];
    let mut heap = BinaryHeap::new();
    if qd.zeros().is_empty() {
        return dist;
    }
    for zero in qd.zeros().iter().map(|r| r.root) {
        let Some((i0, j0, _, _)) = grid.locate(zero) else { continue };
        for j in j0.saturating_sub(1)..=(j0 + 2).min(n - 1) {
            for i in i0.saturating_sub(1)..=(i0 + 2).min(n - 1) {
                let z = grid.node(i, j);
                let d = if (z - zero).norm() == 0.0 {
                    0.0
                } else {
                    match qd.integrate(&[zero, z], h, None) {
                        Ok(path) => path.philen(),
                        Err(_) => continue,
                    }
                };
                let k = grid.index(i, j);
                if d < dist[k] {
                    dist[k] = d;
                    heap.push(HeapItem(d, k));
                }
            }
        }
    }
    let offsets: [(i64, i64); 16] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
        (1, 2),
        (2, 1),
        (-1, 2),
        (-2, 1),
        (1, -2),
        (2, -1),
        (-1, -2),
        (-2, -1),
    ];
    let p = qd.poly();
    while let Some(HeapItem(d, k)) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        let (i, j) = ((k % n) as i64, (k / n) as i64);
        for (di, dj) in offsets {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                continue;
            }
            let kk = grid.index(a as usize, b as usize);
            let za = grid.node(i as usize, j as usize);
            let zb = grid.node(a as usize, b as usize);
            let mid = 0.5 * (za + zb);
            // Simpson weight of √|P| along the edge
            let w = (p.eval(za).norm().sqrt() + 4.0 * p.eval(mid).norm().sqrt() + p.eval(zb).norm().sqrt()) / 6.0;
            let nd = d + w * (zb - za).norm();
            if nd < dist[kk] {
                dist[kk] = nd;
                heap.push(HeapItem(nd, kk));
            }
        }
    }
    dist
}

/// Shell maxima of `|w|` against Φ-distance and their exponential fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// `(shell centre distance, max |w| on the shell)`.
    pub shells: Vec<(f64, f64)>,
    pub rate: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
}

impl DecayFit {
    pub fn strictly_decreasing(&self) -> bool {
        self.shells.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

/// Fits `max |w| ≈ C e^{-κ d}` over Φ-distance shells of width `width`
/// starting at `d_min`, using shells that lie entirely inside the grid
/// and whose maximum exceeds `floor`.
pub fn decay_fit(sol: &VortexSolution, d_min: f64, width: f64, floor: f64) -> Result<DecayFit, VortexError> {
    let dist = sol.phi_distance_field();
    let w = sol.w_field();
    let n = sol.grid.n;
    // shells must close up before reaching the box edge
    let mut d_edge = f64::INFINITY;
    for t in 0..n {
        for k in [t, (n - 1) * n + t, t * n, t * n + n - 1] {
            d_edge = d_edge.min(dist[k]);
        }
    }
    let nbins = ((d_edge - d_min) / width).floor().max(0.0) as usize;
    if nbins < 3 {
        return Err(VortexError::RegionTooSmall("fewer than three complete distance shells".into()));
    }
    let mut maxima = vec![0.0f64; nbins];
    for (d, wv) in dist.iter().zip(&w) {
        if *d >= d_min && *d < d_min + width * nbins as f64 && wv.is_finite() {
            let b = ((d - d_min) / width) as usize;
            maxima[b] = maxima[b].max(wv.abs());
        }
    }
    let shells: Vec<(f64, f64)> = maxima
        .iter()
        .enumerate()
        .map(|(b, &m)| (d_min + width * (b as f64 + 0.5), m))
        .take_while(|&(_, m)| m > floor)
        .collect();
    if shells.len() < 3 {
        return Err(VortexError::RegionTooSmall("fewer than three shells above the noise floor".into()));
    }
    let xs: Vec<f64> = shells.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = shells.iter().map(|s| s.1).collect();
    let (rate, log_prefactor, r_squared) = exponential_fit(&xs, &ys);
    Ok(DecayFit {
        shells,
        rate,
        log_prefactor,
        r_squared,
    })
}

/// `∫ f(w) dΦ` along a path, trapezoid rule on a refinement of the samples
/// with Φ-spacing at most `0.02`.
fn path_integral<F: Fn(f64) -> f64>(sol: &VortexSolution, path: &NaturalPath, f: F) -> Result<f64, VortexError> {
    let samples = path.samples();
    let mut total = 0.0;
    let mut prev = f(sol.w_at(samples[0].z)?);
    for pair in samples.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let dl = b.philen - a.philen;
        let k = ((dl / 0.02).ceil() as usize).max(1);
        for q in 1..=k {
            let z = a.z + (b.z - a.z) * (q as f64 / k as f64);
            let cur = f(sol.w_at(z)?);
            total += 0.5 * (prev + cur) * dl / k as f64;
            prev = cur;
        }
    }
    Ok(total)
}

/// Image length `∫ 2 cosh w dΦ` of a horizontal path.
pub fn horizontal_path_length(sol: &VortexSolution, path: &NaturalPath) -> Result<f64, VortexError> {
    path_integral(sol, path, |w| 2.0 * w.cosh())
}

/// Image length `∫ 2 sinh w dΦ` of a vertical path.
pub fn vertical_path_length(sol: &VortexSolution, path: &NaturalPath) -> Result<f64, VortexError> {
    path_integral(sol, path, |w| 2.0 * w.sinh())
}

pub fn horizontal_image_length(sol: &VortexSolution, gamma: &TracedTrajectory) -> Result<f64, VortexError> {
    if gamma.kind != Foliation::Horizontal {
        return Err(VortexError::BadInput("expected a horizontal trajectory".into()));
    }
    horizontal_path_length(sol, &gamma.path)
}

pub fn vertical_image_length(sol: &VortexSolution, gamma: &TracedTrajectory) -> Result<f64, VortexError> {
    if gamma.kind != Foliation::Vertical {
        return Err(VortexError::BadInput("expected a vertical trajectory".into()));
    }
    vertical_path_length(sol, &gamma.path)
}

/// Smallest Φ-distance to the zeros over the samples of a path.
pub fn min_phi_distance(sol: &VortexSolution, path: &NaturalPath) -> Result<f64, VortexError> {
    path.samples()
        .iter()
        .map(|s| sol.phi_distance_at(s.z))
        .try_fold(f64::INFINITY, |acc, d| d.map(|d| acc.min(d)))
}

/// A vertical leaf at horizontal distance `offset` from a zero, followed
/// `budget` in each direction.
pub struct VerticalLeafProbe {
    pub anchor: Complex64,
    pub up: TracedTrajectory,
    pub down: TracedTrajectory,
}

impl VerticalLeafProbe {
    pub fn image_length(&self, sol: &VortexSolution) -> Result<f64, VortexError> {
        Ok(vertical_image_length(sol, &self.up)? + vertical_image_length(sol, &self.down)?)
    }
}

/// Follows the horizontal critical leaf of `zero` whose limiting direction
/// is closest to `direction` for Φ-length `offset`, then traces the
/// vertical leaf there `budget` each way.
pub fn vertical_leaf_at(
    sol: &VortexSolution,
    zero: Complex64,
    direction: f64,
    offset: f64,
    budget: f64,
) -> Result<VerticalLeafProbe, VortexError> {
    let qd = &sol.qd;
    let cfg = sol.trace_config();
    let (start, branch) = leave_zero(qd, zero, Foliation::Horizontal, direction)?;
    let dir = outward_sign(qd, start, branch, Foliation::Horizontal, direction);
    let h = qd.trace_from_branch(start, Foliation::Horizontal, dir, offset, &cfg, Some(branch))?;
    require_budget(&h, "horizontal approach")?;
    let anchor = h.end();
    let b = h.path.end_branch();
    let up = qd.trace_from_branch(anchor, Foliation::Vertical, 1, budget, &cfg, Some(b))?;
    let down = qd.trace_from_branch(anchor, Foliation::Vertical, -1, budget, &cfg, Some(b))?;
    Ok(VerticalLeafProbe { anchor, up, down })
}

/// Point just off `zero` along its critical direction of `kind` closest to
/// `direction`, with the √P branch continued from the zero.
fn leave_zero(
    qd: &QuadraticDifferential,
    zero: Complex64,
    kind: Foliation,
    direction: f64,
) -> Result<(Complex64, Complex64), VortexError> {
    let dirs = qd.critical_directions(zero, kind)?;
    let best = dirs
        .iter()
        .cloned()
        .max_by(|a, b| (a - direction).cos().total_cmp(&(b - direction).cos()))
        .ok_or_else(|| VortexError::BadInput("zero has no critical directions".into()))?;
    let start = zero + Complex64::from_polar(4.0 * qd.exclusion_radius(zero), best);
    let path = qd.integrate(&[zero, start], 1.0, None)?;
    Ok((start, path.end_branch()))
}

/// Trace direction (±1) whose initial velocity points along `direction`.
fn outward_sign(qd: &QuadraticDifferential, at: Complex64, branch: Complex64, kind: Foliation, direction: f64) -> i8 {
    let v = kind.zeta_direction() / qd.sqrt_near(at, branch);
    if (v * Complex64::from_polar(1.0, -direction)).re >= 0.0 {
        1
    } else {
        -1
    }
}

fn require_budget(t: &TracedTrajectory, what: &str) -> Result<(), VortexError> {
    if t.terminated == Termination::LengthBudget {
        Ok(())
    } else {
        Err(VortexError::RegionTooSmall(format!(
            "{what} stopped early ({}) at {}",
            t.terminated.name(),
            t.end()
        )))
    }
}

/// One marked horizontal arc of the ν construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedArc {
    /// Joins the leaves in end domains `pair` and `pair + 1`.
    pub pair: usize,
    /// Both end domains belong to the same tree vertex.
    pub same_vertex: bool,
    pub phi_length: f64,
    pub image_length: f64,
    pub min_phi_distance: f64,
    pub points: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuMeasurement {
    pub nu_hat: f64,
    pub l: f64,
    pub arcs: Vec<MarkedArc>,
    /// Largest `|Re Δζ|` between a crossing arc's end and the leaf it
    /// should land on.
    pub closure: f64,
}

struct SameArc {
    zero: Complex64,
    /// Point on the leaf of the clockwise end domain.
    cw_end: Complex64,
    /// Point on the leaf of the counterclockwise end domain, with branch.
    ccw_end: Complex64,
    ccw_branch: Complex64,
    /// Horizontal trace direction that reached `ccw_end`.
    ccw_dir: i8,
    /// Vertical trace direction of the separatrix.
    sep_dir: i8,
}

/// Builds the `2m + 2` marked horizontal arcs joining leaves at tree
/// distance `l` from the centre and returns `mean |s_cross - s_same| / 4`
/// from their image lengths.
pub fn extract_nu(sol: &VortexSolution, l: f64) -> Result<NuMeasurement, VortexError> {
    let f = sol
        .family
        .ok_or_else(|| VortexError::BadInput("extract_nu needs a family solution".into()))?;
    let m = f.m() as usize;
    let nrays = 2 * m + 2;
    let spacing = PI / (m as f64 + 1.0);
    let tree = build_family_tree(&f, Foliation::Vertical);
    let owner = |i: usize| tree.infinite_edges[i % nrays].vertex;
    let qd = &sol.qd;
    let cfg = sol.trace_config();
    let depth = l;
    let origin = Complex64::new(0.0, 0.0);
    let zeros: Vec<Complex64> = qd.zeros().iter().map(|r| r.root).collect();

    let mut same: Vec<Option<SameArc>> = (0..nrays).map(|_| None).collect();
    let mut arcs = Vec::new();
    for i in 0..nrays {
        if owner(i) != owner(i + 1) {
            continue;
        }
        let phi = (i as f64 + 0.5) * spacing;
        let zero = if tree.finite_edges.is_empty() {
            // collapsed tree: the zero angularly closest to the gap
            *zeros
                .iter()
                .filter(|z| z.norm() > 0.0 || zeros.len() == 1)
                .max_by(|a, b| (a.arg() - phi).cos().total_cmp(&(b.arg() - phi).cos()))
                .ok_or_else(|| VortexError::BadInput("no zeros".into()))?
        } else {
            tree.vertices[owner(i)].location
        };
        let nu_i = if zero.norm() == 0.0 {
            0.0
        } else {
            qd.integrate(&[origin, zero], 1.0, None)?.zeta().re.abs()
        };
        let reach = l - nu_i;
        if !(reach > 0.0) {
            return Err(VortexError::RegionTooSmall(format!("L = {l} does not exceed the edge length {nu_i}")));
        }
        let (start, branch) = leave_zero(qd, zero, Foliation::Vertical, phi)?;
        let sep_dir = outward_sign(qd, start, branch, Foliation::Vertical, phi);
        let sep = qd.trace_from_branch(start, Foliation::Vertical, sep_dir, depth, &cfg, Some(branch))?;
        require_budget(&sep, "separatrix")?;
        let p = sep.end();
        if (p.arg() - phi).cos() < (0.5 * spacing).cos() {
            return Err(VortexError::RegionTooSmall(format!("separatrix of {zero} left its sector")));
        }
        let bp = sep.path.end_branch();
        let a = qd.trace_from_branch(p, Foliation::Horizontal, 1, reach, &cfg, Some(bp))?;
        let b = qd.trace_from_branch(p, Foliation::Horizontal, -1, reach, &cfg, Some(bp))?;
        require_budget(&a, "marked arc")?;
        require_budget(&b, "marked arc")?;
        // clockwise side has the smaller argument relative to p
        let a_is_cw = (a.end() / p).arg() < 0.0;
        let (cw, ccw) = if a_is_cw { (&a, &b) } else { (&b, &a) };
        let path = cw.path.reversed().concat(&ccw.path);
        arcs.push(MarkedArc {
            pair: i,
            same_vertex: true,
            phi_length: path.philen(),
            image_length: horizontal_path_length(sol, &path)?,
            min_phi_distance: min_phi_distance(sol, &path)?,
            points: path.points(),
        });
        same[i] = Some(SameArc {
            zero,
            cw_end: cw.end(),
            ccw_end: ccw.end(),
            ccw_branch: ccw.path.end_branch(),
            ccw_dir: ccw.direction,
            sep_dir,
        });
    }

    let mut closure: f64 = 0.0;
    for i in 0..nrays {
        if owner(i) == owner(i + 1) {
            continue;
        }
        let prev = same[(i + nrays - 1) % nrays]
            .as_ref()
            .ok_or_else(|| VortexError::RegionTooSmall("missing neighbouring arc".into()))?;
        let next = same[(i + 1) % nrays]
            .as_ref()
            .ok_or_else(|| VortexError::RegionTooSmall("missing neighbouring arc".into()))?;
        let _ = prev.zero;
        let up = qd.trace_from_branch(
            prev.ccw_end,
            Foliation::Vertical,
            -prev.sep_dir,
            2.0 * depth,
            &cfg,
            Some(prev.ccw_branch),
        )?;
        require_budget(&up, "leaf shift")?;
        let across = qd.trace_from_branch(
            up.end(),
            Foliation::Horizontal,
            -prev.ccw_dir,
            2.0 * l,
            &cfg,
            Some(up.path.end_branch()),
        )?;
        require_budget(&across, "crossing arc")?;
        let gap = qd.integrate(&[across.end(), next.cw_end], 0.05, None)?.zeta().re.abs();
        closure = closure.max(gap);
        arcs.push(MarkedArc {
            pair: i,
            same_vertex: false,
            phi_length: across.path.philen(),
            image_length: horizontal_path_length(sol, &across.path)?,
            min_phi_distance: min_phi_distance(sol, &across.path)?,
            points: across.path.points(),
        });
    }
    arcs.sort_by_key(|a| a.pair);

    let by_pair = |i: usize| arcs.iter().find(|a| a.pair == i % nrays);
    let mut diffs = Vec::new();
    if arcs.iter().any(|a| !a.same_vertex) {
        for a in arcs.iter().filter(|a| a.same_vertex) {
            if let Some(c) = by_pair(a.pair + 1) {
                diffs.push((c.image_length - a.image_length).abs());
            }
        }
    } else {
        for k in 0..=m {
            if let (Some(a), Some(b)) = (by_pair(2 * k), by_pair(2 * k + 1)) {
                diffs.push((b.image_length - a.image_length).abs());
            }
        }
    }
    if diffs.is_empty() {
        return Err(VortexError::RegionTooSmall("no arc pairs were built".into()));
    }
    let nu_hat = diffs.iter().sum::<f64>() / diffs.len() as f64 / 4.0;
    Ok(NuMeasurement {
        nu_hat,
        l,
        arcs,
        closure,
    })
}

/// A symmetric 2-tensor field on the plane with first derivatives.
pub trait MetricField {
    /// `[g_xx, g_xy, g_yy]` at `z`.
    fn metric(&self, z: Complex64) -> Option<[f64; 3]>;
    /// `(∂_x g, ∂_y g)` in the same component order.
    fn metric_derivatives(&self, z: Complex64) -> Option<([f64; 3], [f64; 3])>;
}

/// Pullback metric `e|dz|² + 2 Re(P dz²)` sampled on the solution grid.
#[derive(Debug, Clone)]
pub struct PullbackMetric {
    grid: Grid,
    g: [Vec<f64>; 3],
    dx: [Vec<f64>; 3],
    dy: [Vec<f64>; 3],
}

impl PullbackMetric {
    pub fn from_solution(sol: &VortexSolution) -> Self {
        let n = sol.grid.n;
        let mut g = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
        for k in 0..n * n {
            let hh = sol.log_h[k].exp();
            let p = sol.p_vals[k];
            let e = hh + p.norm_sqr() / hh;
            g[0][k] = e + 2.0 * p.re;
            g[1][k] = -2.0 * p.im;
            g[2][k] = e - 2.0 * p.re;
        }
        Self::from_components(sol.grid, g)
    }

    /// Samples an arbitrary metric on a grid.
    pub fn from_fn<F: Fn(Complex64) -> [f64; 3]>(grid: Grid, f: F) -> Self {
        let n = grid.n;
        let mut g = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
        for j in 0..n {
            for i in 0..n {
                let v = f(grid.node(i, j));
                for c in 0..3 {
                    g[c][grid.index(i, j)] = v[c];
                }
            }
        }
        Self::from_components(grid, g)
    }

    fn from_components(grid: Grid, g: [Vec<f64>; 3]) -> Self {
        let n = grid.n;
        let h = grid.h;
        let deriv = |f: &[f64], along_x: bool| -> Vec<f64> {
            let mut out = vec![0.0; n * n];
            for j in 0..n {
                for i in 0..n {
                    let (t, stride) = if along_x { (i, 1) } else { (j, n) };
                    let k = j * n + i;
                    out[k] = if t == 0 {
                        (-3.0 * f[k] + 4.0 * f[k + stride] - f[k + 2 * stride]) / (2.0 * h)
                    } else if t == n - 1 {
                        (3.0 * f[k] - 4.0 * f[k - stride] + f[k - 2 * stride]) / (2.0 * h)
                    } else {
                        (f[k + stride] - f[k - stride]) / (2.0 * h)
                    };
                }
            }
            out
        };
        let dx = [deriv(&g[0], true), deriv(&g[1], true), deriv(&g[2], true)];
        let dy = [deriv(&g[0], false), deriv(&g[1], false), deriv(&g[2], false)];
        Self { grid, g, dx, dy }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Gaussian curvature at node `(i, j)` by the Brioschi formula with
    /// centred differences; `None` on the boundary ring or where
    /// `det g <= 0`.
    pub fn gaussian_curvature_node(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.grid.n;
        if i < 1 || j < 1 || i + 1 >= n || j + 1 >= n {
            return None;
        }
        let h = self.grid.h;
        let k = self.grid.index(i, j);
        let at = |c: usize, di: i64, dj: i64| self.g[c][(k as i64 + di + dj * n as i64) as usize];
        let (e, f, g) = (at(0, 0, 0), at(1, 0, 0), at(2, 0, 0));
        let det = e * g - f * f;
        if !(det > 0.0) {
            return None;
        }
        let du = |c: usize| (at(c, 1, 0) - at(c, -1, 0)) / (2.0 * h);
        let dv = |c: usize| (at(c, 0, 1) - at(c, 0, -1)) / (2.0 * h);
        let duu = |c: usize| (at(c, 1, 0) - 2.0 * at(c, 0, 0) + at(c, -1, 0)) / (h * h);
        let dvv = |c: usize| (at(c, 0, 1) - 2.0 * at(c, 0, 0) + at(c, 0, -1)) / (h * h);
        let duv = |c: usize| (at(c, 1, 1) - at(c, 1, -1) - at(c, -1, 1) + at(c, -1, -1)) / (4.0 * h * h);
        let (eu, ev, fu, fv, gu, gv) = (du(0), dv(0), du(1), dv(1), du(2), dv(2));
        let det3 = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let m1 = [
            [-0.5 * dvv(0) + duv(1) - 0.5 * duu(2), 0.5 * eu, fu - 0.5 * ev],
            [fv - 0.5 * gu, e, f],
            [0.5 * gv, f, g],
        ];
        let m2 = [[0.0, 0.5 * ev, 0.5 * gu], [0.5 * ev, e, f], [0.5 * gu, f, g]];
        Some((det3(m1) - det3(m2)) / (det * det))
    }

    /// Node nearest to `z`.
    pub fn nearest_node(&self, z: Complex64) -> Option<(usize, usize)> {
        let (i, j, tx, ty) = self.grid.locate(z)?;
        Some((i + (tx >= 0.5) as usize, j + (ty >= 0.5) as usize))
    }
}

impl MetricField for PullbackMetric {
    fn metric(&self, z: Complex64) -> Option<[f64; 3]> {
        Some([
            self.grid.bilinear(&self.g[0], z)?,
            self.grid.bilinear(&self.g[1], z)?,
            self.grid.bilinear(&self.g[2], z)?,
        ])
    }

    fn metric_derivatives(&self, z: Complex64) -> Option<([f64; 3], [f64; 3])> {
        let b = |f: &Vec<f64>| self.grid.bilinear(f, z);
        Some((
            [b(&self.dx[0])?, b(&self.dx[1])?, b(&self.dx[2])?],
            [b(&self.dy[0])?, b(&self.dy[1])?, b(&self.dy[2])?],
        ))
    }
}

/// Metric given by a closure; derivatives by centred differences.
pub struct AnalyticMetric<F> {
    f: F,
    step: f64,
}

impl<F: Fn(Complex64) -> Option<[f64; 3]>> AnalyticMetric<F> {
    pub fn new(f: F) -> Self {
        Self { f, step: 1e-5 }
    }
}

impl<F: Fn(Complex64) -> Option<[f64; 3]>> MetricField for AnalyticMetric<F> {
    fn metric(&self, z: Complex64) -> Option<[f64; 3]> {
        (self.f)(z)
    }

    fn metric_derivatives(&self, z: Complex64) -> Option<([f64; 3], [f64; 3])> {
        let h = self.step;
        let px = (self.f)(z + h)?;
        let mx = (self.f)(z - h)?;
        let py = (self.f)(z + Complex64::new(0.0, h))?;
        let my = (self.f)(z - Complex64::new(0.0, h))?;
        let d = |a: [f64; 3], b: [f64; 3]| [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h), (a[2] - b[2]) / (2.0 * h)];
        Some((d(px, mx), d(py, my)))
    }
}

/// Largest `√det g / (tr g / 2)` below which a metric counts as degenerate
/// for development.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// `√det g / (tr g / 2)`; 1 for conformal metrics, 0 for degenerate ones.
pub fn nondegeneracy<M: MetricField>(g: &M, z: Complex64) -> Option<f64> {
    let [a, b, c] = g.metric(z)?;
    let det = a * c - b * b;
    Some(if det > 0.0 { det.sqrt() / (0.5 * (a + c)) } else { 0.0 })
}

/// Oriented angle, measured in `g` at `z`, from `∂_x` to the direction `v`.
pub fn metric_angle<M: MetricField>(g: &M, z: Complex64, v: Complex64) -> Option<f64> {
    let [a, b, c] = g.metric(z)?;
    let det = (a * c - b * b).max(0.0);
    // g(e_x, v) and the area form ω(e_x, v)
    let dot = a * v.re + b * v.im;
    let cross = det.sqrt() * v.im;
    Some(cross.atan2(dot))
}

fn christoffel(gm: [f64; 3], dx: [f64; 3], dy: [f64; 3]) -> [[f64; 3]; 2] {
    // Γ^k_ij with (ij) ∈ {xx, xy, yy}
    let [a, b, c] = gm;
    let det = a * c - b * b;
    let inv = [c / det, -b / det, a / det];
    let d = |comp: usize, dir: usize| if dir == 0 { dx[comp] } else { dy[comp] };
    let gidx = |i: usize, j: usize| match (i, j) {
        (0, 0) => 0,
        (1, 1) => 2,
        _ => 1,
    };
    // Γ_{l,ij} = (∂_i g_jl + ∂_j g_il - ∂_l g_ij)/2
    let lower = |l: usize, i: usize, j: usize| 0.5 * (d(gidx(j, l), i) + d(gidx(i, l), j) - d(gidx(i, j), l));
    let inv_at = |k: usize, l: usize| match (k, l) {
        (0, 0) => inv[0],
        (1, 1) => inv[2],
        _ => inv[1],
    };
    let mut out = [[0.0; 3]; 2];
    for (k, row) in out.iter_mut().enumerate() {
        for (slot, (i, j)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            row[slot] = (0..2).map(|l| inv_at(k, l) * lower(l, i, j)).sum();
        }
    }
    out
}

fn expm3(a: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let norm: f64 = a.iter().flatten().map(|x| x.abs()).sum();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let mut x = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            x[i][j] = a[i][j] * scale;
        }
    }
    let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| p[i][k] * q[k][j]).sum();
            }
        }
        r
    };
    let mut result = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut term = result;
    for k in 1..=12 {
        term = mul(term, x);
        for i in 0..3 {
            for j in 0..3 {
                term[i][j] /= k as f64;
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(result, result);
    }
    result
}

/// Develops a densely sampled curve of the metric `g` into the disc: the
/// result has the same arclength and geodesic curvature, starts at `seed`
/// and leaves it in direction `seed_dir`.
pub fn develop_curve<M: MetricField>(
    g: &M,
    curve: &[Complex64],
    seed: DiscPoint,
    seed_dir: f64,
) -> Result<Vec<DiscPoint>, VortexError> {
    if curve.len() < 3 {
        return Err(VortexError::BadInput("curve needs at least three samples".into()));
    }
    let n = curve.len();
    // chord-length parameter
    let mut t = vec![0.0; n];
    for k in 1..n {
        t[k] = t[k - 1] + (curve[k] - curve[k - 1]).norm();
    }
    let mut speed = vec![0.0; n];
    let mut kappa = vec![0.0; n];
    for k in 0..n {
        let z = curve[k];
        let nd = nondegeneracy(g, z).ok_or(VortexError::OutsideGrid(z))?;
        if nd <= DEGENERACY_TOL {
            return Err(VortexError::DegenerateMetric(z));
        }
        // three-point derivatives on the nonuniform parameter
        let (a, b, c) = if k == 0 {
            (0, 1, 2)
        } else if k == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (k - 1, k, k + 1)
        };
        let (ta, tb, tc) = (t[a], t[b], t[c]);
        let (za, zb, zc) = (curve[a], curve[b], curve[c]);
        let tk = t[k];
        let d1 = za * ((2.0 * tk - tb - tc) / ((ta - tb) * (ta - tc)))
            + zb * ((2.0 * tk - ta - tc) / ((tb - ta) * (tb - tc)))
            + zc * ((2.0 * tk - ta - tb) / ((tc - ta) * (tc - tb)));
        let d2 = za * (2.0 / ((ta - tb) * (ta - tc))) + zb * (2.0 / ((tb - ta) * (tb - tc))) + zc * (2.0 / ((tc - ta) * (tc - tb)));
        let gm = g.metric(z).ok_or(VortexError::OutsideGrid(z))?;
        let (dx, dy) = g.metric_derivatives(z).ok_or(VortexError::OutsideGrid(z))?;
        let gam = christoffel(gm, dx, dy);
        let (u, v) = (d1.re, d1.im);
        let quad = |row: [f64; 3]| row[0] * u * u + 2.0 * row[1] * u * v + row[2] * v * v;
        let acc = [d2.re + quad(gam[0]), d2.im + quad(gam[1])];
        let sp2 = gm[0] * u * u + 2.0 * gm[1] * u * v + gm[2] * v * v;
        let sp = sp2.sqrt();
        let det = gm[0] * gm[2] - gm[1] * gm[1];
        speed[k] = sp;
        kappa[k] = det.sqrt() * (u * acc[1] - v * acc[0]) / (sp2 * sp);
    }

    // frame columns X, T, N in the hyperboloid model
    let (cs, sn) = (seed_dir.cos(), seed_dir.sin());
    let mut frame = [[1.0, 0.0, 0.0], [0.0, cs, -sn], [0.0, sn, cs]];
    let to_disc = |x: [f64; 3]| Complex64::new(x[1], x[2]) / (1.0 + x[0]);
    let place = DiscAutomorphism::to_origin(seed).inverse();
    let mut out = Vec::with_capacity(n);
    out.push(place.apply_point(DiscPoint::new(to_disc([frame[0][0], frame[1][0], frame[2][0]]))?));
    for k in 1..n {
        let ds = 0.5 * (speed[k - 1] + speed[k]) * (t[k] - t[k - 1]);
        let kg = 0.5 * (kappa[k - 1] + kappa[k]);
        // F' = F A with A acting on (X, T, N): X' = T, T' = X + kN, N' = -kT
        let a = [[0.0, ds, 0.0], [ds, 0.0, -kg * ds], [0.0, kg * ds, 0.0]];
        let e = expm3(a);
        let mut next = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                next[i][j] = (0..3).map(|l| frame[i][l] * e[l][j]).sum();
            }
        }
        frame = next;
        let x = [frame[0][0], frame[1][0], frame[2][0]];
        let z = to_disc(x);
        let z = if z.norm() >= 1.0 { z / (z.norm() * (1.0 + 1e-15)) } else { z };
        out.push(place.apply_point(DiscPoint::new(z)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaMode {
    /// Closed-form angle from the measured ν.
    Formula,
    /// Vertex angles of developed radial curves.
    Develop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMeasurement {
    pub alpha_hat: f64,
    pub mode: AlphaMode,
    pub nu_hat: Option<f64>,
    /// Developed endpoint arguments in end-domain order (develop mode).
    pub vertex_angles: Vec<f64>,
}

/// Measures the image polygon angle `α` in `(0, π/(m+1)]`.
pub fn measure_alpha(sol: &VortexSolution, l: f64, mode: AlphaMode) -> Result<AlphaMeasurement, VortexError> {
    let f = sol
        .family
        .ok_or_else(|| VortexError::BadInput("measure_alpha needs a family solution".into()))?;
    let m = f.m();
    match mode {
        AlphaMode::Formula => {
            let nu = extract_nu(sol, l)?.nu_hat;
            Ok(AlphaMeasurement {
                alpha_hat: alpha_of_nu(m, nu),
                mode,
                nu_hat: Some(nu),
                vertex_angles: Vec::new(),
            })
        }
        AlphaMode::Develop => {
            let metric = PullbackMetric::from_solution(sol);
            let angles = develop_end_domains(sol, &metric, 1e-3)?;
            let sector = PI / (m as f64 + 1.0);
            let gaps: Vec<f64> = (0..=m as usize)
                .map(|k| (angles[2 * k + 1] - angles[2 * k]).rem_euclid(2.0 * PI))
                .collect();
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            let alpha_hat = if mean > sector { 2.0 * sector - mean } else { mean };
            Ok(AlphaMeasurement {
                alpha_hat,
                mode,
                nu_hat: None,
                vertex_angles: angles,
            })
        }
    }
}

/// Develops the radial curves from the origin through the centres of the
/// `2m + 2` vertical end domains, stopping where the metric's
/// nondegeneracy drops below `min_nondegeneracy`; returns the arguments
/// of the developed endpoints.
pub fn develop_end_domains(
    sol: &VortexSolution,
    metric: &PullbackMetric,
    min_nondegeneracy: f64,
) -> Result<Vec<f64>, VortexError> {
    let f = sol
        .family
        .ok_or_else(|| VortexError::BadInput("needs a family solution".into()))?;
    let m = f.m() as usize;
    let spacing = PI / (m as f64 + 1.0);
    let step = 0.5 * sol.grid.h;
    let r_max = sol.grid.radius - 2.0 * sol.grid.h;
    let origin = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(2 * m + 2);
    for i in 0..2 * m + 2 {
        let dir = Complex64::from_polar(1.0, i as f64 * spacing);
        let mut curve = vec![origin];
        let mut r = step;
        while r <= r_max {
            let z = dir * r;
            match nondegeneracy(metric, z) {
                Some(nd) if nd >= min_nondegeneracy => curve.push(z),
                _ => break,
            }
            r += step;
        }
        if curve.len() < 10 {
            return Err(VortexError::RegionTooSmall(format!("radial curve {i} is too short")));
        }
        let seed_dir = metric_angle(metric, origin, dir).ok_or(VortexError::OutsideGrid(origin))?;
        let dev = develop_curve(metric, &curve, DiscPoint::origin(), seed_dir)?;
        out.push(dev.last().map(|p| p.z().arg()).unwrap_or(0.0));
    }
    Ok(out)
}
