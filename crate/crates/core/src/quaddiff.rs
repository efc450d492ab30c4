//! Natural parameter `ζ = ∫ √P dz` of a polynomial quadratic differential
//! `P(z) dz²`: branch-continuous path integration, horizontal/vertical
//! measures, critical directions at zeros, and leaf tracing.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::polyfield::{roots, ComplexPoly, PolyError, RootCluster};
use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadDiffError {
    #[error("path passes within the exclusion radius of the zero at {zero}")]
    ZeroOnPath { zero: Complex64 },
    #[error("could not keep a continuous branch of sqrt(P) near {at}")]
    BranchJump { at: Complex64 },
    #[error("{point} is not a zero of P (|P| = {value:e})")]
    NotAZero { point: Complex64, value: f64 },
    #[error("seed {seed} lies inside the exclusion disc of the zero at {zero}")]
    SeedTooCloseToZero { seed: Complex64, zero: Complex64 },
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Which foliation of `P dz²` a leaf belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Foliation {
    /// `Im ζ` constant along leaves.
    Horizontal,
    /// `Re ζ` constant along leaves.
    Vertical,
}

impl Foliation {
    /// Unit direction of `dζ` along a leaf of this kind.
    pub fn zeta_direction(self) -> Complex64 {
        match self {
            Foliation::Horizontal => Complex64::new(1.0, 0.0),
            Foliation::Vertical => Complex64::new(0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Foliation::Horizontal => "horizontal",
            Foliation::Vertical => "vertical",
        }
    }
}

impl std::str::FromStr for Foliation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "horizontal" => Ok(Foliation::Horizontal),
            "vertical" => Ok(Foliation::Vertical),
            other => Err(format!("unknown foliation '{other}'")),
        }
    }
}

/// One vertex of a [`NaturalPath`] with the accumulated measures up to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub z: Complex64,
    pub zeta: Complex64,
    pub hlen: f64,
    pub vlen: f64,
    pub philen: f64,
}

/// A polyline with the branch-continuous integral of `√P dz` accumulated
/// along it.
///
/// `hlen` accumulates `|d Re ζ|`, `vlen` accumulates `|d Im ζ|` and `philen`
/// accumulates `|dζ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalPath {
    samples: Vec<PathSample>,
    start_branch: Complex64,
    end_branch: Complex64,
}

impl NaturalPath {
    pub fn samples(&self) -> &[PathSample] {
        &self.samples
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.z).collect()
    }

    fn last(&self) -> &PathSample {
        self.samples.last().expect("paths are never empty")
    }

    /// `ζ(end) - ζ(start)`.
    pub fn zeta(&self) -> Complex64 {
        self.last().zeta - self.samples[0].zeta
    }

    pub fn hlen(&self) -> f64 {
        self.last().hlen
    }

    pub fn vlen(&self) -> f64 {
        self.last().vlen
    }

    pub fn philen(&self) -> f64 {
        self.last().philen
    }

    /// Value of the √P branch used at the first point (zero if the path
    /// starts at a zero of P).
    pub fn start_branch(&self) -> Complex64 {
        self.start_branch
    }

    /// Value of the √P branch reached at the last point.
    pub fn end_branch(&self) -> Complex64 {
        self.end_branch
    }

    /// Appends `other`, which must start where `self` ends. Accumulators of
    /// `other` are offset by the totals of `self`.
    pub fn concat(&self, other: &NaturalPath) -> NaturalPath {
        let base = *self.last();
        let z0 = other.samples[0].zeta;
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().skip(1).map(|s| PathSample {
            z: s.z,
            zeta: base.zeta + (s.zeta - z0),
            hlen: base.hlen + s.hlen,
            vlen: base.vlen + s.vlen,
            philen: base.philen + s.philen,
        }));
        NaturalPath {
            samples,
            start_branch: self.start_branch,
            end_branch: other.end_branch,
        }
    }

    /// The same polyline walked backwards; `ζ` is negated relative to the
    /// new start and the branches swap ends.
    pub fn reversed(&self) -> NaturalPath {
        let last = *self.last();
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| PathSample {
                z: s.z,
                zeta: s.zeta - last.zeta,
                hlen: last.hlen - s.hlen,
                vlen: last.vlen - s.vlen,
                philen: last.philen - s.philen,
            })
            .collect();
        NaturalPath {
            samples,
            start_branch: self.end_branch,
            end_branch: self.start_branch,
        }
    }

    /// Applies `z ↦ w z` to every point, keeping the accumulated values.
    pub fn rotated(&self, w: Complex64) -> NaturalPath {
        let mut out = self.clone();
        for s in &mut out.samples {
            s.z *= w;
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZetaConfig {
    /// Exclusion radius around a zero is `exclusion_eps * (1 + |zero|)`.
    pub exclusion_eps: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Limit on bisections performed to keep the branch continuous.
    pub max_split_depth: u32,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        Self {
            exclusion_eps: 1e-3,
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_panels: 400,
            max_split_depth: 40,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TraceConfig {
    /// Largest step in Φ-length.
    pub max_step: f64,
    /// Allowed `ζ` error per unit Φ-length for one step.
    pub tol: f64,
    /// `None` selects `10 (1 + max |zero|)`.
    pub escape_radius: Option<f64>,
    pub max_steps: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            max_step: 0.1,
            tol: 1e-10,
            escape_radius: None,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    LengthBudget,
    NearZero,
    EscapedRadius,
    StepLimit,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::LengthBudget => "length-budget",
            Termination::NearZero => "near-zero",
            Termination::EscapedRadius => "escaped-radius",
            Termination::StepLimit => "step-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracedTrajectory {
    pub kind: Foliation,
    pub seed: Complex64,
    pub direction: i8,
    pub path: NaturalPath,
    pub terminated: Termination,
}

impl TracedTrajectory {
    /// Largest departure of `ζ` from the leaf through the seed, measured
    /// transversally (`|Im Δζ|` for horizontal, `|Re Δζ|` for vertical).
    pub fn drift(&self) -> f64 {
        let d = self.kind.zeta_direction();
        let z0 = self.path.samples[0].zeta;
        self.path
            .samples
            .iter()
            .map(|s| ((s.zeta - z0) * d.conj()).im.abs())
            .fold(0.0, f64::max)
    }

    pub fn end(&self) -> Complex64 {
        self.path.samples.last().map(|s| s.z).unwrap_or(self.seed)
    }
}

/// `P(z) dz²` together with its zeros.
#[derive(Debug, Clone)]
pub struct QuadraticDifferential {
    p: ComplexPoly,
    zeros: Vec<RootCluster>,
    cfg: ZetaConfig,
}

struct Segment {
    dzeta: Complex64,
    hlen: f64,
    vlen: f64,
    philen: f64,
    end_branch: Complex64,
}

impl QuadraticDifferential {
    pub fn new(p: ComplexPoly) -> Result<Self, QuadDiffError> {
        Self::with_config(p, ZetaConfig::default())
    }

    pub fn with_config(p: ComplexPoly, cfg: ZetaConfig) -> Result<Self, QuadDiffError> {
        if p.is_zero() {
            return Err(QuadDiffError::BadInput("P is identically zero".into()));
        }
        let zeros = match p.degree() {
            Some(0) => Vec::new(),
            _ => roots(&p, 1e-12)?,
        };
        Ok(Self { p, zeros, cfg })
    }

    pub fn poly(&self) -> &ComplexPoly {
        &self.p
    }

    pub fn zeros(&self) -> &[RootCluster] {
        &self.zeros
    }

    pub fn config(&self) -> &ZetaConfig {
        &self.cfg
    }

    pub fn exclusion_radius(&self, zero: Complex64) -> f64 {
        self.cfg.exclusion_eps * (1.0 + zero.norm())
    }

    /// `10 (1 + max |zero|)`.
    pub fn default_escape_radius(&self) -> f64 {
        let rmax = self.zeros.iter().map(|z| z.root.norm()).fold(0.0, f64::max);
        10.0 * (1.0 + rmax)
    }

    fn zero_near(&self, z: Complex64) -> Option<Complex64> {
        self.zeros
            .iter()
            .map(|r| r.root)
            .find(|&r| (z - r).norm() <= self.exclusion_radius(r))
    }

    /// The square root of `P(z)` closest to `reference`.
    pub fn sqrt_near(&self, z: Complex64, reference: Complex64) -> Complex64 {
        let s = self.p.eval(z).sqrt();
        if (s - reference).norm() <= (s + reference).norm() {
            s
        } else {
            -s
        }
    }

    /// Integrates `√P dz` along `polyline`, splitting segments longer than
    /// `max_step`. The branch at the first point is the principal one unless
    /// `initial_branch` is given, in which case the root closest to it is
    /// used. The first and last points may be zeros of `P`.
    pub fn integrate(
        &self,
        polyline: &[Complex64],
        max_step: f64,
        initial_branch: Option<Complex64>,
    ) -> Result<NaturalPath, QuadDiffError> {
        if polyline.is_empty() {
            return Err(QuadDiffError::BadInput("empty polyline".into()));
        }
        if !(max_step > 0.0) {
            return Err(QuadDiffError::BadInput("max_step must be positive".into()));
        }
        let n = polyline.len();
        let start_zero = self.zero_near(polyline[0]);
        let end_zero = if n > 1 { self.zero_near(polyline[n - 1]) } else { None };

        // interior clearance
        for (i, w) in polyline.windows(2).enumerate() {
            for r in self.zeros.iter().map(|r| r.root) {
                let rad = self.exclusion_radius(r);
                let touches_start = i == 0 && start_zero == Some(r);
                let touches_end = i == n - 2 && end_zero == Some(r);
                let d = segment_distance(w[0], w[1], r);
                if d <= rad && !touches_start && !touches_end {
                    return Err(QuadDiffError::ZeroOnPath { zero: r });
                }
                if d <= rad && (touches_start || touches_end) {
                    // the segment may only meet the zero at that endpoint
                    let other = if touches_start { w[1] } else { w[0] };
                    if (other - r).norm() <= rad && polyline.len() > 2 {
                        return Err(QuadDiffError::ZeroOnPath { zero: r });
                    }
                }
            }
        }

        let mut branch = match (start_zero, initial_branch) {
            (Some(_), Some(b)) => b,
            (Some(_), None) => {
                // principal branch just off the zero, in the direction of travel
                let dir = if n > 1 { polyline[1] - polyline[0] } else { Complex64::new(1.0, 0.0) };
                self.p.eval(polyline[0] + dir * 1e-6).sqrt()
            }
            (None, Some(b)) => self.sqrt_near(polyline[0], b),
            (None, None) => self.p.eval(polyline[0]).sqrt(),
        };
        let start_branch = if start_zero.is_some() {
            Complex64::new(0.0, 0.0)
        } else {
            branch
        };

        let mut samples = Vec::with_capacity(n);
        let mut acc = PathSample {
            z: polyline[0],
            zeta: Complex64::new(0.0, 0.0),
            hlen: 0.0,
            vlen: 0.0,
            philen: 0.0,
        };
        samples.push(acc);
        for (i, w) in polyline.windows(2).enumerate() {
            let zero_start = i == 0 && start_zero.is_some();
            let zero_end = i == n - 2 && end_zero.is_some();
            let seg = self.integrate_segment(w[0], w[1], branch, max_step, zero_start, zero_end)?;
            branch = seg.end_branch;
            acc = PathSample {
                z: w[1],
                zeta: acc.zeta + seg.dzeta,
                hlen: acc.hlen + seg.hlen,
                vlen: acc.vlen + seg.vlen,
                philen: acc.philen + seg.philen,
            };
            samples.push(acc);
        }
        Ok(NaturalPath {
            samples,
            start_branch,
            end_branch: if end_zero.is_some() { Complex64::new(0.0, 0.0) } else { branch },
        })
    }

    fn integrate_segment(
        &self,
        z0: Complex64,
        z1: Complex64,
        branch0: Complex64,
        max_step: f64,
        zero_start: bool,
        zero_end: bool,
    ) -> Result<Segment, QuadDiffError> {
        let len = (z1 - z0).norm();
        let mut out = Segment {
            dzeta: Complex64::new(0.0, 0.0),
            hlen: 0.0,
            vlen: 0.0,
            philen: 0.0,
            end_branch: branch0,
        };
        if len == 0.0 {
            return Ok(out);
        }
        let pieces = ((len / max_step).ceil() as usize).max(if zero_start && zero_end { 2 } else { 1 });
        let dz = z1 - z0;
        let at = |t: f64| z0 + dz * t;

        // (t0, t1, depth)
        let mut stack: Vec<(f64, f64, u32)> = (0..pieces)
            .rev()
            .map(|k| (k as f64 / pieces as f64, (k + 1) as f64 / pieces as f64, 0))
            .collect();
        let mut branch = branch0;
        while let Some((t0, t1, depth)) = stack.pop() {
            let singular_start = zero_start && t0 == 0.0;
            let singular_end = zero_end && t1 == 1.0;
            // reference branch inside the piece when it starts at a zero
            let reference = if singular_start {
                if branch.norm() > 0.0 {
                    self.sqrt_near(at(t0 + (t1 - t0) * 1e-6), branch)
                } else {
                    self.p.eval(at(t0 + (t1 - t0) * 1e-6)).sqrt()
                }
            } else {
                branch
            };
            // continuity probe along the piece
            let probes = 16;
            let mut prev = reference;
            let mut ok = true;
            for k in 1..=probes {
                let frac = k as f64 / probes as f64;
                let t = if singular_end && k == probes {
                    t0 + (t1 - t0) * (1.0 - 1e-6)
                } else {
                    t0 + (t1 - t0) * frac
                };
                let s = self.sqrt_near(at(t), prev);
                let step_ang = angle_between(s, prev);
                let total_ang = angle_between(s, reference);
                if step_ang > FRAC_PI_4 / 2.0 || total_ang > FRAC_PI_4 {
                    ok = false;
                    break;
                }
                if s.norm() > 0.0 {
                    prev = s;
                }
            }
            if !ok {
                if depth >= self.cfg.max_split_depth {
                    return Err(QuadDiffError::BranchJump { at: at(t0) });
                }
                let tm = 0.5 * (t0 + t1);
                stack.push((tm, t1, depth + 1));
                stack.push((t0, tm, depth + 1));
                continue;
            }

            let eval = |t: f64| -> [f64; 5] {
                let s = self.sqrt_near(at(t), reference);
                let dzeta = s * dz;
                [dzeta.re, dzeta.im, dzeta.re.abs(), dzeta.im.abs(), dzeta.norm()]
            };
            let h = t1 - t0;
            let (v, _err) = match (singular_start, singular_end) {
                (true, true) => unreachable!("pieces are split when both ends are zeros"),
                (true, false) => quad::integrate(
                    |tau| scale(eval(t0 + h * tau * tau), 2.0 * tau * h),
                    0.0,
                    1.0,
                    self.cfg.abs_tol,
                    self.cfg.rel_tol,
                    self.cfg.max_panels,
                ),
                (false, true) => quad::integrate(
                    |tau| scale(eval(t1 - h * tau * tau), 2.0 * tau * h),
                    0.0,
                    1.0,
                    self.cfg.abs_tol,
                    self.cfg.rel_tol,
                    self.cfg.max_panels,
                ),
                (false, false) => quad::integrate(
                    eval,
                    t0,
                    t1,
                    self.cfg.abs_tol,
                    self.cfg.rel_tol,
                    self.cfg.max_panels,
                ),
            };
            out.dzeta += Complex64::new(v[0], v[1]);
            out.hlen += v[2];
            out.vlen += v[3];
            out.philen += v[4];
            branch = if singular_end {
                prev
            } else {
                self.sqrt_near(at(t1), prev)
            };
        }
        out.end_branch = branch;
        Ok(out)
    }

    /// Limiting directions, in `[0, 2π)`, of the `n + 2` critical leaves of
    /// the given kind at a zero of order `n`.
    pub fn critical_directions(
        &self,
        zero: Complex64,
        kind: Foliation,
    ) -> Result<Vec<f64>, QuadDiffError> {
        critical_directions(&self.p, zero, kind)
    }

    /// Follows the leaf of `kind` through `seed` at unit Φ-speed.
    ///
    /// `direction = +1` moves so that `ζ` advances along `+1` (horizontal)
    /// or `+i` (vertical) in the principal branch at the seed; `-1` reverses.
    pub fn trace(
        &self,
        seed: Complex64,
        kind: Foliation,
        direction: i8,
        budget: f64,
        cfg: &TraceConfig,
    ) -> Result<TracedTrajectory, QuadDiffError> {
        self.trace_from_branch(seed, kind, direction, budget, cfg, None)
    }

    /// As [`trace`](Self::trace), with the √P branch at the seed chosen
    /// closest to `branch` (when given).
    pub fn trace_from_branch(
        &self,
        seed: Complex64,
        kind: Foliation,
        direction: i8,
        budget: f64,
        cfg: &TraceConfig,
        branch: Option<Complex64>,
    ) -> Result<TracedTrajectory, QuadDiffError> {
        if !(budget > 0.0) {
            return Err(QuadDiffError::BadInput("budget must be positive".into()));
        }
        if direction != 1 && direction != -1 {
            return Err(QuadDiffError::BadInput("direction must be +1 or -1".into()));
        }
        if let Some(zero) = self.zero_near(seed) {
            return Err(QuadDiffError::SeedTooCloseToZero { seed, zero });
        }
        let escape = cfg.escape_radius.unwrap_or_else(|| self.default_escape_radius());
        // unit dζ/ds along the trace
        let v = kind.zeta_direction() * direction as f64;

        let mut s_ref = match branch {
            Some(b) => self.sqrt_near(seed, b),
            None => self.p.eval(seed).sqrt(),
        };
        let start_branch = s_ref;
        let mut z = seed;
        let mut acc = PathSample {
            z,
            zeta: Complex64::new(0.0, 0.0),
            hlen: 0.0,
            vlen: 0.0,
            philen: 0.0,
        };
        let mut samples = vec![acc];
        let mut h = cfg.max_step.min(budget);
        let mut terminated = Termination::StepLimit;

        for _ in 0..cfg.max_steps {
            // progress along the leaf, in Φ-length
            let s_done = (acc.zeta * v.conj()).re;
            let remaining = budget - s_done;
            if remaining <= 1e-12 * budget.max(1.0) {
                terminated = Termination::LengthBudget;
                break;
            }
            if self.nearest_zero_ratio(z) < 2.0 {
                terminated = Termination::NearZero;
                break;
            }
            if z.norm() > escape {
                terminated = Termination::EscapedRadius;
                break;
            }
            h = h.min(remaining).min(cfg.max_step);

            let field = |w: Complex64| -> Option<Complex64> {
                let sp = self.sqrt_near(w, s_ref);
                if sp.norm() == 0.0 || angle_between(sp, s_ref) > FRAC_PI_4 {
                    None
                } else {
                    Some(v / sp)
                }
            };
            let Some((z5, z4)) = dopri_step(&field, z, h) else {
                h *= 0.5;
                if h < 1e-14 {
                    return Err(QuadDiffError::BranchJump { at: z });
                }
                continue;
            };
            let p_new = self.p.eval(z5).sqrt().norm();
            let err = p_new * (z5 - z4).norm();
            let allowed = cfg.tol * h;
            // step must not cut into an exclusion disc
            let clear = self.zeros.iter().all(|r| {
                segment_distance(z, z5, r.root) > self.exclusion_radius(r.root)
            });
            if err > allowed || !clear {
                let factor = if err > 0.0 { 0.9 * (allowed / err).powf(0.2) } else { 0.5 };
                h *= factor.clamp(0.1, 0.5);
                if h < 1e-14 {
                    terminated = Termination::NearZero;
                    break;
                }
                continue;
            }

            // project back onto the leaf, then integrate the chord exactly
            let mut z_new = z5;
            let mut seg = self.integrate_segment(z, z_new, s_ref, f64::INFINITY, false, false)?;
            for _ in 0..2 {
                let target = acc.zeta + seg.dzeta;
                let off = (target * v.conj()).im;
                if off.abs() <= 1e-15 * (1.0 + target.norm()) {
                    break;
                }
                let sp = seg.end_branch;
                z_new -= Complex64::new(0.0, 1.0) * v * off / sp;
                seg = self.integrate_segment(z, z_new, s_ref, f64::INFINITY, false, false)?;
            }

            z = z_new;
            s_ref = seg.end_branch;
            acc = PathSample {
                z,
                zeta: acc.zeta + seg.dzeta,
                hlen: acc.hlen + seg.hlen,
                vlen: acc.vlen + seg.vlen,
                philen: acc.philen + seg.philen,
            };
            samples.push(acc);
            let grow = if err > 0.0 { 0.9 * (allowed / err).powf(0.2) } else { 2.0 };
            h *= grow.clamp(1.0, 2.0);
        }

        Ok(TracedTrajectory {
            kind,
            seed,
            direction,
            path: NaturalPath {
                samples,
                start_branch,
                end_branch: s_ref,
            },
            terminated,
        })
    }

    /// Smallest `|z - zero| / exclusion_radius(zero)` over all zeros.
    fn nearest_zero_ratio(&self, z: Complex64) -> f64 {
        self.zeros
            .iter()
            .map(|r| (z - r.root).norm() / self.exclusion_radius(r.root))
            .fold(f64::INFINITY, f64::min)
    }
}

fn scale<const N: usize>(mut v: [f64; N], s: f64) -> [f64; N] {
    for x in &mut v {
        *x *= s;
    }
    v
}

fn angle_between(a: Complex64, b: Complex64) -> f64 {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return 0.0;
    }
    (a / b).arg().abs()
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub(crate) fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / l2).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

/// One Dormand-Prince 5(4) step; returns the fifth- and fourth-order
/// solutions, or `None` if the field is undefined at a stage.
fn dopri_step<F>(f: &F, z: Complex64, h: f64) -> Option<(Complex64, Complex64)>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let k1 = f(z)?;
    let k2 = f(z + k1 * (h / 5.0))?;
    let k3 = f(z + (k1 * (3.0 / 40.0) + k2 * (9.0 / 40.0)) * h)?;
    let k4 = f(z + (k1 * (44.0 / 45.0) - k2 * (56.0 / 15.0) + k3 * (32.0 / 9.0)) * h)?;
    let k5 = f(z
        + (k1 * (19372.0 / 6561.0) - k2 * (25360.0 / 2187.0) + k3 * (64448.0 / 6561.0)
            - k4 * (212.0 / 729.0))
            * h)?;
    let k6 = f(z
        + (k1 * (9017.0 / 3168.0) - k2 * (355.0 / 33.0)
            + k3 * (46732.0 / 5247.0)
            + k4 * (49.0 / 176.0)
            - k5 * (5103.0 / 18656.0))
            * h)?;
    let z5 = z
        + (k1 * (35.0 / 384.0) + k3 * (500.0 / 1113.0) + k4 * (125.0 / 192.0)
            - k5 * (2187.0 / 6784.0)
            + k6 * (11.0 / 84.0))
            * h;
    let k7 = f(z5)?;
    let z4 = z
        + (k1 * (5179.0 / 57600.0) + k3 * (7571.0 / 16695.0) + k4 * (393.0 / 640.0)
            - k5 * (92097.0 / 339200.0)
            + k6 * (187.0 / 2100.0)
            + k7 * (1.0 / 40.0))
            * h;
    Some((z5, z4))
}

/// Convenience wrapper: `∫ √P dz` along `polyline` with default settings.
pub fn integrate_zeta(
    p: &ComplexPoly,
    polyline: &[Complex64],
    max_step: f64,
) -> Result<NaturalPath, QuadDiffError> {
    QuadraticDifferential::new(p.clone())?.integrate(polyline, max_step, None)
}

/// `I(m) = ∫₀¹ √(t^{m-1} (1 - t^{m+1})) dt`, integrated with square-root
/// endpoint substitutions on both halves of the interval.
pub fn family_edge_integral(m: u32) -> f64 {
    assert!(m >= 1, "m must be at least 1");
    let mf = m as f64;
    let f = |t: f64| -> f64 {
        let one_minus = if t > 0.5 {
            // 1 - t^{m+1} without cancellation
            -((mf + 1.0) * (t.ln())).exp_m1()
        } else {
            1.0 - t.powf(mf + 1.0)
        };
        (t.powf(mf - 1.0) * one_minus.max(0.0)).sqrt()
    };
    // t = τ²/2 on [0, 1/2] and t = 1 - τ²/2 on [1/2, 1]
    let (left, _) = quad::integrate(|tau| [f(0.5 * tau * tau) * tau], 0.0, 1.0, 1e-16, 1e-15, 200);
    let (right, _) = quad::integrate(
        |tau| {
            let t = 1.0 - 0.5 * tau * tau;
            [f(t) * tau]
        },
        0.0,
        1.0,
        1e-16,
        1e-15,
        200,
    );
    left[0] + right[0]
}

/// Limiting directions of critical trajectories at a zero of `p`.
pub fn critical_directions(
    p: &ComplexPoly,
    zero: Complex64,
    kind: Foliation,
) -> Result<Vec<f64>, QuadDiffError> {
    let taylor = p.taylor_at(zero);
    let scale: f64 = taylor.iter().map(|c| c.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    let tol = 1e-8 * scale;
    if taylor[0].norm() > tol {
        return Err(QuadDiffError::NotAZero {
            point: zero,
            value: taylor[0].norm(),
        });
    }
    let (n, lead) = taylor
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, c)| c.norm() > tol)
        .map(|(j, c)| (j, *c))
        .ok_or_else(|| QuadDiffError::BadInput("P vanishes identically near the point".into()))?;
    // ζ ≈ (2/(n+2)) √lead (z - z0)^{(n+2)/2}
    let k = (n + 2) as f64;
    let offset = match kind {
        Foliation::Horizontal => 0.0,
        Foliation::Vertical => PI,
    };
    let mut dirs: Vec<f64> = (0..n + 2)
        .map(|j| ((2.0 * PI * j as f64 + offset - lead.arg()) / k).rem_euclid(2.0 * PI))
        .collect();
    dirs.sort_by(f64::total_cmp);
    Ok(dirs)
}
