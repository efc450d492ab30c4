//! Closed-form ideal polygon bounding the image of the complete harmonic
//! embedding with Hopf differential `[z^{2m} - c z^{m-1}] dz²`.
//!
//! The polygon has vertices `{ω^k, ω^k e^{iα}}` with `ω = e^{2πi/(m+1)}` and
//! `tan(α/2) = sin(π/(m+1)) / (cos(π/(m+1)) + e^{2ν})`, `ν = π|b|/(2(m+1))`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::hypdisc::{HypError, IdealPolygon};
use crate::polyfield::SymmetricFamily;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("no sign change of the asymptotic system on (0, 2π/(m+1)) for m = {m}, ν = {nu}")]
    NoRoot { m: u32, nu: f64 },
    #[error("only m = 1 is supported, got m = {0}")]
    UnsupportedM(u32),
    #[error("measured ν = {measured} disagrees with {expected} by more than 1e-8")]
    NuMismatch { measured: f64, expected: f64 },
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Polygon(#[from] HypError),
}

/// Predicted image polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonPrediction {
    pub m: u32,
    pub nu: f64,
    pub alpha: f64,
}

impl PolygonPrediction {
    /// Vertex arguments `{2πk/(m+1), 2πk/(m+1) + α}`, ascending.
    pub fn vertex_angles(&self) -> Vec<f64> {
        family_angles(self.m, self.alpha)
    }

    /// The polygon itself. Fails when `α` is so close to `0` or
    /// `2π/(m+1)` that paired vertices coincide in floating point.
    pub fn polygon(&self) -> Result<IdealPolygon, ImageError> {
        family_polygon(self.m, self.alpha)
    }
}

fn family_angles(m: u32, alpha: f64) -> Vec<f64> {
    let step = 2.0 * sector(m);
    (0..=m)
        .flat_map(|k| [k as f64 * step, k as f64 * step + alpha])
        .collect()
}

fn sector(m: u32) -> f64 {
    PI / (m as f64 + 1.0)
}

/// `α` for a given `ν` on the branch in `(0, π/(m+1)]`.
pub fn alpha_of_nu(m: u32, nu: f64) -> f64 {
    let t = sector(m);
    2.0 * (t.sin() / (t.cos() + (2.0 * nu).exp())).atan()
}

/// `α` on the other branch, in `[π/(m+1), 2π/(m+1))`.
pub fn alpha_other_of_nu(m: u32, nu: f64) -> f64 {
    let t = sector(m);
    2.0 * (t.sin() / (t.cos() + (-2.0 * nu).exp())).atan()
}

/// Polygon with vertices `{ω^k, ω^k e^{iα}}`, `0 < α < 2π/(m+1)`.
pub fn family_polygon(m: u32, alpha: f64) -> Result<IdealPolygon, ImageError> {
    let step = 2.0 * sector(m);
    if !(alpha > 0.0 && alpha < step) {
        return Err(ImageError::BadInput(format!("α = {alpha} outside (0, {step})")));
    }
    Ok(IdealPolygon::from_angles(&family_angles(m, alpha))?)
}

/// Prediction for a given edge length `ν >= 0`.
pub fn predict_from_nu(m: u32, nu: f64) -> Result<PolygonPrediction, ImageError> {
    if m == 0 || !(nu >= 0.0) || !nu.is_finite() {
        return Err(ImageError::BadInput(format!("m = {m}, ν = {nu}")));
    }
    Ok(PolygonPrediction {
        m,
        nu,
        alpha: alpha_of_nu(m, nu),
    })
}

/// The predicted image polygon. Depends on `m` and `|b|` only.
pub fn predict(f: &SymmetricFamily) -> PolygonPrediction {
    predict_from_nu(f.m(), f.nu()).expect("ν of a valid family is finite and nonnegative")
}

/// As [`predict`], with an independently measured `ν` that must agree with
/// the closed form to `1e-8`.
pub fn predict_with_measured_nu(f: &SymmetricFamily, measured: f64) -> Result<PolygonPrediction, ImageError> {
    let expected = f.nu();
    if (measured - expected).abs() > 1e-8 {
        return Err(ImageError::NuMismatch { measured, expected });
    }
    Ok(predict(f))
}

/// The prediction with the alternate vertex labeling, `α' = 2π/(m+1) - α`.
pub fn other_branch(pred: &PolygonPrediction) -> PolygonPrediction {
    PolygonPrediction {
        m: pred.m,
        nu: pred.nu,
        alpha: alpha_other_of_nu(pred.m, pred.nu),
    }
}

/// Solution of `√A e^{-2ν} = sin(α/2)`, `√A = sin(π/(m+1) - α/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSolution {
    pub alpha: f64,
    pub a: f64,
}

/// Solves the asymptotic system by bisection on `α ∈ (0, 2π/(m+1))`.
pub fn solve_asymptotic_system(m: u32, nu: f64) -> Result<AsymptoticSolution, ImageError> {
    if m == 0 || !(nu >= 0.0) {
        return Err(ImageError::BadInput(format!("m = {m}, ν = {nu}")));
    }
    let t = sector(m);
    let k = (-2.0 * nu).exp();
    let g = |alpha: f64| (0.5 * alpha).sin() - k * (t - 0.5 * alpha).sin();
    let (mut lo, mut hi) = (0.0, 2.0 * t);
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo < 0.0 && ghi > 0.0) {
        return Err(ImageError::NoRoot { m, nu });
    }
    while hi - lo > 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok(AsymptoticSolution {
        alpha,
        a: (t - 0.5 * alpha).sin().powi(2),
    })
}

/// `b ↦ α(b) = 2 atan(sin(π/(m+1)) / (cos(π/(m+1)) + e^{bπ/(m+1)}))`, a
/// decreasing bijection `ℝ → (0, 2π/(m+1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleFunction {
    pub m: u32,
}

impl AngleFunction {
    pub fn new(m: u32) -> Self {
        assert!(m >= 1, "m must be at least 1");
        Self { m }
    }

    pub fn eval(&self, b: f64) -> f64 {
        let t = sector(self.m);
        let positive = |b: f64| 2.0 * (t.sin() / (t.cos() + (b * t).exp())).atan();
        if b >= 0.0 {
            positive(b)
        } else {
            // keeps the small complementary angle accurate
            2.0 * t - positive(-b)
        }
    }

    pub fn polygon(&self, b: f64) -> Result<IdealPolygon, ImageError> {
        family_polygon(self.m, self.eval(b))
    }
}

/// For `m = 1`: whether the image is the regular ideal quadrilateral.
pub fn classify_shi_tam(f: &SymmetricFamily) -> Result<bool, ImageError> {
    if f.m() != 1 {
        return Err(ImageError::UnsupportedM(f.m()));
    }
    let square = IdealPolygon::regular(4)?;
    Ok(predict(f).polygon()?.equivalent(&square, 1e-9))
}
