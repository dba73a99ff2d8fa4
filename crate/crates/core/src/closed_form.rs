//! Closed-form transition densities on the line and the half-line.
//!
//! Sign conventions:
//!
//! * [`BangBangParams::beta`] is the magnitude of the drift `β·sgn(Z − center)`, so a
//!   positive value pushes away from the center and a negative value pulls toward it.
//! * [`reflected_drift_density`] takes the signed constant drift toward `+∞`.
//! * [`q_kappa_explicit`] and [`optimal_bounds`] take a nonnegative `κ` and pull toward `0`.

use core::f64::consts::PI;

use libm::{exp, fabs, sqrt};

use crate::error::ensure;
use crate::special::{exp_times_sf, mills_ratio, norm_pdf, norm_sf};
use crate::Result;

/// Arguments of a heat-kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelQuery {
    pub t: f64,
    pub x: f64,
    pub z: f64,
}

impl HeatKernelQuery {
    pub fn eval(&self) -> Result<f64> {
        heat_kernel(self.t, self.x, self.z)
    }
}

/// Parameters of the bang-bang drift `β·sgn(Z − center)` on the whole line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangBangParams {
    pub beta: f64,
    pub center: f64,
}

/// Lower and upper density bounds over all drifts with `|b| ≤ κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBounds {
    pub lower: f64,
    pub upper: f64,
}

impl DensityBounds {
    pub fn contains(&self, value: f64, slack: f64) -> bool {
        value >= self.lower - slack && value <= self.upper + slack
    }
}

fn check_time(t: f64) -> Result<()> {
    ensure!(t > 0.0 && t.is_finite(), Domain, "time must be positive and finite, got {t}");
    Ok(())
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    ensure!(v.is_finite(), Domain, "{name} must be finite, got {v}");
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    ensure!(v >= 0.0 && v.is_finite(), Domain, "{name} must be nonnegative and finite, got {v}");
    Ok(())
}

#[inline]
pub(crate) fn gauss(t: f64, d: f64) -> f64 {
    exp(-d * d / (2.0 * t)) / sqrt(2.0 * PI * t)
}

/// `(2πt)^{-1/2} exp(−(x−z)²/2t)`.
pub fn heat_kernel(t: f64, x: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    check_finite("x", x)?;
    check_finite("z", z)?;
    Ok(gauss(t, x - z))
}

/// Bang-bang density centered at zero with outward drift `beta`.
pub(crate) fn bang_bang_centered(beta: f64, x: f64, t: f64, z: f64) -> f64 {
    let (ax, az) = (fabs(x), fabs(z));
    let d = x - z;
    let gauss_part = exp(-d * d / (2.0 * t) + beta * (az - ax) - 0.5 * beta * beta * t)
        / sqrt(2.0 * PI * t);
    if beta == 0.0 {
        return gauss_part;
    }
    let u = (ax + az + beta * t) / sqrt(t);
    let tail = exp_times_sf(2.0 * beta * az, u);
    (gauss_part - beta * tail).max(0.0)
}

/// Whole-line density of `dZ = β sgn(Z − y) dt + dB` from `x` to `z` over time `t`.
pub fn bang_bang_density(params: BangBangParams, x: f64, t: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    check_finite("beta", params.beta)?;
    check_finite("center", params.center)?;
    check_finite("x", x)?;
    check_finite("z", z)?;
    Ok(bang_bang_centered(params.beta, x - params.center, t, z - params.center))
}

pub(crate) fn reflected_unchecked(beta: f64, t: f64, x: f64, z: f64) -> f64 {
    bang_bang_centered(beta, x, t, z) + bang_bang_centered(beta, x, t, -z)
}

/// Density of `dX = β dt + dB + dL` reflected at `0`, from `x` to `z` over time `t`.
pub fn reflected_drift_density(beta: f64, t: f64, x: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    check_finite("beta", beta)?;
    check_nonneg("x", x)?;
    check_nonneg("z", z)?;
    Ok(reflected_unchecked(beta, t, x, z))
}

pub(crate) fn q_kappa_unchecked(kappa: f64, t: f64, x: f64, z: f64) -> f64 {
    let st = sqrt(t);
    let s = x + z + kappa * t;
    let first = gauss(t, x - z - kappa * t);
    let second = exp(-s * s / (2.0 * t) + 2.0 * kappa * x) / sqrt(2.0 * PI * t);
    let third = 2.0 * kappa * exp_times_sf(-2.0 * kappa * z, (x + z - kappa * t) / st);
    first + second + third
}

/// Density of the process reflected at `0` with constant drift `−κ`.
pub fn q_kappa_explicit(kappa: f64, t: f64, x: f64, z: f64) -> Result<f64> {
    check_time(t)?;
    check_nonneg("kappa", kappa)?;
    check_nonneg("x", x)?;
    check_nonneg("z", z)?;
    Ok(q_kappa_unchecked(kappa, t, x, z))
}

// h(t, d − pull·t) + pull · P(N > (d − pull·t)/√t)
pub(crate) fn image_with_tail(pull: f64, t: f64, d: f64) -> f64 {
    let st = sqrt(t);
    let u = (d - pull * t) / st;
    if u > 0.0 {
        norm_pdf(u) * (1.0 / st + pull * mills_ratio(u))
    } else {
        norm_pdf(u) / st + pull * norm_sf(u)
    }
}

pub(crate) fn bounds_unchecked(kappa: f64, t: f64, x: f64, y: f64) -> DensityBounds {
    let near = fabs(x - y);
    let far = x + y;
    let upper = image_with_tail(kappa, t, near) + image_with_tail(kappa, t, far);
    let lower = image_with_tail(-kappa, t, near) + image_with_tail(-kappa, t, far);
    DensityBounds { lower: lower.max(0.0), upper }
}

/// Density bounds at `y` after time `t` from `x`, over every drift bounded by `κ`.
///
/// Exact at `y = 0`, where the upper bound is attained by the constant drift `−κ` and the
/// lower one by `+κ`.
pub fn optimal_bounds(kappa: f64, t: f64, x: f64, y: f64) -> Result<DensityBounds> {
    check_time(t)?;
    check_nonneg("kappa", kappa)?;
    check_nonneg("x", x)?;
    check_nonneg("y", y)?;
    Ok(bounds_unchecked(kappa, t, x, y))
}

pub(crate) fn grad_unchecked(beta: f64, t: f64, x: f64, y: f64) -> f64 {
    let a = x - y + beta * t;
    let pref = exp(-a * a / (2.0 * t)) / sqrt(2.0 * PI * t * t * t);
    -pref * (a + exp(-2.0 * x * y / t) * (x + y - beta * t))
}

/// `∂/∂x` of [`reflected_drift_density`]`(beta, t, x, y)`.
pub fn grad_reflected_drift_density(beta: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_time(t)?;
    check_finite("beta", beta)?;
    check_nonneg("x", x)?;
    check_nonneg("y", y)?;
    Ok(grad_unchecked(beta, t, x, y))
}
