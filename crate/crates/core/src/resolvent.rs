//! Laplace-domain density of the reflecting bang-bang process.
//!
//! The process is `dX = −β sgn(X − y) dt + dB + dL` on `[0, ∞)`, pulled toward `y` for
//! `β > 0`. Its resolvent `V_y(x) = ∫ e^{−λt} q(t, x, y) dt` solves
//! `½V'' + β sgn(y − x) V' − λV = −δ_y` with `V'(0+) = 0`, and is known in closed form
//! only for the target point equal to the center.

use alloc::vec::Vec;

use libm::{exp, fabs, sqrt};
use num_complex::Complex64;

use crate::error::ensure;
use crate::hjb::{self, Grid1D, HjbOptions};
use crate::laplace::{invert_laplace, Inversion, InversionConfig};
use crate::{Error, Result};

const EXP_CLAMP: f64 = 700.0;

/// Coefficients of the two-branch resolvent.
///
/// `c1, c2` multiply `e^{−(β+β̄)x}` and `e^{−(β−β̄)x}` on `[0, y]`; `c3` multiplies
/// `e^{(β−β̄)x}` on `[y, ∞)`. Exponentials in these stored values are clamped, so for very
/// large `y·β̄` they saturate; evaluation goes through a scaled form that never overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventCoefficients {
    pub beta: f64,
    pub lambda: f64,
    pub y: f64,
    pub beta_bar: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// The reflected distance `x ↦ ||x| − y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiY {
    pub y: f64,
}

impl PhiY {
    pub fn eval(&self, x: f64) -> f64 {
        fabs(fabs(x) - self.y)
    }
}

// β̄ + β and β̄ − β without cancellation, plus β̄ itself.
fn split(beta: f64, lambda: Complex64) -> (Complex64, Complex64, Complex64) {
    let bar = (lambda * 2.0 + beta * beta).sqrt();
    if beta >= 0.0 {
        let sum = bar + beta;
        (bar, sum, lambda * 2.0 / sum)
    } else {
        let diff = bar - beta;
        (bar, lambda * 2.0 / diff, diff)
    }
}

fn clamp_exp(a: f64) -> f64 {
    exp(a.clamp(-EXP_CLAMP, EXP_CLAMP))
}

/// Builds the coefficient set for `λ > 0`, `y ≥ 0`.
pub fn resolvent_coefficients(beta: f64, lambda: f64, y: f64) -> Result<ResolventCoefficients> {
    ensure!(lambda > 0.0 && lambda.is_finite(), Domain, "lambda must be positive, got {lambda}");
    ensure!(beta.is_finite(), Domain, "beta must be finite, got {beta}");
    ensure!(y >= 0.0 && y.is_finite(), Domain, "center must be nonnegative, got {y}");
    let (bar, sum, diff) = split(beta, Complex64::new(lambda, 0.0));
    let (bar, sum, diff) = (bar.re, sum.re, diff.re);
    let den = 2.0 * lambda - beta * diff * exp(-2.0 * y * bar);
    if !(den.abs() > 0.0) || !den.is_finite() {
        return Err(Error::Singular(alloc::format!(
            "resolvent denominator vanishes for beta={beta}, lambda={lambda}, y={y}"
        )));
    }
    let c1 = diff * clamp_exp(-diff * y) / den;
    let c2 = sum * clamp_exp(-diff * y) / den;
    let c3 = (sum + diff * exp(-2.0 * y * bar)) * clamp_exp(diff * y) / den;
    Ok(ResolventCoefficients { beta, lambda, y, beta_bar: bar, c1, c2, c3 })
}

pub(crate) fn value_complex(beta: f64, lambda: Complex64, y: f64, x: f64) -> Complex64 {
    let (bar, sum, diff) = split(beta, lambda);
    let decay = (-bar * (2.0 * y)).exp();
    let den = lambda * 2.0 - diff * decay * beta;
    let num = if x <= y {
        diff * (-diff * y - sum * x).exp() + sum * (-diff * (y - x)).exp()
    } else {
        (sum + diff * decay) * (-diff * (x - y)).exp()
    };
    num / den
}

/// `V_y(x)` for the coefficient set.
pub fn resolvent_value(coeffs: &ResolventCoefficients, x: f64) -> Result<f64> {
    ensure!(x >= 0.0 && x.is_finite(), Domain, "x must be nonnegative, got {x}");
    Ok(value_complex(coeffs.beta, Complex64::new(coeffs.lambda, 0.0), coeffs.y, x).re)
}

impl ResolventCoefficients {
    /// Residual of `V'(0+) = 0`, relative to the size of its two terms.
    pub fn neumann_residual(&self) -> f64 {
        let a = (self.beta + self.beta_bar) * self.c1;
        let b = (self.beta - self.beta_bar) * self.c2;
        (a + b).abs() / (a.abs() + b.abs())
    }

    /// Relative mismatch of the two branches at `x = y`.
    pub fn knot_residual(&self) -> f64 {
        let (bar, beta, y) = (self.beta_bar, self.beta, self.y);
        let left = self.c1 * exp(-(beta + bar) * y) + self.c2 * exp(-(beta - bar) * y);
        let right = self.c3 * exp((beta - bar) * y);
        (left - right).abs() / right.abs().max(f64::MIN_POSITIVE)
    }
}

/// Density at the center `y` after time `t` from `x`, with the inversion error estimate.
pub fn reflected_bangbang_density_with(
    beta: f64,
    y: f64,
    t: f64,
    x: f64,
    config: &InversionConfig,
) -> Result<Inversion> {
    ensure!(beta.is_finite(), Domain, "beta must be finite, got {beta}");
    ensure!(y >= 0.0 && y.is_finite(), Domain, "center must be nonnegative, got {y}");
    ensure!(x >= 0.0 && x.is_finite(), Domain, "x must be nonnegative, got {x}");
    invert_laplace(|lambda| value_complex(beta, lambda, y, x), t, config)
}

/// Density at the center `y` after time `t` from `x`, default inversion settings.
pub fn reflected_bangbang_density(beta: f64, y: f64, t: f64, x: f64) -> Result<f64> {
    reflected_bangbang_density_with(beta, y, t, x, &InversionConfig::default()).map(|r| r.value)
}

/// Per-point comparison of the bang-bang density against the extremal density.
#[derive(Debug, Clone, PartialEq)]
pub struct SuboptimalityRow {
    pub x: f64,
    pub bang_bang: f64,
    pub optimal: f64,
    /// Numerical tolerance of `optimal − bang_bang`.
    pub tolerance: f64,
}

impl SuboptimalityRow {
    pub fn gap(&self) -> f64 {
        self.optimal - self.bang_bang
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuboptimalityReport {
    pub beta: f64,
    pub y: f64,
    pub t: f64,
    pub rows: Vec<SuboptimalityRow>,
    /// True if some row has a gap larger than `margin` times its tolerance.
    pub strictly_below: bool,
    /// True if every row agrees within its tolerance.
    pub agrees: bool,
    pub margin: f64,
}

/// Settings of the finite-difference reference used by [`bangbang_suboptimality_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuboptimalityConfig {
    /// Spatial step of the fine solve; the coarse solve uses twice this.
    pub h: f64,
    pub inversion: InversionConfig,
    pub margin: f64,
}

impl Default for SuboptimalityConfig {
    fn default() -> Self {
        SuboptimalityConfig { h: 0.01, inversion: InversionConfig::default(), margin: 5.0 }
    }
}

/// Compares the reflecting bang-bang density at `y` with the extremal (HJB) density.
///
/// The tolerance of each row adds the difference between HJB solves at steps `2h` and `h`,
/// the inversion error estimate and `1e-6`.
pub fn bangbang_suboptimality_check(
    beta: f64,
    y: f64,
    t: f64,
    x_grid: &[f64],
    config: &SuboptimalityConfig,
) -> Result<SuboptimalityReport> {
    ensure!(t > 0.0 && t.is_finite(), Domain, "time must be positive, got {t}");
    ensure!(!x_grid.is_empty(), Domain, "empty evaluation grid");
    let x_top = x_grid.iter().cloned().fold(0.0, f64::max);
    let x_max = (10.0f64).max(y + 8.0 * sqrt(t)).max(x_top + 4.0);
    let solve = |h: f64| {
        let grid = Grid1D::with_step(x_max, h, t, beta, HjbOptions::default().t0.min(0.5 * t))?;
        hjb::solve_hjb(beta, y, &grid, &HjbOptions::default())
    };
    let fine = solve(config.h)?;
    let coarse = solve(2.0 * config.h)?;
    let mut rows = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let inv = reflected_bangbang_density_with(beta, y, t, x, &config.inversion)?;
        let w_fine = fine.value_at(t, x)?;
        let w_coarse = coarse.value_at(t, x)?;
        let tolerance = (w_fine - w_coarse).abs() + inv.error_estimate + 1e-6;
        rows.push(SuboptimalityRow { x, bang_bang: inv.value, optimal: w_fine, tolerance });
    }
    let strictly_below = rows.iter().any(|r| r.gap() > config.margin * r.tolerance);
    let agrees = rows.iter().all(|r| r.gap().abs() <= r.tolerance);
    Ok(SuboptimalityReport { beta, y, t, rows, strictly_below, agrees, margin: config.margin })
}
