//! Empirical checks of the density comparison theorem and the perturbation formula.

use alloc::string::String;
use alloc::vec::Vec;

use libm::sqrt;

use crate::closed_form::{bounds_unchecked, reflected_unchecked, DensityBounds};
use crate::drift::DriftField;
use crate::error::ensure;
use crate::hjb::{solve_hjb, Grid1D, HjbOptions};
use crate::mc::{
    estimate_density, simulate_reflected, DensityOptions, Executor, GradientProbe, McEstimate, Perturbation,
    Scheme, SimConfig,
};
use crate::{Error, Result};

/// Path count, step and seed shared by the verification runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub density: DensityOptions,
    /// Spatial step of the HJB reference when the target is interior.
    pub hjb_h: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            n_paths: 100_000,
            dt: 1e-3,
            seed: 1,
            scheme: Scheme::Skorokhod,
            density: DensityOptions::default(),
            hjb_h: 0.02,
        }
    }
}

impl McSettings {
    fn config(&self, x0: f64, horizon: f64, salt: u64) -> SimConfig {
        SimConfig::new(x0, horizon, self.dt.min(horizon), self.n_paths, self.seed.wrapping_add(salt))
            .with_scheme(self.scheme)
    }
}

#[derive(Debug, Clone)]
pub struct BoundsRow {
    pub label: String,
    pub estimate: McEstimate,
    pub clamp_violations: u64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub kappa: f64,
    pub x0: f64,
    pub horizon: f64,
    pub y: f64,
    pub bounds: DensityBounds,
    /// `"closed-form"` at `y = 0`, `"hjb"` otherwise.
    pub bound_source: &'static str,
    pub rows: Vec<BoundsRow>,
    /// Drifts whose bound exceeds `κ`, with the reason.
    pub rejected: Vec<(String, Error)>,
}

impl BoundsReport {
    pub fn pass(&self) -> bool {
        self.rejected.is_empty() && self.rows.iter().all(|r| r.pass)
    }
}

/// Zero drift, a clamped oscillating drift and the constant `−κ`.
pub fn standard_drifts(kappa: f64) -> Vec<DriftField> {
    let sine = DriftField::function("clamped-sine", kappa, move |t, x| (2.0 * kappa * libm::sin(3.0 * x + t)).clamp(-kappa, kappa));
    alloc::vec![DriftField::constant(0.0).with_bound(kappa), sine, DriftField::constant(-kappa)]
}

/// Bounds of the density at `y` after time `horizon` from `x0` over drifts with `|b| ≤ κ`.
pub fn density_bounds(kappa: f64, x0: f64, horizon: f64, y: f64, hjb_h: f64) -> Result<(DensityBounds, &'static str)> {
    if y == 0.0 || kappa == 0.0 {
        return Ok((bounds_unchecked(kappa, horizon, x0, y), "closed-form"));
    }
    let options = HjbOptions::default();
    let t0 = options.t0.min(0.5 * horizon);
    let x_max = Grid1D::default_x_max(y, horizon).max(x0 + 4.0);
    let extremal = |beta: f64| -> Result<f64> {
        let grid = Grid1D::with_step(x_max, hjb_h, horizon, beta, t0)?;
        solve_hjb(beta, y, &grid, &options)?.value_at(horizon, x0)
    };
    Ok((DensityBounds { lower: extremal(-kappa)?, upper: extremal(kappa)? }, "hjb"))
}

/// Checks that the density at `y` of every drift lies inside the extremal bounds.
pub fn verify_bounds<E: Executor>(
    kappa: f64,
    drifts: &[DriftField],
    x0: f64,
    horizon: f64,
    y: f64,
    settings: &McSettings,
    executor: &E,
) -> Result<BoundsReport> {
    ensure!(kappa >= 0.0 && kappa.is_finite(), Domain, "kappa must be nonnegative, got {kappa}");
    ensure!(x0 >= 0.0 && y >= 0.0, Domain, "x0 and y must be nonnegative");
    let (bounds, bound_source) = density_bounds(kappa, x0, horizon, y, settings.hjb_h)?;
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (i, drift) in drifts.iter().enumerate() {
        if let Err(e) = drift.check_bound(kappa, horizon, x0 + y + 10.0) {
            rejected.push((drift.label.clone(), e));
            continue;
        }
        let bundle = simulate_reflected(drift, &settings.config(x0, horizon, i as u64), executor)?;
        let estimate = estimate_density(&bundle, y, &settings.density)?;
        let slack = 3.0 * estimate.std_error;
        rows.push(BoundsRow {
            label: drift.label.clone(),
            estimate,
            clamp_violations: bundle.clamp_violations,
            pass: bounds.contains(estimate.mean, slack),
        });
    }
    Ok(BoundsReport { kappa, x0, horizon, y, bounds, bound_source, rows, rejected })
}

#[derive(Debug, Clone)]
pub struct RepresentationReport {
    /// Density of the drift `b + c` at `y`, estimated directly.
    pub lhs: McEstimate,
    /// Closed-form density of the constant drift `b`.
    pub base: f64,
    /// Mean of `∫ R c ∂ₓq_b dr` under `b`.
    pub correction: McEstimate,
    pub rhs: f64,
    pub combined_std_error: f64,
}

impl RepresentationReport {
    pub fn difference(&self) -> f64 {
        self.lhs.mean - self.rhs
    }

    pub fn pass(&self) -> bool {
        libm::fabs(self.difference()) <= 3.0 * self.combined_std_error
    }
}

/// Estimates both sides of `q_{b+c} = q_b + ∫₀ᵀ E_b[R_r c ∂ₓq_b(T − r, X_r, y)] dr`.
///
/// `b` must be constant so that `∂ₓq_b` is available in closed form.
pub fn verify_representation<E: Executor>(
    b: &DriftField,
    c: &DriftField,
    x0: f64,
    horizon: f64,
    y: f64,
    settings: &McSettings,
    executor: &E,
) -> Result<RepresentationReport> {
    let beta = b.as_constant().ok_or_else(|| {
        Error::Config(alloc::format!("representation check needs a constant base drift, got `{}`", b.label))
    })?;
    ensure!(c.kappa.is_finite(), Config, "perturbation `{}` has no finite bound", c.label);
    ensure!(x0 >= 0.0 && y >= 0.0, Domain, "x0 and y must be nonnegative");

    let combined = match c.as_constant() {
        Some(cv) => DriftField::constant(beta + cv),
        None => {
            let c2 = c.clone();
            DriftField::function("b+c", libm::fabs(beta) + c.kappa, move |t, x| beta + c2.eval(t, x).0)
        }
    };
    let lhs_bundle = simulate_reflected(&combined, &settings.config(x0, horizon, 0), executor)?;
    let lhs = estimate_density(&lhs_bundle, y, &settings.density)?;

    let perturbation = Perturbation { c: c.clone(), gradient_probe: Some(GradientProbe { beta, y }) };
    let config = settings.config(x0, horizon, 1).with_perturbation(perturbation);
    let rhs_bundle = simulate_reflected(&DriftField::constant(beta), &config, executor)?;
    let correction = rhs_bundle.mean_probe_integral().expect("probe was requested");
    let base = reflected_unchecked(beta, horizon, x0, y);
    Ok(RepresentationReport {
        lhs,
        base,
        correction,
        rhs: base + correction.mean,
        combined_std_error: sqrt(lhs.std_error * lhs.std_error + correction.std_error * correction.std_error),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::Sequential;

    #[test]
    fn degenerate_band() {
        let settings = McSettings { n_paths: 40_000, dt: 0.1, ..Default::default() };
        let report = verify_bounds(0.0, &[DriftField::constant(0.0)], 0.5, 1.0, 0.0, &settings, &Sequential).unwrap();
        assert_eq!(report.bounds.lower, report.bounds.upper);
        assert!(report.pass(), "{report:?}");
    }

    #[test]
    fn rejects_oversized_drift() {
        let settings = McSettings { n_paths: 1000, dt: 0.1, ..Default::default() };
        let report = verify_bounds(1.0, &[DriftField::constant(2.0)], 0.5, 1.0, 0.0, &settings, &Sequential).unwrap();
        assert_eq!(report.rejected.len(), 1);
        assert!(!report.pass());
    }

    #[test]
    fn zero_perturbation() {
        let settings = McSettings { n_paths: 20_000, dt: 0.05, ..Default::default() };
        let r = verify_representation(&DriftField::constant(-1.0), &DriftField::constant(0.0), 0.5, 1.0, 0.0, &settings, &Sequential)
            .unwrap();
        assert_eq!(r.correction.mean, 0.0);
        assert_eq!(r.rhs, r.base);
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn nonconstant_base_is_refused() {
        let settings = McSettings { n_paths: 10, ..Default::default() };
        let b = DriftField::function("f", 1.0, |_, x| libm::sin(x));
        let err = verify_representation(&b, &DriftField::constant(0.0), 0.5, 1.0, 0.0, &settings, &Sequential);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn shifted_drift_recovers_heat_kernel() {
        let settings = McSettings { n_paths: 40_000, dt: 0.02, ..Default::default() };
        let r = verify_representation(&DriftField::constant(-1.0), &DriftField::constant(1.0), 0.5, 1.0, 0.0, &settings, &Sequential)
            .unwrap();
        let heat = reflected_unchecked(0.0, 1.0, 0.5, 0.0);
        assert!(libm::fabs(r.rhs - heat) <= 3.0 * r.correction.std_error, "{r:?} vs {heat}");
        assert!(r.pass(), "{r:?}");
    }
}
