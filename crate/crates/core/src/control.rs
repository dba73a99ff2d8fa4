//! Discounted control of a reflected diffusion with bounded drift.
//!
//! Minimise `E ∫₀^∞ e^{−λt} f(X_t) dt` over drifts `|u| ≤ κ`. The value function solves
//! `½v'' + f = κ|v'| + λv` on `[0, ∞)` with `v'(0+) = 0` and polynomial growth, and the
//! optimal feedback is `u*(x) = −κ sgn(v'(x))`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, fabs, pow, sqrt, tgamma};

use crate::closed_form::q_kappa_explicit;
use crate::drift::DriftField;
use crate::error::ensure;
use crate::mc::{simulate_reflected, DiscountedCost, Executor, McEstimate, Scheme, SimConfig};
use crate::quadrature::integrate_to_infinity;
use crate::{Error, Result};

/// Running costs with printed closed-form value functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    Linear,
    Quadratic,
}

/// Running cost `f` with a declared growth bound `|f(x)| ≤ M (1 + x^d)`.
#[derive(Clone)]
pub struct RunningCost {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub growth_constant: f64,
    pub growth_degree: f64,
    pub kind: Option<CostKind>,
    pub label: String,
}

impl core::fmt::Debug for RunningCost {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "RunningCost({}, M={}, d={})", self.label, self.growth_constant, self.growth_degree)
    }
}

impl RunningCost {
    pub fn linear() -> RunningCost {
        RunningCost { f: Arc::new(|x| x), growth_constant: 1.0, growth_degree: 1.0, kind: Some(CostKind::Linear), label: "x".into() }
    }

    pub fn quadratic() -> RunningCost {
        RunningCost {
            f: Arc::new(|x| x * x),
            growth_constant: 1.0,
            growth_degree: 2.0,
            kind: Some(CostKind::Quadratic),
            label: "x^2".into(),
        }
    }

    pub fn constant(c: f64) -> RunningCost {
        RunningCost { f: Arc::new(move |_| c), growth_constant: fabs(c), growth_degree: 0.0, kind: None, label: alloc::format!("{c}") }
    }

    pub fn custom<F>(label: &str, growth_constant: f64, growth_degree: f64, f: F) -> RunningCost
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RunningCost { f: Arc::new(f), growth_constant, growth_degree, kind: None, label: label.into() }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub kappa: f64,
    pub lambda: f64,
    pub cost: RunningCost,
}

impl ControlProblem {
    /// Validates the parameters and checks the growth bound of `f` on a sample of `[0, 100]`.
    pub fn new(kappa: f64, lambda: f64, cost: RunningCost) -> Result<ControlProblem> {
        ensure!(lambda > 0.0 && lambda.is_finite(), Domain, "lambda must be positive, got {lambda}");
        ensure!(kappa >= 0.0 && kappa.is_finite(), Domain, "kappa must be nonnegative, got {kappa}");
        ensure!(
            cost.growth_constant >= 0.0 && cost.growth_degree >= 0.0,
            Domain,
            "growth bound needs M >= 0 and d >= 0"
        );
        for i in 0..=2000 {
            let x = i as f64 * 0.05;
            let v = cost.eval(x);
            let bound = cost.growth_constant * (1.0 + pow(x, cost.growth_degree));
            ensure!(v.is_finite(), Domain, "cost `{}` is not finite at x={x}", cost.label);
            ensure!(
                fabs(v) <= bound * (1.0 + 1e-12) + 1e-300,
                Domain,
                "cost `{}` violates |f| <= M(1+x^d) at x={x}: f={v}, bound={bound}",
                cost.label
            );
        }
        Ok(ControlProblem { kappa, lambda, cost })
    }
}

fn decay_rate(kappa: f64, lambda: f64) -> f64 {
    // κ − √(κ² + 2λ) without cancellation
    -2.0 * lambda / (kappa + sqrt(kappa * kappa + 2.0 * lambda))
}

/// Printed closed-form value function.
pub fn value_closed_form(kind: CostKind, kappa: f64, lambda: f64, x: f64) -> Result<f64> {
    ensure!(lambda > 0.0 && lambda.is_finite(), Domain, "lambda must be positive, got {lambda}");
    ensure!(kappa >= 0.0, Domain, "kappa must be nonnegative, got {kappa}");
    ensure!(x >= 0.0, Domain, "x must be nonnegative, got {x}");
    let r = decay_rate(kappa, lambda);
    let e = exp(r * x);
    Ok(match kind {
        CostKind::Linear => e / (lambda * -r) + x / lambda - kappa / (lambda * lambda),
        CostKind::Quadratic => {
            let l2 = lambda * lambda;
            2.0 * kappa * e / (l2 * r) + x * x / lambda - 2.0 * kappa * x / l2 + (2.0 * kappa * kappa + lambda) / (l2 * lambda)
        }
    })
}

/// Derivative of [`value_closed_form`] in `x`.
pub fn value_derivative_closed_form(kind: CostKind, kappa: f64, lambda: f64, x: f64) -> Result<f64> {
    ensure!(lambda > 0.0 && lambda.is_finite(), Domain, "lambda must be positive, got {lambda}");
    ensure!(kappa >= 0.0 && x >= 0.0, Domain, "kappa and x must be nonnegative");
    let e = exp(decay_rate(kappa, lambda) * x);
    Ok(match kind {
        CostKind::Linear => (1.0 - e) / lambda,
        CostKind::Quadratic => 2.0 * kappa * (e - 1.0) / (lambda * lambda) + 2.0 * x / lambda,
    })
}

/// Value function on a uniform grid of `[0, x_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub x_max: f64,
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
    /// Set when the values come from a printed closed form.
    pub closed_form: Option<CostKind>,
    /// Largest residual of the discrete equation, scaled by `1 + |f|`.
    pub residual: f64,
    pub iterations: usize,
    /// `|v(x_max) − v_p(x_max)|` for the polynomial particular branch `v_p`.
    pub far_field_mismatch: f64,
}

impl ValueFunction {
    pub fn h(&self) -> f64 {
        self.x_max / (self.values.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    fn interpolate(row: &[f64], h: f64, x: f64) -> f64 {
        let pos = (x / h).max(0.0);
        let i = (pos as usize).min(row.len() - 2);
        let frac = pos - i as f64;
        row[i] * (1.0 - frac) + row[i + 1] * frac
    }

    pub fn value(&self, x: f64) -> f64 {
        Self::interpolate(&self.values, self.h(), x)
    }

    pub fn slope(&self, x: f64) -> f64 {
        Self::interpolate(&self.derivative, self.h(), x)
    }

    /// Tabulates a printed closed form.
    pub fn from_closed_form(kind: CostKind, kappa: f64, lambda: f64, x_max: f64, nodes: usize) -> Result<ValueFunction> {
        ensure!(nodes >= 3 && x_max > 0.0, Config, "need at least 3 nodes on a positive interval");
        let h = x_max / (nodes - 1) as f64;
        let mut values = Vec::with_capacity(nodes);
        let mut derivative = Vec::with_capacity(nodes);
        for i in 0..nodes {
            values.push(value_closed_form(kind, kappa, lambda, i as f64 * h)?);
            derivative.push(value_derivative_closed_form(kind, kappa, lambda, i as f64 * h)?);
        }
        Ok(ValueFunction { x_max, values, derivative, closed_form: Some(kind), residual: 0.0, iterations: 0, far_field_mismatch: 0.0 })
    }
}

/// Grid and Newton settings for [`solve_value_ode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeGrid {
    pub x_max: f64,
    pub nodes: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for OdeGrid {
    fn default() -> Self {
        OdeGrid { x_max: 20.0, nodes: 4001, max_iterations: 100, tolerance: 1e-10 }
    }
}

const DEADBAND: f64 = 1e-12;

fn sign_with_deadband(p: f64) -> f64 {
    if p > DEADBAND {
        1.0
    } else if p < -DEADBAND {
        -1.0
    } else {
        0.0
    }
}

// Particular polynomial-growth branch: v_p = Σ_k λ^{−k−1} (½D² − κ s D)^k f, three terms kept,
// with derivatives of f by central differences.
fn particular_branch(problem: &ControlProblem, x: f64) -> (f64, f64) {
    let f = |z: f64| problem.cost.eval(z);
    let d = 1e-2 * (1.0 + fabs(x));
    let d1 = |z: f64| (f(z + d) - f(z - d)) / (2.0 * d);
    let d2 = |z: f64| (f(z + d) - 2.0 * f(z) + f(z - d)) / (d * d);
    let d3 = |z: f64| (d2(z + d) - d2(z - d)) / (2.0 * d);
    let d4 = |z: f64| (d2(z + d) - 2.0 * d2(z) + d2(z - d)) / (d * d);
    let (k, l) = (problem.kappa, problem.lambda);
    let s = sign_with_deadband(d1(x));
    let branch = |z: f64| {
        f(z) / l + (0.5 * d2(z) - k * s * d1(z)) / (l * l) + (0.25 * d4(z) - k * s * d3(z) + k * k * d2(z)) / (l * l * l)
    };
    (branch(x), (branch(x + d) - branch(x - d)) / (2.0 * d))
}

fn thomas(lower: &[f64], diag: &mut [f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    }
}

/// Solves `½v'' + f = κ|v'| + λv`, `v'(0) = 0`, with the far-field slope of the polynomial
/// branch imposed at `x_max`, by damped Newton on central differences.
pub fn solve_value_ode(problem: &ControlProblem, grid: &OdeGrid) -> Result<ValueFunction> {
    ensure!(grid.nodes >= 3 && grid.x_max > 0.0, Config, "need at least 3 nodes on a positive interval");
    let n = grid.nodes;
    let h = grid.x_max / (n - 1) as f64;
    let (kappa, lambda) = (problem.kappa, problem.lambda);
    let f: Vec<f64> = (0..n).map(|i| problem.cost.eval(i as f64 * h)).collect();
    let scale: Vec<f64> = f.iter().map(|v| 1.0 + fabs(*v)).collect();
    let (vp_far, far_slope) = particular_branch(problem, grid.x_max);

    let neighbours = |v: &[f64], i: usize| -> (f64, f64) {
        let left = if i == 0 { v[1] } else { v[i - 1] };
        let right = if i == n - 1 { v[n - 2] + 2.0 * h * far_slope } else { v[i + 1] };
        (left, right)
    };
    let residual = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let (l, r) = neighbours(v, i);
            let p = (r - l) / (2.0 * h);
            out[i] = 0.5 * (r - 2.0 * v[i] + l) / (h * h) + f[i] - kappa * fabs(p) - lambda * v[i];
        }
    };
    let norm = |r: &[f64]| r.iter().zip(&scale).fold(0.0f64, |m, (a, s)| m.max(fabs(*a) / s));

    let mut v: Vec<f64> = f.iter().map(|x| x / lambda).collect();
    let mut res = vec![0.0; n];
    residual(&v, &mut res);
    let mut current = norm(&res);
    let mut iterations = 0;
    let (mut lower, mut diag, mut upper, mut delta) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut trial = vec![0.0; n];
    while current > grid.tolerance {
        if iterations >= grid.max_iterations {
            return Err(Error::NoConvergence { iterations, residual: current });
        }
        iterations += 1;
        for i in 0..n {
            let (l, r) = neighbours(&v, i);
            let s = sign_with_deadband((r - l) / (2.0 * h));
            let a = 0.5 / (h * h);
            let b = kappa * s / (2.0 * h);
            diag[i] = -2.0 * a - lambda;
            // d/dv_{i−1} and d/dv_{i+1}, folding ghost nodes into their mirrors
            let (dl, dr) = (a + b, a - b);
            lower[i] = 0.0;
            upper[i] = 0.0;
            if i == 0 {
                upper[i] = dl + dr;
            } else if i == n - 1 {
                lower[i] = dl + dr;
            } else {
                lower[i] = dl;
                upper[i] = dr;
            }
            delta[i] = -res[i];
        }
        thomas(&lower, &mut diag, &upper, &mut delta);
        let mut step = 1.0;
        loop {
            for i in 0..n {
                trial[i] = v[i] + step * delta[i];
            }
            residual(&trial, &mut res);
            let next = norm(&res);
            if next < current || step < 1e-6 {
                current = next;
                core::mem::swap(&mut v, &mut trial);
                break;
            }
            step *= 0.5;
        }
    }
    let mut derivative = vec![0.0; n];
    for i in 1..n - 1 {
        derivative[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    derivative[n - 1] = far_slope;
    let far_field_mismatch = fabs(v[n - 1] - vp_far);
    Ok(ValueFunction {
        x_max: grid.x_max,
        values: v,
        derivative,
        closed_form: None,
        residual: current,
        iterations,
        far_field_mismatch,
    })
}

/// Feedback `u*(x) = −κ sgn(v'(x))`, with `v'` interpolated linearly between nodes.
pub fn optimal_feedback(v: &ValueFunction, kappa: f64) -> DriftField {
    let derivative = v.derivative.clone();
    let h = v.h();
    let tol = 1e-10 * derivative.iter().fold(1.0f64, |m, d| m.max(fabs(*d)));
    DriftField::function("optimal-feedback", kappa, move |_, x| {
        let p = ValueFunction::interpolate(&derivative, h, x);
        if fabs(p) <= tol { 0.0 } else { -kappa * crate::sgn(p) }
    })
}

/// Density of the optimally controlled process, `u* ≡ −κ`.
pub fn optimal_process_density(kappa: f64, t: f64, x: f64, z: f64) -> Result<f64> {
    q_kappa_explicit(kappa, t, x, z)
}

/// Bound on `∫_T^∞ e^{−λt} E|f(X_t)| dt` for any drift bounded by `κ` started at `x0`.
///
/// Uses `X_t ≤ x0 + 2κt + 2 sup_{s≤t}|B_s|` and `E sup|B|^d ≤ 2 E|B_t|^d`.
pub fn truncation_tail(problem: &ControlProblem, x0: f64, horizon: f64) -> f64 {
    let d = problem.cost.growth_degree;
    let m = problem.cost.growth_constant;
    let abs_moment = |t: f64| pow(2.0 * t, 0.5 * d) * tgamma(0.5 * (d + 1.0)) / sqrt(core::f64::consts::PI);
    let moment = |t: f64| {
        if d == 0.0 {
            return 1.0;
        }
        let sup_norm = pow(2.0 * abs_moment(t), 1.0 / d);
        pow(x0 + 2.0 * problem.kappa * t + 2.0 * sup_norm, d)
    };
    integrate_to_infinity(
        |t| exp(-problem.lambda * t) * m * (1.0 + moment(t)),
        horizon,
        1e-14,
        1e-8,
    )
    .map(|q| q.value)
    .unwrap_or(f64::INFINITY)
}

/// Smallest horizon (on a doubling-then-bisection search) whose tail bound is below `target`.
pub fn truncation_horizon(problem: &ControlProblem, x0: f64, target: f64) -> f64 {
    let mut hi = 1.0 / problem.lambda;
    while truncation_tail(problem, x0, hi) > target {
        hi *= 2.0;
        if hi > 1e6 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if truncation_tail(problem, x0, mid) > target { lo = mid } else { hi = mid }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlMcSettings {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Paths of the pilot run that sizes the truncation horizon.
    pub pilot_paths: usize,
}

impl Default for ControlMcSettings {
    fn default() -> Self {
        ControlMcSettings { n_paths: 100_000, dt: 1e-2, seed: 1, pilot_paths: 4096 }
    }
}

#[derive(Debug, Clone)]
pub struct CostRow {
    pub label: String,
    pub estimate: McEstimate,
    /// `J(u) ≥ v(x0) − 3σ − budget`.
    pub dominates_value: bool,
    /// `J(u) − J(u*) > 3σ` combined.
    pub strictly_worse: bool,
}

#[derive(Debug, Clone)]
pub struct OptimalityReport {
    pub x0: f64,
    pub value: f64,
    pub horizon: f64,
    /// Tail bound of the neglected cost beyond the horizon.
    pub truncation_budget: f64,
    pub optimal: McEstimate,
    /// `|J(u*) − v(x0)| ≤ 3σ + budget`.
    pub optimal_matches: bool,
    pub competitors: Vec<CostRow>,
    pub rejected: Vec<(String, Error)>,
}

impl OptimalityReport {
    pub fn pass(&self) -> bool {
        self.optimal_matches && self.rejected.is_empty() && self.competitors.iter().all(|c| c.dominates_value)
    }
}

/// Monte Carlo check that `u*` attains `v(x0)` and no competitor beats it.
pub fn validate_optimality<E: Executor>(
    problem: &ControlProblem,
    x0: f64,
    competitors: &[DriftField],
    settings: &ControlMcSettings,
    executor: &E,
) -> Result<OptimalityReport> {
    ensure!(x0 >= 0.0 && x0.is_finite(), Domain, "x0 must be nonnegative, got {x0}");
    let (value_fn, value) = match problem.cost.kind {
        Some(kind) => {
            let x_max = (20.0f64).max(2.0 * x0 + 10.0);
            (ValueFunction::from_closed_form(kind, problem.kappa, problem.lambda, x_max, 4001)?, value_closed_form(kind, problem.kappa, problem.lambda, x0)?)
        }
        None => {
            let grid = OdeGrid { x_max: (20.0f64).max(2.0 * x0 + 10.0), ..Default::default() };
            let v = solve_value_ode(problem, &grid)?;
            let at = v.value(x0);
            (v, at)
        }
    };
    let optimal_drift = optimal_feedback(&value_fn, problem.kappa);
    let cost = DiscountedCost { lambda: problem.lambda, f: problem.cost.f.clone() };
    let run = |drift: &DriftField, n: usize, horizon: f64, salt: u64| -> Result<McEstimate> {
        let config = SimConfig::new(x0, horizon, settings.dt.min(horizon), n, settings.seed.wrapping_add(salt))
            .with_scheme(Scheme::Skorokhod)
            .with_cost(cost.clone());
        let bundle = simulate_reflected(drift, &config, executor)?;
        Ok(bundle.mean_cost().expect("cost was requested"))
    };

    let pilot_horizon = truncation_horizon(problem, x0, 1e-3 * (1.0 + fabs(value)));
    let pilot = run(&optimal_drift, settings.pilot_paths.max(2), pilot_horizon, 1000)?;
    let spread = pilot.std_error * sqrt(pilot.n_paths as f64);
    let target = 0.1 * spread / sqrt(settings.n_paths as f64);
    let horizon = truncation_horizon(problem, x0, target.max(1e-12));
    let budget = truncation_tail(problem, x0, horizon);

    let optimal = run(&optimal_drift, settings.n_paths, horizon, 0)?;
    let optimal_matches = optimal.agrees_with(value, 3.0, budget);
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (i, drift) in competitors.iter().enumerate() {
        if let Err(e) = drift.check_bound(problem.kappa, horizon, x0 + 10.0) {
            rejected.push((drift.label.clone(), e));
            continue;
        }
        let estimate = run(drift, settings.n_paths, horizon, i as u64 + 1)?;
        let combined = sqrt(estimate.std_error * estimate.std_error + optimal.std_error * optimal.std_error);
        rows.push(CostRow {
            label: drift.label.clone(),
            estimate,
            dominates_value: estimate.mean >= value - 3.0 * estimate.std_error - budget,
            strictly_worse: estimate.mean - optimal.mean > 3.0 * combined,
        });
    }
    Ok(OptimalityReport { x0, value, horizon, truncation_budget: budget, optimal, optimal_matches, competitors: rows, rejected })
}
