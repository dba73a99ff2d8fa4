//! Explicit finite differences for `w_t = ½ w_xx + β |w_x|` on `[0, x_max]`.
//!
//! `w(t, ·)` is the extremal density of arriving at `y` after time `t`: the largest one
//! over drifts bounded by `β` when `β > 0`, the smallest over drifts bounded by `|β|` when
//! `β < 0`. Boundary conditions are `w_x(t, 0) = 0` and `w(t, x_max) = 0`.
//!
//! The scheme marches the cell derivatives `v_{i+½} = (w_{i+1} − w_i)/h` in conservative
//! form next to the node values. Differencing `w` directly would lose the small gradients on
//! the plateau that decide where the nodal curve of `w_x` sits.

use alloc::vec;
use alloc::vec::Vec;

use libm::{fabs, sqrt};

use crate::closed_form::{gauss, image_with_tail};
use crate::drift::{DriftField, DriftTable};
use crate::error::ensure;
use crate::Result;

/// Discretisation of the Hamiltonian `β|w_x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HamiltonianScheme {
    /// `β|central difference|`. Monotone for `|β| h ≤ 1`, second order in `h`.
    Central,
    /// Upwind sup/inf over controls in `[−|β|, |β|]`. Monotone for any `h`, first order.
    Godunov,
    /// `β·sqrt(central² + ε²)`.
    Regularized { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjbOptions {
    pub scheme: HamiltonianScheme,
    /// Start time of the march; `w(t0, ·)` is set from a closed-form kernel.
    pub t0: f64,
    /// Safety factor in `dt ≤ cfl · h² / (1 + |β| h)`, at most `0.5`.
    pub cfl: f64,
    /// Upper bound on the number of stored time slices (first and last always kept).
    pub max_slices: usize,
}

impl Default for HjbOptions {
    fn default() -> Self {
        HjbOptions { scheme: HamiltonianScheme::Central, t0: 1e-2, cfl: 0.45, max_slices: 1000 }
    }
}

/// Space-time grid: nodes `x_i = i·x_max/(nx−1)`, steps of `dt` from `t0` to `t_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_max: f64,
    pub nx: usize,
    pub dt: f64,
    pub t_final: f64,
    pub t0: f64,
}

impl Grid1D {
    pub fn h(&self) -> f64 {
        self.x_max / (self.nx - 1) as f64
    }

    /// Grid with step close to `h` and the largest stable `dt` landing exactly on `t_final`.
    pub fn with_step(x_max: f64, h: f64, t_final: f64, beta: f64, t0: f64) -> Result<Grid1D> {
        Self::with_step_cfl(x_max, h, t_final, beta, t0, HjbOptions::default().cfl)
    }

    pub fn with_step_cfl(x_max: f64, h: f64, t_final: f64, beta: f64, t0: f64, cfl: f64) -> Result<Grid1D> {
        ensure!(h > 0.0 && x_max > h, Config, "need 0 < h < x_max, got h={h}, x_max={x_max}");
        ensure!(t0 > 0.0 && t_final > t0, Config, "need 0 < t0 < t_final, got t0={t0}, t_final={t_final}");
        let nx = libm::round(x_max / h) as usize + 1;
        let h = x_max / (nx - 1) as f64;
        let dt_max = cfl * h * h / (1.0 + fabs(beta) * h);
        let steps = libm::ceil((t_final - t0) / dt_max).max(1.0);
        Ok(Grid1D { x_max, nx, dt: (t_final - t0) / steps, t_final, t0 })
    }

    /// Default truncation `max(10, y + 8√t_final)`.
    pub fn default_x_max(y: f64, t_final: f64) -> f64 {
        10.0f64.max(y + 8.0 * sqrt(t_final))
    }

    pub fn steps(&self) -> usize {
        libm::round((self.t_final - self.t0) / self.dt) as usize
    }

    pub fn validate(&self, beta: f64, cfl: f64) -> Result<()> {
        ensure!(self.nx >= 3, Config, "need at least 3 nodes, got {}", self.nx);
        ensure!(self.x_max > 0.0 && self.x_max.is_finite(), Config, "x_max must be positive");
        ensure!(self.t0 > 0.0 && self.t0 < self.t_final, Config, "need 0 < t0 < t_final");
        ensure!(self.dt > 0.0, Config, "dt must be positive");
        ensure!(cfl > 0.0 && cfl <= 0.5, Config, "cfl safety factor must lie in (0, 0.5], got {cfl}");
        let h = self.h();
        let limit = cfl * h * h / (1.0 + fabs(beta) * h);
        ensure!(
            self.dt <= limit * (1.0 + 1e-12),
            Config,
            "CFL violated: dt={} exceeds {limit:e} (h={h}, beta={beta}, cfl={cfl})",
            self.dt
        );
        Ok(())
    }
}

/// Values on a uniform `x` grid at a list of times, with their `x` derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub x_max: f64,
    pub nx: usize,
    pub times: Vec<f64>,
    /// Row-major, one row of `nx` values per time.
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
}

impl DensityField {
    pub fn h(&self) -> f64 {
        self.x_max / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.nx..(k + 1) * self.nx]
    }

    pub fn derivative_row(&self, k: usize) -> &[f64] {
        &self.derivative[k * self.nx..(k + 1) * self.nx]
    }

    /// Index of the stored time closest to `t`.
    pub fn nearest_slice(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, &s) in self.times.iter().enumerate() {
            if fabs(s - t) < fabs(self.times[best] - t) {
                best = k;
            }
        }
        best
    }

    fn interpolate(row: &[f64], h: f64, x: f64) -> f64 {
        let pos = x / h;
        let i = (pos as usize).min(row.len() - 2);
        let frac = pos - i as f64;
        row[i] * (1.0 - frac) + row[i + 1] * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HjbSolution {
    pub field: DensityField,
    pub beta: f64,
    pub y: f64,
    /// Regularisation used by the Hamiltonian (zero unless the scheme is regularised).
    pub epsilon: f64,
    pub scheme: HamiltonianScheme,
    pub grid: Grid1D,
    /// Trapezoidal mass `∫ w dx` at each stored time.
    pub mass: Vec<f64>,
}

impl HjbSolution {
    pub fn times(&self) -> &[f64] {
        &self.field.times
    }

    pub fn w(&self, k: usize) -> &[f64] {
        self.field.row(k)
    }

    pub fn wx(&self, k: usize) -> &[f64] {
        self.field.derivative_row(k)
    }

    /// `w(t, x)` by linear interpolation in `x` on the slice nearest to `t`.
    ///
    /// Fails unless a stored slice lies within half a time step of `t`.
    pub fn value_at(&self, t: f64, x: f64) -> Result<f64> {
        ensure!(x >= 0.0 && x <= self.field.x_max, Domain, "x={x} outside [0, {}]", self.field.x_max);
        let k = self.field.nearest_slice(t);
        ensure!(
            fabs(self.field.times[k] - t) <= 0.5 * self.grid.dt + 1e-12,
            Domain,
            "no stored slice at t={t}"
        );
        Ok(DensityField::interpolate(self.field.row(k), self.field.h(), x))
    }
}

/// Initial profile at `t0`: the extremal-density bound kernel for drift bound `β`.
///
/// Exact for `y = 0`; equals the reflected heat kernel for `β = 0`.
pub fn initial_profile(beta: f64, y: f64, t0: f64, x: f64) -> f64 {
    if beta == 0.0 {
        return gauss(t0, x - y) + gauss(t0, x + y);
    }
    image_with_tail(beta, t0, fabs(x - y)) + image_with_tail(beta, t0, x + y)
}

struct Hamiltonian {
    beta: f64,
    scheme: HamiltonianScheme,
}

impl Hamiltonian {
    // `fwd`, `bwd`: one-sided differences at the node.
    #[inline]
    fn eval(&self, fwd: f64, bwd: f64) -> f64 {
        let b = self.beta;
        match self.scheme {
            HamiltonianScheme::Central => b * fabs(0.5 * (fwd + bwd)),
            HamiltonianScheme::Godunov => {
                if b >= 0.0 {
                    b * fwd.max(-bwd).max(0.0)
                } else {
                    -b * fwd.min(-bwd).min(0.0)
                }
            }
            HamiltonianScheme::Regularized { epsilon } => {
                let c = 0.5 * (fwd + bwd);
                b * sqrt(c * c + epsilon * epsilon)
            }
        }
    }
}

fn trapezoid(row: &[f64], h: f64) -> f64 {
    let inner: f64 = row.iter().sum();
    h * (inner - 0.5 * (row[0] + row[row.len() - 1]))
}

fn node_derivative(v: &[f64], out: &mut [f64]) {
    let n = out.len();
    out[0] = 0.0;
    for i in 1..n - 1 {
        out[i] = 0.5 * (v[i - 1] + v[i]);
    }
    out[n - 1] = v[n - 2];
}

/// Marches `w` from `t0` to `grid.t_final`.
pub fn solve_hjb(beta: f64, y: f64, grid: &Grid1D, options: &HjbOptions) -> Result<HjbSolution> {
    ensure!(beta.is_finite(), Domain, "beta must be finite, got {beta}");
    ensure!(y >= 0.0 && y.is_finite(), Domain, "center must be nonnegative, got {y}");
    grid.validate(beta, options.cfl)?;
    ensure!(y < grid.x_max, Config, "center y={y} must be below x_max={}", grid.x_max);
    let epsilon = match options.scheme {
        HamiltonianScheme::Regularized { epsilon } => {
            ensure!(epsilon >= 0.0, Config, "epsilon must be nonnegative, got {epsilon}");
            epsilon
        }
        _ => 0.0,
    };
    ensure!(options.max_slices >= 2, Config, "need at least two stored slices");

    let n = grid.nx;
    let h = grid.h();
    let inv_h = 1.0 / h;
    let ham = Hamiltonian { beta, scheme: options.scheme };

    let mut w: Vec<f64> = (0..n).map(|i| initial_profile(beta, y, grid.t0, i as f64 * h)).collect();
    w[n - 1] = 0.0;
    let mut v: Vec<f64> = (0..n - 1).map(|i| (w[i + 1] - w[i]) * inv_h).collect();
    let mut g = vec![0.0; n];
    let mut wx = vec![0.0; n];

    let steps = grid.steps();
    let stride = libm::ceil(steps as f64 / (options.max_slices - 1) as f64).max(1.0) as usize;
    let mut field = DensityField { x_max: grid.x_max, nx: n, times: Vec::new(), values: Vec::new(), derivative: Vec::new() };
    let mut mass = Vec::new();
    let store = |t: f64, w: &[f64], v: &[f64], wx: &mut [f64], field: &mut DensityField, mass: &mut Vec<f64>| {
        node_derivative(v, wx);
        field.times.push(t);
        field.values.extend_from_slice(w);
        field.derivative.extend_from_slice(wx);
        mass.push(trapezoid(w, h));
    };
    store(grid.t0, &w, &v, &mut wx, &mut field, &mut mass);

    let dt = grid.dt;
    for step in 1..=steps {
        g[0] = v[0] * inv_h + ham.eval(v[0], -v[0]);
        for i in 1..n - 1 {
            g[i] = 0.5 * (v[i] - v[i - 1]) * inv_h + ham.eval(v[i], v[i - 1]);
        }
        g[n - 1] = 0.0;
        for i in 0..n - 1 {
            v[i] += dt * (g[i + 1] - g[i]) * inv_h;
        }
        for i in 0..n {
            w[i] += dt * g[i];
        }
        if step % stride == 0 || step == steps {
            let t = if step == steps { grid.t_final } else { grid.t0 + step as f64 * dt };
            store(t, &w, &v, &mut wx, &mut field, &mut mass);
        }
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(crate::Error::NoConvergence { iterations: steps, residual: f64::NAN });
    }
    Ok(HjbSolution { field, beta, y, epsilon, scheme: options.scheme, grid: *grid, mass })
}

/// Extinction status of the nodal curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extinction {
    /// The interior sign change disappears at this time and does not return.
    At(f64),
    /// An interior sign change persists through the last stored slice.
    BeyondHorizon,
    /// Center at the boundary: `w_x ≤ 0` from the start, no curve exists.
    NoInteriorCurve,
}

/// Interior zeros of `w_x` over time.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundaryCurve {
    /// `(t, s(t))` for every slice with at least one interior sign change (first root).
    pub samples: Vec<(f64, f64)>,
    pub tau: Extinction,
    /// Slices with more than one interior sign change, with all their roots.
    pub multi_root: Vec<(f64, Vec<f64>)>,
    /// Number of interior sign changes per stored slice.
    pub roots_per_slice: Vec<usize>,
}

impl FreeBoundaryCurve {
    pub fn tau(&self) -> Option<f64> {
        match self.tau {
            Extinction::At(t) => Some(t),
            _ => None,
        }
    }
}

/// Interior sign changes of a derivative row, skipping the first two cells.
pub fn interior_roots(wx: &[f64], h: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (i, &d) in wx.iter().enumerate().skip(2).take(wx.len().saturating_sub(3)) {
        if d == 0.0 {
            continue;
        }
        if let Some((j, prev)) = last {
            if (prev > 0.0) != (d > 0.0) {
                let frac = prev / (prev - d);
                roots.push((j as f64 + frac * (i - j) as f64) * h);
            }
        }
        last = Some((i, d));
    }
    roots
}

/// Scans each stored slice for interior sign changes of `w_x`.
pub fn extract_free_boundary(sol: &HjbSolution) -> FreeBoundaryCurve {
    let field = &sol.field;
    let h = field.h();
    let mut samples = Vec::new();
    let mut multi_root = Vec::new();
    let mut roots_per_slice = Vec::with_capacity(field.times.len());
    for (k, &t) in field.times.iter().enumerate() {
        let roots = if sol.y == 0.0 { Vec::new() } else { interior_roots(field.derivative_row(k), h) };
        roots_per_slice.push(roots.len());
        if let Some(&s) = roots.first() {
            samples.push((t, s));
        }
        if roots.len() > 1 {
            multi_root.push((t, roots));
        }
    }
    let tau = if sol.y == 0.0 {
        Extinction::NoInteriorCurve
    } else {
        match roots_per_slice.iter().rposition(|&c| c > 0) {
            None => Extinction::At(field.times[0]),
            Some(k) if k + 1 == field.times.len() => Extinction::BeyondHorizon,
            Some(k) => Extinction::At(field.times[k + 1]),
        }
    };
    FreeBoundaryCurve { samples, tau, multi_root, roots_per_slice }
}

/// Feedback drift `β·sgn(w_x(T − t, x))` for a process run over `[0, T]`, `T = t_final`.
///
/// Remaining times below `t0` reuse the first slice.
pub fn optimal_drift_field(sol: &HjbSolution) -> DriftField {
    let field = &sol.field;
    let horizon = sol.grid.t_final;
    let slices = field.times.len();
    let mut times = Vec::with_capacity(slices);
    let mut values = Vec::with_capacity(slices * field.nx);
    for k in (0..slices).rev() {
        times.push(horizon - field.times[k]);
        values.extend_from_slice(field.derivative_row(k));
    }
    times[0] = 0.0;
    let table = DriftTable::new(times, field.x_max, field.nx, values).expect("slice layout is consistent");
    DriftField::gradient_sign(table, sol.beta)
}
