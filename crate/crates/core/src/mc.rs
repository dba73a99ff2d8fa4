//! Monte Carlo for reflected diffusions `dX = b(t, X) dt + dB + dL` on `[0, ∞)`.
//!
//! The default step solves the one-step Skorokhod problem exactly for the frozen drift by
//! sampling the minimum of the Brownian bridge between grid points, so constant drifts are
//! simulated without time-discretisation error. The folding step `X = |Y|` is kept as an
//! alternative.
//!
//! Paths are generated in fixed-size chunks, each with its own ChaCha8 stream, so results
//! depend only on the seed and never on how chunks are scheduled.

use alloc::sync::Arc;
use alloc::vec::Vec;

use libm::{fabs, log, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::closed_form::{bang_bang_centered, grad_unchecked, reflected_unchecked};
use crate::drift::{DriftField, DriftKind};
use crate::error::ensure;
use crate::Result;

/// Paths per independent random stream.
pub const CHUNK: usize = 4096;

/// Per-step reflection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Exact reflection for the frozen drift via the bridge minimum.
    Skorokhod,
    /// Euler step followed by folding at zero.
    Fold,
}

/// Runs independent jobs, possibly in parallel, returning results in job order.
pub trait Executor: Sync {
    fn run<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..jobs).map(f).collect()
    }
}

/// Extra quantities accumulated along paths for change-of-measure estimators.
#[derive(Debug, Clone)]
pub struct Perturbation {
    /// Drift `c` in the weight `R = exp(∫ c dW − ½ ∫ c² dt)`.
    pub c: DriftField,
    /// When set, accumulate `∫₀ᵀ R_r c(r, X_r) ∂ₓq_β(T − r, X_r, y) dr` for constant drift `β`.
    pub gradient_probe: Option<GradientProbe>,
}

/// Running cost integrated along paths as `∫₀ᵀ e^{−λt} f(X_t) dt` (trapezoidal rule).
#[derive(Clone)]
pub struct DiscountedCost {
    pub lambda: f64,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl core::fmt::Debug for DiscountedCost {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "DiscountedCost {{ lambda: {} }}", self.lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientProbe {
    pub beta: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub x0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub perturbation: Option<Perturbation>,
    pub cost: Option<DiscountedCost>,
}

impl SimConfig {
    pub fn new(x0: f64, horizon: f64, dt: f64, n_paths: usize, seed: u64) -> SimConfig {
        SimConfig { x0, horizon, dt, n_paths, seed, scheme: Scheme::Skorokhod, perturbation: None, cost: None }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> SimConfig {
        self.scheme = scheme;
        self
    }

    pub fn with_perturbation(mut self, perturbation: Perturbation) -> SimConfig {
        self.perturbation = Some(perturbation);
        self
    }

    pub fn with_cost(mut self, cost: DiscountedCost) -> SimConfig {
        self.cost = Some(cost);
        self
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.x0 >= 0.0 && self.x0.is_finite(), Config, "x0 must be nonnegative, got {}", self.x0);
        ensure!(self.horizon > 0.0 && self.horizon.is_finite(), Config, "horizon must be positive");
        ensure!(
            self.dt > 0.0 && self.dt <= self.horizon,
            Config,
            "need 0 < dt <= horizon, got dt={} horizon={}",
            self.dt,
            self.horizon
        );
        ensure!(self.n_paths >= 1, Config, "need at least one path");
        Ok(())
    }
}

/// Terminal states and accumulators of a simulation.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub terminal: Vec<f64>,
    pub local_time: Vec<f64>,
    /// Cameron–Martin weight `R_T` per path, if a perturbation was set.
    pub weight: Vec<f64>,
    /// Time integral of the gradient probe per path, if requested.
    pub probe_integral: Vec<f64>,
    /// Discounted running cost per path, if requested.
    pub cost: Vec<f64>,
    /// Number of drift evaluations that had to be clamped to `[−κ, κ]`.
    pub clamp_violations: u64,
    pub drift: DriftField,
    pub x0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub steps: usize,
}

impl PathBundle {
    pub fn n_paths(&self) -> usize {
        self.terminal.len()
    }

    fn estimate(&self, samples: impl Iterator<Item = f64>) -> McEstimate {
        let (mean, std_error, n) = mean_and_error(samples);
        McEstimate {
            mean,
            std_error,
            n_paths: n,
            dt: self.dt,
            seed: self.seed,
            scheme: self.scheme,
        }
    }

    pub fn mean_terminal(&self) -> McEstimate {
        self.estimate(self.terminal.iter().copied())
    }

    pub fn mean_local_time(&self) -> McEstimate {
        self.estimate(self.local_time.iter().copied())
    }

    pub fn mean_weight(&self) -> Option<McEstimate> {
        (!self.weight.is_empty()).then(|| self.estimate(self.weight.iter().copied()))
    }

    pub fn mean_cost(&self) -> Option<McEstimate> {
        (!self.cost.is_empty()).then(|| self.estimate(self.cost.iter().copied()))
    }

    pub fn mean_probe_integral(&self) -> Option<McEstimate> {
        (!self.probe_integral.is_empty()).then(|| self.estimate(self.probe_integral.iter().copied()))
    }
}

/// A Monte Carlo mean with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors plus `slack`.
    pub fn agrees_with(&self, value: f64, k: f64, slack: f64) -> bool {
        fabs(self.mean - value) <= k * self.std_error + slack
    }
}

pub(crate) fn mean_and_error(samples: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    // Welford
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for s in samples {
        n += 1;
        let d = s - mean;
        mean += d / n as f64;
        m2 += d * (s - mean);
    }
    if n < 2 {
        return (mean, 0.0, n);
    }
    let var = m2 / (n - 1) as f64;
    (mean, sqrt(var / n as f64), n)
}

/// One exact Skorokhod step of the reflected process.
///
/// `free` is the free increment `b·dt + ΔB`; returns the new state and local-time increment.
#[inline]
fn bridge_step<R: Rng>(x: f64, free: f64, dt: f64, rng: &mut R) -> (f64, f64) {
    let end = x + free;
    if end > 0.0 && 2.0 * x * end > 60.0 * dt {
        return (end, 0.0);
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    let min = 0.5 * (free - sqrt(free * free - 2.0 * dt * log(u)));
    let push = (-x - min).max(0.0);
    (end + push, push)
}

#[inline]
fn fold_step(x: f64, free: f64) -> (f64, f64) {
    let y = x + free;
    if y >= 0.0 { (y, 0.0) } else { (-y, -2.0 * y) }
}

/// Step of the bang-bang process pulled toward `center > 0` with strength `pull`.
#[inline]
fn bang_bang_step<R: Rng>(x: f64, pull: f64, center: f64, db: f64, dt: f64, rng: &mut R) -> (f64, f64) {
    if x < 0.5 * center {
        return bridge_step(x, pull * dt + db, dt, rng);
    }
    // |X − center| is reflected at 0 with drift −pull; excursion signs are fair coins.
    let side = if x >= center { 1.0 } else { -1.0 };
    let (dist, touched) = bridge_step(fabs(x - center), -pull * dt + side * db, dt, rng);
    let side = if touched > 0.0 {
        if rng.random::<bool>() { 1.0 } else { -1.0 }
    } else {
        side
    };
    let next = center + side * dist;
    if next >= 0.0 { (next, 0.0) } else { (-next, -2.0 * next) }
}

/// Simulation times: uniform steps of `dt`, refined geometrically toward the horizon when
/// `refine` is set.
fn time_grid(horizon: f64, dt: f64, refine: bool) -> Vec<f64> {
    let mut times = Vec::new();
    let mut t = 0.0;
    times.push(t);
    let floor = 1e-9 * horizon;
    loop {
        let left = horizon - t;
        if left <= floor || (!refine && left <= 1e-12 * horizon) {
            break;
        }
        let mut step = dt.min(left);
        if refine {
            step = step.min(0.1 * left).max(floor.min(left));
        }
        if left - step < 1e-12 * horizon {
            step = left;
        }
        t += step;
        times.push(if step == left { horizon } else { t });
    }
    times
}

struct ChunkOut {
    terminal: Vec<f64>,
    local_time: Vec<f64>,
    weight: Vec<f64>,
    probe: Vec<f64>,
    cost: Vec<f64>,
    clamps: u64,
}

fn simulate_chunk(drift: &DriftField, config: &SimConfig, times: &[f64], chunk: usize) -> ChunkOut {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chunk as u64);
    let start = chunk * CHUNK;
    let count = CHUNK.min(config.n_paths - start);
    let perturbation = config.perturbation.as_ref();
    let probe = perturbation.and_then(|p| p.gradient_probe);
    let mut out = ChunkOut {
        terminal: Vec::with_capacity(count),
        local_time: Vec::with_capacity(count),
        weight: Vec::with_capacity(if perturbation.is_some() { count } else { 0 }),
        probe: Vec::with_capacity(if probe.is_some() { count } else { 0 }),
        cost: Vec::with_capacity(if config.cost.is_some() { count } else { 0 }),
        clamps: 0,
    };
    let bang_bang = match drift.kind {
        DriftKind::BangBang { pull, center } if center > 0.0 && config.scheme == Scheme::Skorokhod => {
            Some((pull.clamp(-drift.kappa, drift.kappa), center))
        }
        _ => None,
    };
    let horizon = config.horizon;
    for _ in 0..count {
        let mut x = config.x0;
        let mut local = 0.0;
        let mut log_weight = 0.0;
        let mut integral = 0.0;
        let mut integrand_prev = 0.0;
        let mut cost = 0.0;
        let mut cost_prev = config.cost.as_ref().map_or(0.0, |c| (c.f)(x));
        if let (Some(p), Some(pert)) = (probe, perturbation) {
            let (c, _) = pert.c.eval(0.0, x);
            integrand_prev = c * grad_unchecked(p.beta, horizon, x, p.y);
        }
        for k in 1..times.len() {
            let t = times[k - 1];
            let dt = times[k] - t;
            let db = sqrt(dt) * rng.sample::<f64, _>(StandardNormal);
            let c_here = perturbation.map(|p| {
                let (c, clamped) = p.c.eval(t, x);
                out.clamps += clamped as u64;
                c
            });
            let (next, push) = if let Some((pull, center)) = bang_bang {
                bang_bang_step(x, pull, center, db, dt, &mut rng)
            } else {
                let (b, clamped) = drift.eval(t, x);
                out.clamps += clamped as u64;
                match config.scheme {
                    Scheme::Skorokhod => bridge_step(x, b * dt + db, dt, &mut rng),
                    Scheme::Fold => fold_step(x, b * dt + db),
                }
            };
            x = next;
            local += push;
            if let Some(c) = &config.cost {
                let here = libm::exp(-c.lambda * times[k]) * (c.f)(x);
                cost += 0.5 * dt * (cost_prev + here);
                cost_prev = here;
            }
            if let Some(c) = c_here {
                log_weight += c * db - 0.5 * c * c * dt;
                if let (Some(p), Some(pert)) = (probe, perturbation) {
                    let remaining = horizon - times[k];
                    let integrand = if remaining > 0.0 {
                        let (c_next, _) = pert.c.eval(times[k], x);
                        libm::exp(log_weight) * c_next * grad_unchecked(p.beta, remaining, x, p.y)
                    } else {
                        0.0
                    };
                    integral += 0.5 * dt * (integrand_prev + integrand);
                    integrand_prev = integrand;
                }
            }
        }
        out.terminal.push(x);
        out.local_time.push(local);
        if perturbation.is_some() {
            out.weight.push(libm::exp(log_weight));
        }
        if probe.is_some() {
            out.probe.push(integral);
        }
        if config.cost.is_some() {
            out.cost.push(cost);
        }
    }
    out
}

/// Simulates `n_paths` reflected paths from `x0` to `horizon` under `drift`.
pub fn simulate_reflected<E: Executor>(drift: &DriftField, config: &SimConfig, executor: &E) -> Result<PathBundle> {
    config.validate()?;
    ensure!(drift.kappa.is_finite() && drift.kappa >= 0.0, Config, "drift bound must be finite");
    let refine = config.perturbation.as_ref().is_some_and(|p| p.gradient_probe.is_some());
    // the bridge step is exact in law for a constant drift, so one step suffices
    let exact = matches!(drift.kind, DriftKind::Constant(_))
        && config.scheme == Scheme::Skorokhod
        && config.perturbation.is_none()
        && config.cost.is_none();
    let times = if exact { alloc::vec![0.0, config.horizon] } else { time_grid(config.horizon, config.dt, refine) };
    let chunks = config.n_paths.div_ceil(CHUNK);
    let parts = executor.run(chunks, |chunk| simulate_chunk(drift, config, &times, chunk));
    let mut bundle = PathBundle {
        terminal: Vec::with_capacity(config.n_paths),
        local_time: Vec::with_capacity(config.n_paths),
        weight: Vec::new(),
        probe_integral: Vec::new(),
        cost: Vec::new(),
        clamp_violations: 0,
        drift: drift.clone(),
        x0: config.x0,
        horizon: config.horizon,
        dt: if exact { config.horizon } else { config.dt },
        seed: config.seed,
        scheme: config.scheme,
        steps: times.len() - 1,
    };
    for part in parts {
        bundle.terminal.extend(part.terminal);
        bundle.local_time.extend(part.local_time);
        bundle.weight.extend(part.weight);
        bundle.probe_integral.extend(part.probe);
        bundle.cost.extend(part.cost);
        bundle.clamp_violations += part.clamps;
    }
    Ok(bundle)
}

/// Smoothing kernel for [`estimate_density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    /// Gaussian kernel plus its mirror image at zero.
    Reflection,
    /// Transition density over time `h²` of the reflected process with the local drift at
    /// the evaluation point; removes the first-order boundary bias of [`KernelKind::Reflection`].
    #[default]
    Adapted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    pub kernel: KernelKind,
    pub bandwidth: Bandwidth,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions { kernel: KernelKind::Adapted, bandwidth: Bandwidth::Silverman }
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() { sorted[i] * (1.0 - frac) + sorted[i + 1] * frac } else { sorted[i] }
}

/// Silverman's rule `0.9 · min(sd, IQR/1.34) · n^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let (_, se, n) = mean_and_error(samples.iter().copied());
    let sd = se * sqrt(n as f64);
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * libm::pow(n as f64, -0.2)
}

// Sign change of the terminal drift from + to − within three bandwidths of z, as (pull, location).
fn attracting_switch(drift: &DriftField, t: f64, z: f64, h: f64) -> Option<(f64, f64)> {
    let step = h / 8.0;
    let mut prev: Option<(f64, f64)> = None;
    let mut best: Option<(f64, f64)> = None;
    for k in -24..=24 {
        let x = z + k as f64 * step;
        if x < 0.0 {
            continue;
        }
        let b = drift.eval(t, x).0;
        if let Some((xp, bp)) = prev {
            if bp > 0.0 && b <= 0.0 {
                let center = xp + step * bp / (bp - b);
                let pull = bp.max(-b);
                if best.is_none_or(|(_, c)| fabs(center - z) < fabs(c - z)) {
                    best = Some((pull, center));
                }
            }
        }
        prev = Some((x, b));
    }
    best
}

/// Kernel density estimate of `X_T` at `z ≥ 0`.
pub fn estimate_density(bundle: &PathBundle, z: f64, options: &DensityOptions) -> Result<McEstimate> {
    ensure!(bundle.n_paths() > 0, Config, "empty path bundle");
    ensure!(z >= 0.0 && z.is_finite(), Domain, "z must be nonnegative, got {z}");
    let h = match options.bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(&bundle.terminal),
        Bandwidth::Fixed(h) => h,
    };
    ensure!(h > 0.0 && h.is_finite(), Config, "bandwidth must be positive, got {h}");
    let var = h * h;
    let local_drift = bundle.drift.eval(bundle.horizon, z).0;
    let attracting_switch = attracting_switch(&bundle.drift, bundle.horizon, z, h);
    let kernel = |x: f64| -> f64 {
        match options.kernel {
            KernelKind::Reflection => reflected_unchecked(0.0, var, x, z),
            KernelKind::Adapted => match bundle.drift.kind {
                DriftKind::BangBang { pull, center } => {
                    let pull = pull.clamp(-bundle.drift.kappa, bundle.drift.kappa);
                    bang_bang_centered(-pull, x - center, var, z - center)
                        + bang_bang_centered(-pull, x - center, var, -z - center)
                }
                _ => match attracting_switch {
                    Some((pull, center)) => {
                        bang_bang_centered(-pull, x - center, var, z - center)
                            + bang_bang_centered(-pull, x - center, var, -z - center)
                    }
                    None => reflected_unchecked(local_drift, var, x, z),
                },
            },
        }
    };
    Ok(bundle.estimate(bundle.terminal.iter().map(|&x| kernel(x))))
}

/// Histogram density of `X_T` on `bins` equal cells of `[0, z_max]`.
pub fn histogram(bundle: &PathBundle, z_max: f64, bins: usize) -> Result<Vec<f64>> {
    ensure!(bins > 0 && z_max > 0.0, Config, "need bins > 0 and z_max > 0");
    ensure!(bundle.n_paths() > 0, Config, "empty path bundle");
    let width = z_max / bins as f64;
    let mut counts = alloc::vec![0u64; bins];
    for &x in &bundle.terminal {
        let i = (x / width) as usize;
        if i < bins {
            counts[i] += 1;
        }
    }
    let scale = 1.0 / (bundle.n_paths() as f64 * width);
    Ok(counts.into_iter().map(|c| c as f64 * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::q_kappa_unchecked;
    use core::f64::consts::PI;

    #[test]
    fn time_grid_shapes() {
        let g = time_grid(1.0, 0.25, false);
        assert_eq!(g, alloc::vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = time_grid(1.0, 1e-3, false);
        assert_eq!(g.len(), 1001);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = time_grid(1.0, 0.01, true);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(1.0 - g.last().unwrap() <= 1e-9);
        assert!(g.len() < 400);
    }

    #[test]
    fn folded_normal_mean_and_local_time() {
        let config = SimConfig::new(0.0, 1.0, 0.05, 100_000, 11);
        let bundle = simulate_reflected(&DriftField::constant(0.0), &config, &Sequential).unwrap();
        let m = bundle.mean_terminal();
        assert!(m.agrees_with(sqrt(2.0 / PI), 3.0, 0.0), "{m:?}");
        let l = bundle.mean_local_time();
        assert!(l.agrees_with(sqrt(2.0 / PI), 3.0, 0.0), "{l:?}");
        assert!(bundle.terminal.iter().all(|&x| x >= 0.0));
        assert!(bundle.local_time.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn constant_pull_density() {
        let config = SimConfig::new(0.5, 1.0, 0.1, 200_000, 5);
        let bundle = simulate_reflected(&DriftField::constant(-1.0), &config, &Sequential).unwrap();
        for &z in &[0.0, 0.2, 1.0] {
            let est = estimate_density(&bundle, z, &DensityOptions::default()).unwrap();
            assert!(est.agrees_with(q_kappa_unchecked(1.0, 1.0, 0.5, z), 3.0, 0.0), "z={z}: {est:?}");
        }
    }

    #[test]
    fn seeded_determinism() {
        let config = SimConfig::new(0.3, 0.5, 0.01, 5000, 99);
        let drift = DriftField::function("wave", 1.0, |t, x| libm::sin(3.0 * x + t));
        let a = simulate_reflected(&drift, &config, &Sequential).unwrap();
        let b = simulate_reflected(&drift, &config, &Sequential).unwrap();
        assert_eq!(a.terminal, b.terminal);
        let c = simulate_reflected(&drift, &SimConfig { seed: 100, ..config.clone() }, &Sequential).unwrap();
        assert_ne!(a.terminal, c.terminal);
    }

    #[test]
    fn fold_scheme_runs() {
        let config = SimConfig::new(0.0, 1.0, 1e-3, 20_000, 3).with_scheme(Scheme::Fold);
        let bundle = simulate_reflected(&DriftField::constant(0.0), &config, &Sequential).unwrap();
        assert!(bundle.mean_terminal().agrees_with(sqrt(2.0 / PI), 4.0, 0.0));
    }

    #[test]
    fn weight_is_a_martingale() {
        let pert = Perturbation { c: DriftField::function("c", 1.0, |_, x| libm::cos(x)), gradient_probe: None };
        let config = SimConfig::new(0.5, 1.0, 0.01, 50_000, 21).with_perturbation(pert);
        let bundle = simulate_reflected(&DriftField::constant(-0.5), &config, &Sequential).unwrap();
        let w = bundle.mean_weight().unwrap();
        assert!(w.agrees_with(1.0, 3.0, 0.0), "{w:?}");
    }

    #[test]
    fn density_estimate_normalises() {
        let config = SimConfig::new(0.5, 1.0, 0.1, 50_000, 8);
        let bundle = simulate_reflected(&DriftField::constant(-1.0), &config, &Sequential).unwrap();
        let dz = 0.05;
        let opts = DensityOptions { bandwidth: Bandwidth::Fixed(0.1), ..Default::default() };
        let mass: f64 = (0..200).map(|i| estimate_density(&bundle, (i as f64 + 0.5) * dz, &opts).unwrap().mean * dz).sum();
        assert!((mass - 1.0).abs() < 0.01, "{mass}");
        let hist = histogram(&bundle, 5.0, 100).unwrap();
        let mass: f64 = hist.iter().sum::<f64>() * 0.05;
        assert!((mass - 1.0).abs() < 0.01);
    }

    #[test]
    fn config_errors() {
        let d = DriftField::constant(0.0);
        assert!(simulate_reflected(&d, &SimConfig::new(-1.0, 1.0, 0.1, 10, 0), &Sequential).is_err());
        assert!(simulate_reflected(&d, &SimConfig::new(0.0, 1.0, 2.0, 10, 0), &Sequential).is_err());
        assert!(simulate_reflected(&d, &SimConfig::new(0.0, 1.0, 0.1, 0, 0), &Sequential).is_err());
    }
}
