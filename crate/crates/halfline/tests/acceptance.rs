//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use halfline::Threads;
use halfline_core::closed_form::{
    bang_bang_density, heat_kernel, q_kappa_explicit, reflected_drift_density, BangBangParams,
};
use halfline_core::control::{
    solve_value_ode, validate_optimality, value_closed_form, ControlMcSettings, ControlProblem, CostKind, OdeGrid,
    RunningCost,
};
use halfline_core::drift::DriftField;
use halfline_core::hjb::{extract_free_boundary, solve_hjb, Grid1D, HjbOptions};
use halfline_core::laplace::{invert_laplace, InversionConfig};
use halfline_core::quadrature::integrate_to_infinity;
use halfline_core::resolvent::{
    bangbang_suboptimality_check, reflected_bangbang_density, resolvent_coefficients, resolvent_value,
    SuboptimalityConfig,
};
use halfline_core::verify::{standard_drifts, verify_bounds, verify_representation, McSettings};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

type Check = fn() -> Verdict;

fn closed_form_consistency() -> Verdict {
    let ts = [0.05, 0.3, 1.0, 2.5, 6.0];
    let xs = [0.0, 0.2, 0.9, 2.0, 4.5];
    let mut worst: f64 = 0.0;
    for kappa in [0.5, 1.0, 2.0] {
        for &t in &ts {
            for &x in &xs {
                for &z in &xs {
                    let a = q_kappa_explicit(kappa, t, x, z).unwrap();
                    let b = reflected_drift_density(-kappa, t, x, z).unwrap();
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    verdict(worst <= 1e-10, format!("max |diff| = {worst:.2e} (tol 1e-10)"))
}

fn normalization() -> Verdict {
    let betas = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let ts = [0.1, 1.0, 5.0];
    let xs = [0.0, 0.5, 3.0];
    let half_line = |f: &dyn Fn(f64) -> f64| integrate_to_infinity(f, 0.0, 1e-13, 1e-12).unwrap().value;
    let mut worst: f64 = 0.0;
    for &beta in &betas {
        for &t in &ts {
            for &x in &xs {
                let masses = [
                    half_line(&|z| reflected_drift_density(beta, t, x, z).unwrap()),
                    half_line(&|z| q_kappa_explicit(f64::abs(beta), t, x, z).unwrap()),
                    half_line(&|u| {
                        let p = BangBangParams { beta, center: 1.0 };
                        bang_bang_density(p, x, t, 1.0 + u).unwrap() + bang_bang_density(p, x, t, 1.0 - u).unwrap()
                    }),
                    half_line(&|u| heat_kernel(t, x, x + u).unwrap() + heat_kernel(t, x, x - u).unwrap()),
                ];
                for m in masses {
                    worst = worst.max((m - 1.0).abs());
                }
            }
        }
    }
    verdict(worst <= 1e-8, format!("max |mass - 1| = {worst:.2e} over 180 integrals (tol 1e-8)"))
}

fn laplace_round_trip() -> Verdict {
    let config = InversionConfig { tolerance: 1e-3, ..Default::default() };
    type Pair = (fn(Complex64) -> Complex64, fn(f64) -> f64);
    let pairs: [Pair; 3] = [
        (|s| 1.0 / (s + 1.0), |t| (-t).exp()),
        (|s| 1.0 / (s * s), |t| t),
        (|s| 1.0 / (s * s + 1.0), f64::sin),
    ];
    let mut textbook: f64 = 0.0;
    for (f, exact) in pairs {
        for t in [0.5, 1.0, 2.0] {
            textbook = textbook.max((invert_laplace(f, t, &config).unwrap().value - exact(t)).abs());
        }
    }
    let a = 0.7;
    let mut heat: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let v = invert_laplace(|s| (-a * s.sqrt()).exp() / s.sqrt(), t, &config).unwrap().value;
        heat = heat.max((v - (-a * a / (4.0 * t)).exp() / (std::f64::consts::PI * t).sqrt()).abs());
    }
    let mut resolvent: f64 = 0.0;
    for t in [0.5, 1.0, 3.0] {
        for x in [0.0, 0.5, 2.0] {
            let v = reflected_bangbang_density(1.0, 0.0, t, x).unwrap();
            resolvent = resolvent.max((v - q_kappa_explicit(1.0, t, x, 0.0).unwrap()).abs());
        }
    }
    verdict(
        textbook <= 1e-8 && heat <= 1e-6 && resolvent <= 1e-5,
        format!("textbook {textbook:.2e} (1e-8), heat kernel {heat:.2e} (1e-6), boundary center {resolvent:.2e} (1e-5)"),
    )
}

fn resolvent_structure() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let beta = rng.random_range(-3.0..=3.0);
        let lambda = 10.0 * (1.0 - rng.random::<f64>());
        let y = rng.random_range(0.0..=5.0);
        let c = resolvent_coefficients(beta, lambda, y).unwrap();
        worst = worst.max(c.neumann_residual()).max(c.knot_residual());
    }
    let lambda = 1e-6;
    let mut abelian: f64 = 0.0;
    for (beta, y) in [(1.0, 1.0), (2.0, 0.5), (0.5, 2.0)] {
        let c = resolvent_coefficients(beta, lambda, y).unwrap();
        let limit = 2.0 * beta / (2.0 - (-2.0 * beta * y).exp());
        for x in [0.0, 0.5, 1.0, 3.0] {
            abelian = abelian.max((lambda * resolvent_value(&c, x).unwrap() - limit).abs());
        }
    }
    verdict(
        worst <= 1e-12 && abelian <= 1e-3,
        format!("max residual {worst:.2e} over 1000 draws (1e-12), Abelian limit error {abelian:.2e} (1e-3)"),
    )
}

fn hjb_error(h: f64) -> f64 {
    let options = HjbOptions::default();
    let grid = Grid1D::with_step(10.0, h, 1.0, 1.0, options.t0).unwrap();
    let sol = solve_hjb(1.0, 0.0, &grid, &options).unwrap();
    let k = sol.times().len() - 1;
    sol.w(k)
        .iter()
        .enumerate()
        .map(|(i, &w)| (w - q_kappa_explicit(1.0, 1.0, sol.field.x(i), 0.0).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn hjb_closed_form() -> Verdict {
    let coarse = hjb_error(0.01);
    let fine = hjb_error(0.005);
    let ratio = coarse / fine;
    verdict(
        coarse <= 1e-2 && ratio >= 1.8,
        format!("L∞ error {coarse:.3e} at h=0.01 (1e-2), {fine:.3e} at h=0.005, ratio {ratio:.2} (≥ 1.8)"),
    )
}

fn free_boundary() -> Verdict {
    let (h, horizon) = (0.05, 300.0);
    let options = HjbOptions::default();
    let mut taus = Vec::new();
    let mut problems = Vec::new();
    for y in [1.0, 5.0, 10.0] {
        let grid = Grid1D::with_step(Grid1D::default_x_max(y, horizon), h, horizon, 1.0, options.t0).unwrap();
        let sol = solve_hjb(1.0, y, &grid, &options).unwrap();
        let curve = extract_free_boundary(&sol);
        let Some(tau) = curve.tau() else {
            problems.push(format!("y={y}: no extinction before T={horizon}"));
            continue;
        };
        let shape_ok = sol
            .times()
            .iter()
            .zip(&curve.roots_per_slice)
            .all(|(&t, &n)| if t < tau { n == 1 } else { n == 0 });
        if !shape_ok {
            problems.push(format!("y={y}: root count not 1 before / 0 after tau"));
        }
        let start = curve.samples.first().map_or(f64::NAN, |s| s.1);
        if (start - y).abs().is_nan() || (start - y).abs() > 2.0 * sol.field.h() {
            problems.push(format!("y={y}: s(t0)={start}"));
        }
        taus.push((y, tau));
    }
    let increasing = taus.windows(2).all(|w| w[1].1 > w[0].1);
    let listed: Vec<String> = taus.iter().map(|(y, t)| format!("tau({y})={t:.3}")).collect();
    verdict(
        problems.is_empty() && increasing && taus.len() == 3,
        format!("{} {}", listed.join(" "), problems.join("; ")),
    )
}

fn comparison_theorem() -> Verdict {
    let settings = McSettings { n_paths: 1_000_000, dt: 1e-3, seed: 7, ..Default::default() };
    let report =
        verify_bounds(1.0, &standard_drifts(1.0), 0.5, 1.0, 0.0, &settings, &Threads::from_env()).unwrap();
    let rows: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{}={:.4}±{:.1e}", r.label, r.estimate.mean, r.estimate.std_error))
        .collect();
    verdict(
        report.pass() && report.rows.len() == 3,
        format!("[{:.4}, {:.4}] {}", report.bounds.lower, report.bounds.upper, rows.join(" ")),
    )
}

fn representation() -> Verdict {
    let settings = McSettings { n_paths: 400_000, dt: 1e-3, seed: 11, ..Default::default() };
    let exec = Threads::from_env();
    let mut pass = true;
    let mut parts = Vec::new();
    for (b, c) in [(-1.0, 1.0), (0.0, -1.0)] {
        let r = verify_representation(
            &DriftField::constant(b),
            &DriftField::constant(c),
            0.5,
            1.0,
            0.0,
            &settings,
            &exec,
        )
        .unwrap();
        pass &= r.pass();
        parts.push(format!(
            "(b={b}, c={c}) lhs {:.4} rhs {:.4} |diff|/se {:.2}",
            r.lhs.mean,
            r.rhs,
            r.difference().abs() / r.combined_std_error
        ));
    }
    verdict(pass, parts.join("; "))
}

fn suboptimality() -> Verdict {
    let grid: Vec<f64> = (0..=12).map(|i| 0.25 * i as f64).collect();
    let config = SuboptimalityConfig::default();
    let interior = bangbang_suboptimality_check(1.0, 1.0, 1.0, &grid, &config).unwrap();
    let boundary = bangbang_suboptimality_check(1.0, 0.0, 1.0, &grid, &config).unwrap();
    let best = interior.rows.iter().map(|r| r.gap() / r.tolerance).fold(f64::NEG_INFINITY, f64::max);
    verdict(
        interior.strictly_below && boundary.agrees,
        format!("y=1 max gap/tolerance {best:.2} (> 5), y=0 agrees: {}", boundary.agrees),
    )
}

fn control() -> Verdict {
    let mut ode: f64 = 0.0;
    for kind in [CostKind::Linear, CostKind::Quadratic] {
        let cost = match kind {
            CostKind::Linear => RunningCost::linear(),
            CostKind::Quadratic => RunningCost::quadratic(),
        };
        let problem = ControlProblem::new(1.0, 1.0, cost).unwrap();
        let v = solve_value_ode(&problem, &OdeGrid::default()).unwrap();
        for i in 0..v.values.len() / 2 {
            ode = ode.max((v.values[i] - value_closed_form(kind, 1.0, 1.0, v.x(i)).unwrap()).abs());
        }
    }
    let v0 = value_closed_form(CostKind::Linear, 1.0, 1.0, 0.0).unwrap();
    let v0_err = (v0 - (3f64.sqrt() - 1.0) / 2.0).abs();

    let problem = ControlProblem::new(1.0, 1.0, RunningCost::linear()).unwrap();
    let competitors = [DriftField::constant(0.0).with_bound(1.0), DriftField::constant(1.0)];
    let settings = ControlMcSettings { n_paths: 200_000, dt: 1e-2, seed: 3, ..Default::default() };
    let report = validate_optimality(&problem, 0.5, &competitors, &settings, &Threads::from_env()).unwrap();
    let worse = report.competitors.iter().find(|c| c.label == "constant(1)").is_some_and(|c| c.strictly_worse);
    verdict(
        ode <= 1e-4 && v0_err <= 1e-14 && report.pass() && worse,
        format!(
            "ODE error {ode:.2e} (1e-4), v(0)={v0:.15}, J(u*)={:.5}±{:.1e} vs v(0.5)={:.5}, competitors {}",
            report.optimal.mean,
            report.optimal.std_error,
            report.value,
            report
                .competitors
                .iter()
                .map(|c| format!("{}={:.4}", c.label, c.estimate.mean))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    )
}

fn main() {
    let criteria: [(&str, Check, Duration); 10] = [
        ("closed-form consistency", closed_form_consistency, Duration::from_secs(1)),
        ("normalization", normalization, Duration::from_secs(10)),
        ("laplace round trip", laplace_round_trip, Duration::from_secs(10)),
        ("resolvent structure", resolvent_structure, Duration::from_secs(5)),
        ("hjb vs closed form", hjb_closed_form, Duration::from_secs(120)),
        ("free boundary", free_boundary, Duration::from_secs(300)),
        ("comparison theorem", comparison_theorem, Duration::from_secs(180)),
        ("representation formula", representation, Duration::from_secs(180)),
        ("bang-bang suboptimality", suboptimality, Duration::from_secs(300)),
        ("control", control, Duration::from_secs(180)),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed < *limit;
        failed += usize::from(!pass);
        println!(
            "{} criterion {n} ({name}): {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
