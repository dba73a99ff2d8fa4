use halfline_core::closed_form::reflected_drift_density;
use halfline_core::drift::DriftField;
use halfline_core::hjb::{extract_free_boundary, optimal_drift_field, solve_hjb, Grid1D, HjbOptions};
use halfline_core::mc::{estimate_density, simulate_reflected, DensityOptions, Scheme, Sequential, SimConfig};
use halfline_core::quadrature::integrate;
use halfline_core::resolvent::reflected_bangbang_density;

#[test]
fn bang_bang_mc_matches_inversion() {
    let drift = DriftField::bang_bang(1.0, 1.0);
    for (i, &x0) in [0.0, 0.5, 1.0, 2.0].iter().enumerate() {
        let config = SimConfig::new(x0, 1.0, 1e-3, 100_000, 11 + i as u64);
        let bundle = simulate_reflected(&drift, &config, &Sequential).unwrap();
        let est = estimate_density(&bundle, 1.0, &DensityOptions::default()).unwrap();
        let exact = reflected_bangbang_density(1.0, 1.0, 1.0, x0).unwrap();
        assert!(est.agrees_with(exact, 4.0, 2e-3), "x0={x0}: {est:?} vs {exact}");
    }
}

#[test]
fn terminal_law_matches_closed_form() {
    let kolmogorov = |scheme: Scheme| {
        let config = SimConfig::new(0.2, 1.0, 0.01, 20_000, 3).with_scheme(scheme);
        let mut s = simulate_reflected(&DriftField::constant(-0.5), &config, &Sequential).unwrap().terminal;
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in s.iter().enumerate() {
            let cdf = integrate(|z| reflected_drift_density(-0.5, 1.0, 0.2, z).unwrap(), 0.0, x, 1e-12, 1e-10).unwrap().value;
            d = d.max((cdf - i as f64 / n).abs()).max((cdf - (i + 1) as f64 / n).abs());
        }
        d * n.sqrt()
    };
    // 1% critical value of the Kolmogorov distribution is 1.63
    assert!(kolmogorov(Scheme::Skorokhod) < 1.63);
    assert!(kolmogorov(Scheme::Fold) < 1.63);
}

#[test]
fn hjb_feedback_attains_extremal_density() {
    let (beta, y, t) = (1.0, 1.0, 1.0);
    let options = HjbOptions::default();
    let grid = Grid1D::with_step(Grid1D::default_x_max(y, t), 0.02, t, beta, options.t0).unwrap();
    let sol = solve_hjb(beta, y, &grid, &options).unwrap();
    let drift = optimal_drift_field(&sol);
    let x0 = 0.3;
    let config = SimConfig::new(x0, t, 1e-3, 100_000, 5);
    let bundle = simulate_reflected(&drift, &config, &Sequential).unwrap();
    let est = estimate_density(&bundle, y, &DensityOptions::default()).unwrap();
    let target = sol.value_at(t, x0).unwrap();
    assert!(est.agrees_with(target, 4.0, 0.02), "{est:?} vs {target}");
    assert!(!extract_free_boundary(&sol).samples.is_empty());
}
