use std::path::Path;
use std::process::Command;

use halfline::output::ParsedCsv;

fn run(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_halfline"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("HALFLINE_THREADS", "2")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn body(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}

#[test]
fn density_normalises() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(dir.path(), &["density", "--beta", "-1", "--t", "1", "--x0", "0.5", "--zmax", "5", "--nz", "200"]);
    assert_eq!(code, 0);
    let csv = ParsedCsv::read(&dir.path().join("density.csv")).unwrap();
    assert_eq!(csv.rows.len(), 200);
    assert_eq!(csv.parameter("beta"), Some("-1"));
    let mass: f64 = csv.column("density").unwrap().iter().sum::<f64>() * 5.0 / 200.0;
    assert!((mass - 1.0).abs() < 1e-3, "{mass}");
}

#[test]
fn zero_drift_is_reflected_heat_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(dir.path(), &["density", "--beta", "0", "--t", "0.5,2", "--x0", "1", "--zmax", "4", "--nz", "8"]);
    assert_eq!(code, 0);
    let csv = ParsedCsv::read(&dir.path().join("density.csv")).unwrap();
    let (t, z, d) = (csv.column("t").unwrap(), csv.column("z").unwrap(), csv.column("density").unwrap());
    assert_eq!(d.len(), 16);
    for i in 0..d.len() {
        let g = |u: f64| (-u * u / (2.0 * t[i])).exp() / (2.0 * std::f64::consts::PI * t[i]).sqrt();
        assert!((d[i] - g(z[i] - 1.0) - g(z[i] + 1.0)).abs() < 1e-14);
    }
}

#[test]
fn missing_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(dir.path(), &["density", "--beta", "-1", "--t", "1", "--zmax", "5", "--nz", "200"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn invalid_value_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(dir.path(), &["density", "--beta", "1", "--t", "-1", "--x0", "0.5", "--zmax", "5", "--nz", "10"]);
    assert_eq!(code, 2);
    assert!(err.contains("time must be positive"), "{err}");
}

fn tau(dir: &Path, y: &str, t: &str) -> (ParsedCsv, Option<f64>) {
    let (code, _, err) = run(dir, &["hjb", "--beta", "1", "--y", y, "--T", t]);
    assert_eq!(code, 0, "{err}");
    let csv = ParsedCsv::read(&dir.join("hjb_free_boundary.csv")).unwrap();
    let tau = csv.parameter("tau").and_then(|v| v.parse().ok());
    (csv, tau)
}

#[test]
fn hjb_free_boundary_files() {
    let dir = tempfile::tempdir().unwrap();
    let (fb, tau1) = tau(dir.path(), "1", "5");
    let tau1 = tau1.expect("finite extinction time for y=1");
    assert!(!fb.rows.is_empty());
    let s = fb.column("s").unwrap();
    assert!((s[0] - 1.0).abs() < 0.05);
    for name in ["hjb_w.csv", "hjb_wx.csv"] {
        let f = ParsedCsv::read(&dir.path().join(name)).unwrap();
        assert_eq!(f.parameter("y"), Some("1"));
        assert!(!f.rows.is_empty());
    }
    // for y=5 the curve outlives the horizon, so its extinction time exceeds T=5 > tau(1)
    let (fb5, tau5) = tau(dir.path(), "5", "5");
    match tau5 {
        Some(t) => assert!(t > tau1),
        None => assert_eq!(fb5.parameter("tau"), Some("beyond-horizon")),
    }
    assert!(tau1 < 5.0);

    let (fb, tau0) = tau(dir.path(), "0", "1");
    assert!(tau0.is_none() && fb.rows.is_empty());
    assert!(fb.comments.iter().any(|c| c == "no interior nodal curve"));
}

#[test]
fn resolvent_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(dir.path(), &["resolvent", "invert", "--beta", "1", "--y", "0", "--t", "1", "--x", "0.5"]);
    assert_eq!(code, 0);
    assert!(out.contains("PASS") && out.contains("closed_form="), "{out}");
    let csv = ParsedCsv::read(&dir.path().join("resolvent_invert.csv")).unwrap();
    assert!(csv.column("abs_diff").unwrap()[0] < 1e-5);
}

#[test]
fn control_value_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run(dir.path(), &["control", "value", "--f", "linear", "--kappa", "1", "--lambda", "1"]);
    assert_eq!(code, 0);
    let csv = ParsedCsv::read(&dir.path().join("control_value.csv")).unwrap();
    assert_eq!(csv.column("x").unwrap()[0], 0.0);
    assert!((csv.column("v").unwrap()[0] - (3f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);

    let (code, _, _) = run(dir.path(), &["control", "value", "--f", "quadratic", "--kappa", "1", "--lambda", "1", "--solver", "ode"]);
    assert_eq!(code, 0);
    let csv = ParsedCsv::read(&dir.path().join("control_value.csv")).unwrap();
    assert!(csv.column("abs_diff").unwrap().iter().all(|&d| d < 1e-4));
}

#[test]
fn json_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"beta": 2, "t": [1], "x0": 0.5, "zmax": 5, "nz": 4}"#).unwrap();
    let (code, _, err) = run(dir.path(), &["density", "--json-config", cfg.to_str().unwrap(), "--beta", "-1"]);
    assert_eq!(code, 0, "{err}");
    let csv = ParsedCsv::read(&dir.path().join("density.csv")).unwrap();
    assert_eq!(csv.parameter("beta"), Some("-1"));
    assert_eq!(csv.rows.len(), 4);
}

#[test]
fn verification_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "bounds", "--kappa", "1", "--y", "0", "--n", "2e4", "--dt", "0.01", "--seed", "7"];
    let (code, out, _) = run(a.path(), &args);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.matches("PASS").count(), 3);
    let mut other = Command::new(env!("CARGO_BIN_EXE_halfline"));
    other.args(args).arg("--out").arg(b.path()).env("HALFLINE_THREADS", "1");
    assert!(other.status().unwrap().success());
    let file = "verify_bounds.csv";
    assert_eq!(body(&a.path().join(file)), body(&b.path().join(file)));
    let parsed = ParsedCsv::read(&a.path().join(file)).unwrap();
    assert_eq!(parsed.parameter("seed"), Some("7"));
    assert!(parsed.comments[0].starts_with("halfline "));
}

#[test]
fn representation_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(dir.path(), &["verify", "representation", "--b", "-1", "--c", "1", "--n", "2e4", "--dt", "0.02"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("PASS representation"));
}
