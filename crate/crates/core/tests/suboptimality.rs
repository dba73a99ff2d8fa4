use halfline_core::resolvent::{bangbang_suboptimality_check, SuboptimalityConfig};

fn grid() -> Vec<f64> {
    (0..=12).map(|i| 0.25 * i as f64).collect()
}

#[test]
fn interior_center_gap() {
    let report = bangbang_suboptimality_check(1.0, 1.0, 1.0, &grid(), &SuboptimalityConfig::default()).unwrap();
    assert!(report.strictly_below, "{report:?}");
    // the extremal density dominates up to numerical error
    assert!(report.rows.iter().all(|r| r.gap() > -r.tolerance));
}

#[test]
fn boundary_center_agrees() {
    let report = bangbang_suboptimality_check(1.0, 0.0, 1.0, &grid(), &SuboptimalityConfig::default()).unwrap();
    assert!(report.agrees, "{report:?}");
    assert!(!report.strictly_below);
}
