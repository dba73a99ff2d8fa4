//! Adaptive Gauss–Kronrod quadrature.

use alloc::vec::Vec;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = r * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * r, ((k - g) * r).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol` or relative tolerance `rel_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error_estimate: 0.0, evaluations: 0 });
    }
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = kronrod(&mut f, a, b);
    let mut pieces: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Quadrature { value: total, error_estimate: err, evaluations });
        }
        if pieces.len() >= MAX_INTERVALS || !total.is_finite() {
            return Err(Error::NoConvergence { iterations: pieces.len(), residual: err });
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::NoConvergence { iterations: pieces.len(), residual: err });
        }
        let (v1, e1) = kronrod(&mut f, lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, hi);
        evaluations += 30;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Integrates `f` over `[a, ∞)` through the substitution `x = a + s/(1-s)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let d = 1.0 - s;
            let v = f(a + s / d) / (d * d);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::{exp, sin};

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| x * x * x - 2.0 * x, -1.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((q.value - (15.0 / 4.0 - 3.0)).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let q = integrate(sin, 0.0, 20.0, 1e-12, 0.0).unwrap();
        assert!((q.value - (1.0 - libm::cos(20.0))).abs() < 1e-11);
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 0.0).unwrap();
        let exact = 2.0 * libm::atan(100.0) * 100.0;
        assert!((q.value - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn half_line() {
        let q = integrate_to_infinity(|x| exp(-x * x), 0.0, 1e-12, 0.0).unwrap();
        assert!((q.value - 0.886_226_925_452_758).abs() < 1e-11);
        let q = integrate_to_infinity(|x| exp(-2.0 * x), 1.0, 1e-13, 0.0).unwrap();
        assert!((q.value - 0.5 * exp(-2.0)).abs() < 1e-12);
    }
}
