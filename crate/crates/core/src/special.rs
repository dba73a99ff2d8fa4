//! Gaussian special functions.

use core::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use libm::{erfc, exp, fma, sqrt};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Scaled complementary error function `exp(x²) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        // 2 exp(x²) overflows first; erfcx(-x) is then negligible.
        let e = exp_sq(x);
        if !e.is_finite() {
            return f64::INFINITY;
        }
        return 2.0 * e - erfcx(-x);
    }
    if x < 25.0 {
        exp_sq(x) * erfc(x)
    } else {
        erfcx_continued_fraction(x)
    }
}

/// `exp(x²)` with the rounding error of `x²` folded back in.
fn exp_sq(x: f64) -> f64 {
    let p = x * x;
    let e = fma(x, x, -p);
    exp(p) * (1.0 + e)
}

fn erfcx_continued_fraction(x: f64) -> f64 {
    // exp(x²) erfc(x) = (1/√π) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut tail = x;
    for k in (1..40).rev() {
        tail = x + (k as f64 * 0.5) / tail;
    }
    FRAC_1_SQRT_PI / tail
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(u: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp(-0.5 * u * u)
}

/// Upper tail `P(N > u)` of the standard normal law.
#[inline]
pub fn norm_sf(u: f64) -> f64 {
    0.5 * erfc(u * FRAC_1_SQRT_2)
}

/// Mills ratio `P(N > u) / φ(u)`, finite for every real `u`.
pub fn mills_ratio(u: f64) -> f64 {
    sqrt(PI / 2.0) * erfcx(u / SQRT_2)
}

/// `exp(a) · P(N > u)` without overflow in `exp(a)` or underflow in the tail.
pub fn exp_times_sf(a: f64, u: f64) -> f64 {
    if u > 0.0 {
        FRAC_1_SQRT_2PI * exp(a - 0.5 * u * u) * mills_ratio(u)
    } else {
        exp(a) * norm_sf(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_matches_definition_where_stable() {
        for &x in &[-2.0, -0.5, 0.0, 0.3, 1.0, 3.0, 6.0] {
            let direct = exp(x * x) * erfc(x);
            assert!((erfcx(x) - direct).abs() <= 1e-14 * direct.abs(), "x = {x}");
        }
    }

    #[test]
    fn erfcx_branches_join() {
        let below = exp_sq(24.999_999) * erfc(24.999_999);
        let above = erfcx_continued_fraction(24.999_999);
        assert!((below - above).abs() < 1e-14 * above);
        // large-x asymptote 1/(x√π)
        let x = 1e6;
        assert!((erfcx(x) * x / FRAC_1_SQRT_PI - 1.0).abs() < 1e-11);
    }

    #[test]
    fn tail_helpers() {
        assert!((norm_sf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_sf(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        let u = 8.0;
        let direct = norm_sf(u) / norm_pdf(u);
        assert!((mills_ratio(u) - direct).abs() < 1e-12 * direct);
        assert!((exp_times_sf(3.0, 1.5) - exp(3.0) * norm_sf(1.5)).abs() < 1e-13);
        assert!(exp_times_sf(1500.0, 60.0).is_finite());
    }
}
