//! Numerical inversion of Laplace transforms.

use core::f64::consts::{LN_2, PI};

use libm::{cos, exp, sin};
use num_complex::Complex64;

use crate::error::ensure;
use crate::{Error, Result};

/// Inversion algorithm and its truncation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InversionMethod {
    /// Fixed Talbot contour with `terms` nodes. Samples the transform at complex `λ`.
    Talbot { terms: usize },
    /// Gaver–Stehfest with an even number of `terms`. Samples only real `λ > 0`, limited
    /// to roughly six correct digits in double precision.
    Stehfest { terms: usize },
}

impl Default for InversionMethod {
    fn default() -> Self {
        InversionMethod::Talbot { terms: 24 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub method: InversionMethod,
    /// Absolute accuracy target checked against the error estimate.
    pub tolerance: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig { method: InversionMethod::default(), tolerance: 1e-6 }
    }
}

/// Inverse transform value with the difference between two truncation levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub value: f64,
    pub error_estimate: f64,
}

fn talbot<F: Fn(Complex64) -> Complex64>(f: &F, t: f64, m: usize) -> f64 {
    let mf = m as f64;
    let r = 2.0 * mf / (5.0 * t);
    let mut sum = 0.5 * exp(r * t) * f(Complex64::new(r, 0.0)).re;
    for k in 1..m {
        let theta = k as f64 * PI / mf;
        let cot = cos(theta) / sin(theta);
        let delta = Complex64::new(r * theta * cot, r * theta);
        let gamma = Complex64::new(1.0, theta * (1.0 + cot * cot) - cot);
        sum += ((delta * t).exp() * gamma * f(delta)).re;
    }
    r / mf * sum
}

fn stehfest_weights(n: usize) -> alloc::vec::Vec<f64> {
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |acc, i| acc * i as f64);
    (1..=n)
        .map(|k| {
            let mut v = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                let jf = j as f64;
                v += libm::pow(jf, half as f64) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (k + half) % 2 == 1 { -v } else { v }
        })
        .collect()
}

fn stehfest<F: Fn(Complex64) -> Complex64>(f: &F, t: f64, n: usize) -> f64 {
    let a = LN_2 / t;
    stehfest_weights(n)
        .iter()
        .enumerate()
        .map(|(i, w)| w * f(Complex64::new((i + 1) as f64 * a, 0.0)).re)
        .sum::<f64>()
        * a
}

/// Inverts the transform `f` at time `t`.
///
/// Fails with [`Error::Accuracy`] when the truncation estimate exceeds `config.tolerance`.
pub fn invert_laplace<F>(f: F, t: f64, config: &InversionConfig) -> Result<Inversion>
where
    F: Fn(Complex64) -> Complex64,
{
    ensure!(t > 0.0 && t.is_finite(), Domain, "inversion time must be positive, got {t}");
    let (value, coarse) = match config.method {
        InversionMethod::Talbot { terms } => {
            ensure!(terms >= 8, Config, "Talbot needs at least 8 terms, got {terms}");
            (talbot(&f, t, terms), talbot(&f, t, terms - 4))
        }
        InversionMethod::Stehfest { terms } => {
            ensure!(
                terms >= 4 && terms % 2 == 0 && terms <= 30,
                Config,
                "Stehfest needs an even term count in 4..=30, got {terms}"
            );
            (stehfest(&f, t, terms), stehfest(&f, t, terms - 2))
        }
    };
    let error_estimate = (value - coarse).abs();
    if !value.is_finite() || !(error_estimate <= config.tolerance) {
        return Err(Error::Accuracy { value, estimate: error_estimate, tolerance: config.tolerance });
    }
    Ok(Inversion { value, error_estimate })
}
