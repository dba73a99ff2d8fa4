//! Transition densities of reflecting diffusions on the half-line `[0, ∞)`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! * [`closed_form`]: heat kernels, bang-bang and constant-drift reflected densities,
//!   the optimal density bounds for drifts bounded by `κ`.
//! * [`resolvent`] and [`laplace`]: the Laplace-domain solution for the reflecting
//!   bang-bang process and its numerical inversion.
//! * [`hjb`]: finite-difference solver for `w_t = ½ w_xx + β |w_x|` with its nodal curve.
//! * [`mc`]: Monte Carlo for reflected SDEs, density estimation and empirical checks
//!   of the comparison theorem and the perturbation representation.
//! * [`control`]: the discounted control problem with running cost `f` and drift bound `κ`.
//!
//! File formats, the CLI and multi-threaded execution live in the `halfline` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod closed_form;
pub mod control;
pub mod drift;
mod error;
pub mod hjb;
pub mod laplace;
pub mod mc;
pub mod quadrature;
pub mod resolvent;
pub mod special;
pub mod verify;

pub use error::{Error, Result};

/// Sign with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
