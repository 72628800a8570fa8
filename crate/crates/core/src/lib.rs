//! Numerical core for stochastic Volterra integral equations with singular
//! kernels,
//!
//! ```text
//! X_t = h(t) + ∫_0^t k(t, s) σ(X_s) dB_s,   k(t, s) = (t - s)^{-α},  0 < α < 1/2,
//! ```
//!
//! together with the deterministic objects that accompany them: the
//! fractional heat kernel `p^θ_t(x)` of the divergence-form operator whose
//! origin row reproduces the singular kernel (`α = 1/(2+θ)`), the
//! log-Laplace equation for the square-root (catalytic) case and its
//! Laplace-functional duality, the Yamada–Watanabe mollifier family, and
//! Hölder-exponent estimators.
//!
//! The crate is `no_std` and only needs `alloc`. Everything is a pure
//! function of its arguments; Monte Carlo drivers are parameterized by a
//! [`stats::PathRunner`] so a std companion can fan paths out to a thread
//! pool without changing results.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod det_volterra;
pub mod duality;
pub mod error;
pub mod kernels;
pub mod mollifiers;
pub mod noise;
pub mod quadrature;
pub mod regularity;
pub mod sie;
pub mod stats;

pub use error::{Error, Result};
pub use kernels::{KernelSpec, TestFunction};
pub use noise::{BrownianPath, TimeGrid};
pub use sie::{DiffusionCoefficient, PicardResult, SiePath, SieProblem};
