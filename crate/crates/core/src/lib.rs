//! Entire solutions of `Δ²u + u^-q = 0` in ℝ³ from the integral equation
//! `u(x) = (1/8π)∫ k(x, y) u(y)^-q dy + P(x)`, with independent checks.

pub mod analysis;
pub mod diagnostics;
pub mod error;
pub mod kernels;
pub mod model;
pub mod operator;
mod quadrature;
pub mod sampling;
pub mod shooting;
pub mod verify;

pub use error::{ConfigError, Error, Result};
pub use quadrature::{gauss_legendre, simpson_weights};
