//! Discrete-time quantum mechanics built from a single-step path-integral
//! kernel `U(x, y) = A exp(i S(x, y) / ħ)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: periodic position lattices, wavefunctions, and observables.
//! * [`action`]: one-step actions `S(x, y)` with analytic derivatives.
//! * [`criterion`]: the `det(∂²S/∂x∂y) = const` unitarity test on actions.
//! * [`propagator`]: dense kernels, amplitude calibration, and unitarity.
//! * [`classical`]: the discrete Euler-Lagrange recursion and its solver.
//! * [`correspondence`]: Ehrenfest tracking, ħ sweeps, and gauge runs.

pub mod action;
pub mod classical;
pub mod correspondence;
pub mod criterion;
mod error;
pub mod grid;
pub mod propagator;
pub mod roots;

pub use error::{Error, Result};

pub use num_complex::Complex64;
