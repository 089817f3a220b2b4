//! Statevector VQE with a homotopy-continuation driver.
//!
//! The crate provides a dense simulator for layered RY/X/CNOT circuits,
//! Pauli-sum operators with exact expectations and dense diagonalization, a
//! shot-noise energy estimator with variance-driven resampling, three
//! noise-robust optimizers with parameter-shift derivatives and adaptive
//! termination, and the warm-started continuation driver that ties them
//! together.

pub mod driver;
pub mod error;
pub mod estimator;
pub mod optimize;
pub mod oracle;
pub mod pauli;
pub mod sim;

pub use error::{Error, Result};
