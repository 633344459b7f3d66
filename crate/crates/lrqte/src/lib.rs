//! Low-rank variational time evolution for Lindblad dynamics.
//!
//! The mixed state is represented as a weighted sum of circuit-prepared pure
//! states; parameters evolve by a regularized linear solve at each explicit
//! Euler step. A dense RK4 integrator provides the reference trajectory, and
//! a shot-sampling backend emulates measurement statistics.

pub mod ansatz;
pub mod circuit;
pub mod config;
pub mod eom;
pub mod error;
pub mod estimator;
pub mod evolve;
pub mod experiment;
pub mod lattice;
pub mod lindblad;
pub mod metrics;
pub mod oracle;
pub mod pauli;
pub mod regularize;
pub mod state;

pub use error::{Error, Result};
