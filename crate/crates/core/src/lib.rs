//! Simulation and analysis toolkit for projected quantum kernels built on
//! alternating layered ansatzes (ALAs).
//!
//! The crate pairs a dense statevector simulator with two kinds of
//! numbers: Monte-Carlo estimates of kernel statistics over random
//! circuit ensembles, and exact closed-form predictions for the same
//! statistics under the 2-design assumption.
//!
//! Module map:
//!
//! - [`qstate`]: statevectors, density matrices, partial traces.
//! - [`haar`]: Haar-random unitaries and t-design moment checks.
//! - [`ansatz`]: brickwork geometry, circuit instances, light cones.
//! - [`kernels`]: fidelity and projected kernels, Gram matrices.
//! - [`theory`]: closed-form expectation and variance evaluators.
//! - [`stats`]: ensemble estimators, covariance, parameter sweeps.
//! - [`svm`]: bias-free kernel SVM trained by coordinate descent.
//!
//! Qubit 0 is the most significant bit of an amplitude index everywhere.
//!
//! Data-parallel loops go through [`par`]; with the default `parallel`
//! feature they run on rayon, otherwise sequentially. Results are
//! bit-identical either way for a fixed seed.

pub mod ansatz;
pub mod error;
pub mod haar;
pub mod kernels;
pub mod par;
pub mod qstate;
pub mod rng;
pub mod stats;
pub mod svm;
pub mod theory;

pub use error::{Error, Result};

/// Complex double used for all amplitudes and operator entries.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
