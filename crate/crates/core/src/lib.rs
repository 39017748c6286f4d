//! Attainable precision bounds for multiparameter quantum state estimation.
//!
//! The crate computes the SLD, RLD, Holevo and nuisance-parameter bounds of
//! finite-dimensional parametric state families, the Gaussian shift-model
//! machinery that underlies their attainability (Williamson forms, optimal
//! covariant measurement covariances, tail bounds), and seeded Monte-Carlo
//! checks of one-parameter attainability.
//!
//! Modules, bottom-up:
//!
//! - [`matcore`]: Hermitian eigendecomposition, matrix absolute value, PSD
//!   square roots, the SLD (Lyapunov-type) solver and the D map.
//! - [`models`]: parametric families, the built-in examples and the minimal
//!   D-invariant extension.
//! - [`fisher`]: SLD/RLD Fisher information, D-matrix, ε-difference RLD,
//!   fidelity and the Gaussian correspondence at a point.
//! - [`bounds`]: the bound ladder and the optimal limiting covariance.
//! - [`gaussian`]: classical-quantum Gaussian models.
//! - [`estimate`]: POVM sampling and attainability simulations.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimate;
pub mod fisher;
pub mod gaussian;
pub mod matcore;
pub mod models;
pub mod optim;
pub mod sampling;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
