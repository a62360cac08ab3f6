//! CUR low-rank matrix decomposition driven by interpolatory index selection.
//!
//! The crate provides four deterministic strategies for picking the rows and
//! columns of a CUR factorization `A ≈ C·M·R`:
//!
//! * DEIM, the greedy sequential discrete empirical interpolation method;
//! * L-DEIM, which runs DEIM on `k` singular vectors and then oversamples
//!   up to `k̂ ≥ k` indices using the row norms of the deflated residuals;
//! * Q-DEIM, column-pivoted QR on the transposed singular-vector block;
//! * deterministic leverage-score sampling.
//!
//! [`cur`] assembles the factors with the Frobenius-optimal middle matrix and
//! evaluates the interpolation error bound, and [`bench`] drives error and
//! timing sweeps over the target rank.

pub mod bench;
pub mod cur;
pub mod error;
pub mod linalg;
pub mod matrix_io;
pub mod select;

pub use error::{Error, Result};

/// Dense real matrix used for the input and every factor block.
pub type DenseMatrix = nalgebra::DMatrix<f64>;
