//! Globalized distributionally robust optimization with multiple core sets.
//!
//! Piecewise-linear worst-case expectation problems are compiled to conic
//! programs (moment-based or Wasserstein ambiguity) and solved through a
//! pluggable interior-point backend. The crate also ships the multi-product
//! newsvendor benchmark, data generation, brute-force oracles and an
//! experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

// Links the system BLAS/LAPACK used by the solver's PSD cones.
use openblas_src as _;

mod common;
pub mod conic;
pub mod conjugate;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod moment;
pub mod newsvendor;
pub mod oracle;
pub mod verify;
pub mod wasserstein;

pub use error::{Error, Result};
