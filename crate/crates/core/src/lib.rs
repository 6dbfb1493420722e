//! Noisy sparse phase retrieval by thresholded Wirtinger flow.
//!
//! Recovers a k-sparse `x` in R^p, up to global sign, from
//! `y_j = (a_j' x)^2 + e_j` with Gaussian sensing vectors `a_j`:
//!
//! 1. [`init::initialize`] screens coordinates by their marginal energy and
//!    takes a spectral estimate on the survivors.
//! 2. [`twf::run`] iterates a gradient step on the quartic least-squares risk
//!    followed by coordinatewise thresholding at a data-driven level.
//!
//! With the `harness` feature (default), [`experiments`] runs seeded
//! Monte-Carlo sweeps over the tuning and problem parameters.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod init;
pub mod linalg;
pub mod model;
pub mod plot;
pub mod rng;
pub mod thresholding;
pub mod twf;

#[cfg(feature = "harness")]
pub mod experiments;
#[cfg(feature = "harness")]
pub mod persist;
#[cfg(feature = "harness")]
pub mod selftest;

pub use error::{Result, TwfError};
pub use init::{initialize, InitConfig, InitResult};
pub use model::{
    generate_instance, generate_signal, relative_error, NoiseFamily, NoiseSpec, ProblemInstance,
    SparseSignal,
};
pub use rng::SeedRecord;
pub use thresholding::ThresholdOperator;
pub use twf::{TwfConfig, TwfTrace};

/// Recorded in every artifact this crate writes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
