//! Communication-compressed distributed nonconvex optimization.
//!
//! The crate simulates `n` clients and one server in a single process:
//! correlated and independent quantizers with bit-exact payloads, MARINA with
//! per-client or combinatorial compressors, DCGD and GD baselines, a
//! Monte-Carlo laboratory for mean-estimation error, and closed-form
//! communication-complexity analytics.
//!
//! Vector math is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`, which is what the experiments use.

pub mod analysis;
pub mod combinatorial;
pub mod compressors;
mod error;
pub mod mselab;
pub mod numkit;
pub mod optimizers;
pub mod problems;
mod scalar;

pub use error::{Error, Result};
pub use scalar::{all_finite, dist_sq, dot, mean_vector, norm, norm_sq, Scalar};

pub type SymmetricMatrix = numkit::SymmetricMatrix<f64>;
pub type Tridiagonal = numkit::Tridiagonal<f64>;
pub type QuadraticProblem = problems::QuadraticProblem<f64>;
pub type LogisticProblem = problems::LogisticProblem<f64>;
pub type CompressedMessage = compressors::CompressedMessage<f64>;
pub type Trajectory = optimizers::Trajectory<f64>;
