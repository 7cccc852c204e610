//! Functional composite quantile regression with optimal subsampling.
//!
//! The pipeline: expand curve covariates in a clamped B-spline basis
//! ([`basis`]), reduce the functional regression to a finite design
//! ([`design`]), fit the penalized composite quantile objective
//! ([`solver`]), and replace the full-data fit with a two-step optimal
//! subsample when the dataset is too large ([`subsample`]). [`simgen`]
//! provides the synthetic data generators and error metrics used by the
//! benchmark harness.

pub mod basis;
pub mod design;
pub mod error;
pub mod simgen;
pub mod solver;
pub mod subsample;

mod linalg;
mod quadrature;
mod seed;

pub use error::FcqrError;
pub use seed::derive_seed;
