//! Riemannian tangent-space classification of covariance matrices and
//! tangent space spatial filters (TSSF).
//!
//! The crate is organised bottom-up:
//!
//! * [`manifold`]: SPD geometry under the affine-invariant metric.
//! * [`linmodel`]: linear classifiers on tangent vectors.
//! * [`tssf`]: filter extraction from a tangent-space linear model, feature
//!   generation and one-/two-step classification.
//! * [`csp`]: the Common Spatial Patterns baseline and its relation to TSSF.
//! * [`patterns`]: spatial patterns (encoding directions) for filters.
//! * [`dataio`]: trial files, covariance estimation, band-pass filtering and
//!   a synthetic EEG generator.
//! * [`evalstats`]: cross-validation, ROC-AUC, paired statistics and
//!   prediction benchmarks.
//! * [`pipeline`]: the named end-to-end pipelines used by the CLI.

pub mod csp;
pub mod dataio;
pub mod error;
pub mod folds;
pub mod evalstats;
pub mod linmodel;
pub mod manifold;
pub mod patterns;
pub mod pipeline;
pub mod serial;
pub mod tssf;

#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
pub use manifold::{SpdMatrix, SymMatrix, TangentSpace, TangentVector};
