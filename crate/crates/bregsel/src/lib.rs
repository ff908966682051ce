//! Kernel density estimation with bias reduction, beta-generated Bregman
//! divergences, and divergence-based selection between parametric models.
//!
//! The crate is organized as a pipeline:
//!
//! * [`density`] — ordinary and bias-reduced Gaussian KDE with
//!   cross-validated bandwidth selection,
//! * [`divergence`] — the convex-generator divergence family, exact
//!   divergence between densities, and the truncated plug-in estimator
//!   against a KDE,
//! * [`parametric`] — Gamma / log-normal / mixture models, their samplers
//!   and estimators,
//! * [`selection`] — the pairwise selection statistic with a bootstrap
//!   variance surrogate, a goodness-of-fit test, and a power approximation,
//! * [`montecarlo`] — a deterministic replication harness aggregating
//!   selection results into summary tables,
//! * [`special`] — the underlying special functions,
//! * [`quad`] — adaptive Simpson quadrature.

pub mod density;
pub mod divergence;
pub mod error;
pub mod montecarlo;
pub mod parametric;
pub mod quad;
pub mod selection;
pub mod special;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
