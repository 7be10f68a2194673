//! Conditional covariance and correlation matrices of elliptical random
//! vectors, conditioned on quantile regions of a linear benchmark `Y = aX`.
//!
//! For `X ~ E_n(mu, Sigma, psi)` with `Sigma` the covariance and `B` the event
//! `{F_Y(Y) in A}`,
//!
//! ```text
//! Var_B[X]   = k(B) Sigma + (Var_B[Y] - k(B) Var[Y]) beta beta^T
//! Cov_B[X,Y] = Var_B[Y] beta,        beta = Sigma a^T / (a Sigma a^T)
//! ```
//!
//! where `k(B)` is the K-invariant of the generator on `A`. The crate
//! evaluates these by quadrature, checks them by simulation, solves for the
//! quantile partitions on which the conditional matrices coincide, and turns
//! the Gaussian case into an empirical normality diagnostic.
//!
//! ```
//! use condcov::{conditional_covariance, EllipticalModel, GeneratorFamily, ProbabilitySubset};
//!
//! let model = EllipticalModel::from_rows(&[0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]], GeneratorFamily::Gaussian)?;
//! let lower_half = ProbabilitySubset::interval(0.0, 0.5)?;
//! let report = conditional_covariance(&model, &[1.0, 0.0], &lower_half)?;
//! assert!((report.cond_cov[(0, 0)] - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-9);
//! # Ok::<(), condcov::Error>(())
//! ```

pub mod cli;
pub mod conditional;
pub mod diagnostics;
pub mod elliptical;
pub mod error;
pub mod invariants;
mod mc;
pub mod numerics;
pub mod partition;
mod serde_mat;
pub mod subset;

pub use conditional::{
    conditional_covariance, conditional_covariance_mc, regression_beta, scaled_relation_check, ConditionalReport,
};
pub use diagnostics::{
    bootstrap_reference, diagnose, empirical_conditional_covariances, equality_statistic, Compare, DataMatrix,
    DiagnosticReport,
};
pub use elliptical::{
    benchmark, sample, validate_model, BenchmarkSpec, CustomGenerator, EllipticalModel, FamilySpec, GeneratorFamily,
    SampleMatrix,
};
pub use error::{Error, Result};
pub use invariants::{k_invariant, k_invariant_mc, k_via_radial, tail_density, truncated_moments, InvariantValue};
pub use partition::{equal_kprime_partition, equal_variance_partition, verify_partition, PartitionResult};
pub use subset::ProbabilitySubset;
