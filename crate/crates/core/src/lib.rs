//! Precision matrix estimation under a low-rank plus diagonal decomposition.
//!
//! The crate is organized as:
//!
//! - [`linalg`]: dense symmetric matrix primitives.
//! - [`estimator`]: fixed-rank blockwise coordinate descent and the
//!   rank-penalized sweep.
//! - [`simulation`]: population covariance generators, Gaussian sampling,
//!   Kullback-Leibler loss and the replication engine.
//! - [`portfolio`]: Markowitz weights, rolling backtests and Sharpe ratios.
//! - [`cli`]: the `lodiag` command-line front end.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod io;
pub mod linalg;
pub mod portfolio;
pub mod simulation;

pub use error::{Error, Result};
pub use estimator::{
    diag_gradient, fit_fixed_rank, fit_rank_path, fit_rank_penalized, objective, precision_parts_from_covariance,
    rank_penalty, select_by_penalty, update_d, update_l, FitConfig, FitResult,
    PrecisionDecomposition,
};
pub use linalg::{chol_pd, inv_pd, logdet_pd, sample_covariance, sym_eig, DiagMatrix, EigenPairs, SymMatrix};
