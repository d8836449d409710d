//! A laboratory for sparse linear regression: estimators, recoverability
//! diagnostics, variable importance under collinearity, and cross-validation.
//!
//! # Conventions
//!
//! - Designs are column-normalized to `|X_j|² = n`. [`problem::normalize_columns`]
//!   enforces this; [`problem::simulate`] always returns normalized designs.
//! - Every Gram matrix handed to the diagnostics in [`conditions`] carries an
//!   exact unit diagonal (`D^{-1/2} (XᵀX/n) D^{-1/2}`), so the numeric
//!   thresholds of the recoverability conditions are stated on one scale.
//! - Objectives are un-normalized: the lasso minimizes
//!   `|Y − Xβ|² + λ Σ|β_j|` and the Dantzig selector constrains
//!   `‖Xᵀ(Y − Xβ)‖_∞ ≤ λ`, with the consequence that on orthogonal designs
//!   `dantzig(λ)` equals `lasso(2λ)`. The default level is
//!   `λ = σ √(2 n log p)`.

pub mod analysis;
mod combinatorics;
pub mod conditions;
pub mod cv;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod problem;

pub use error::{Error, Result};
pub use problem::{CoefficientVector, RegressionProblem};
