//! Inconsistency of confounder adjustment versus instrumental variables.
//!
//! The crate compares three estimators of the average causal effect of an
//! exposure `X` on an outcome `Y` when a candidate instrument `Z` may violate
//! the exclusion restriction, independence, or effect homogeneity:
//! OLS of `Y` on `X`, OLS additionally adjusting for `Z`, and 2SLS with `Z`
//! as instrument. It provides
//!
//! * [`regression`]: intercept-free OLS, residualization, partial R² and 2SLS,
//! * [`scenarios`]: structural scenarios, their exact probability limits and
//!   a seeded data generator,
//! * [`montecarlo`]: a replication harness checking the limits by simulation,
//! * [`sensitivity`]: the partial-R² sensitivity analysis that benchmarks
//!   unobserved quantities on measured covariates and reports the
//!   inconsistency ratio of 2SLS to OLS.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod montecarlo;
pub mod regression;
pub mod scenarios;
pub mod sensitivity;

pub use data::{Column, Dataset, Roles};
pub use error::{Error, Result};
pub use scenarios::{closed_form, generate, ClosedFormResult, ScenarioKind, ScenarioSpec};
