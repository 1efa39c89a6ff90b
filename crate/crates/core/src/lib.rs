//! Selective classification toolkit.
//!
//! A selective classifier pairs a predictor `h` with a selection function `g`:
//! it predicts `h(x)` when `g(x) = 1` and abstains otherwise. This crate
//! provides the pieces needed to build and evaluate such classifiers on
//! tabular data:
//!
//! - [`nn`]: a small dense network engine with hand-derived gradients,
//!   multiple output heads and SGD/Adam optimizers.
//! - [`data`]: CSV ingestion, deterministic splits, standardization and
//!   synthetic / out-of-distribution generators.
//! - [`methods`]: abstention losses, confidence functions, ensembles,
//!   cross-fitting and AUC-band selectors for the eighteen baseline methods.
//! - [`calibrate`]: coverage calibration and risk-bounded threshold search.
//! - [`metrics`]: coverage, selective error and the derived coefficients.
//! - [`stats`]: bootstrap resampling and Friedman/Nemenyi ranking.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod data;
pub mod error;
pub mod methods;
pub mod metrics;
pub mod nn;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
