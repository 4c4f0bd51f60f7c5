//! Bayesian hierarchical spike-and-slab regression for censored log-normal
//! survival outcomes on grouped data with partially overlapping covariates.
//!
//! The crate is organised around the analysis pipeline:
//!
//! * [`data`] loads grouped, censored, availability-masked datasets and
//!   standardizes their covariates.
//! * [`components`] turns pre-factorized low-rank modules into SVD component
//!   score predictors.
//! * [`sampler`] is the Gibbs sampler with its five model variants.
//! * [`evaluation`] scores posteriors out of sample and against known truth.
//! * [`simulation`] regenerates the simulation and sampler validation studies.

pub mod components;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod report;
pub mod sampler;
pub mod seed;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
