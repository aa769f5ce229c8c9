//! Experiment harness for the finite volume stochastic heat equation solver.
//!
//! Couples Brownian paths across time resolutions, estimates mean squared
//! L² errors against fine-resolution reference runs, fits empirical
//! convergence orders, and reads/writes the flat config and CSV formats the
//! `fvshe` binary exposes.

pub mod config;
pub mod experiment;
pub mod formats;
pub mod manifest;
pub mod plotdata;
pub mod selftest;

pub use config::{ExperimentConfig, TimingMode};
pub use experiment::{
    deterministic_convergence_study, fit_orders, realization_errors, run_error_cell, run_table,
    ErrorRow, ErrorTable, ExperimentError, Varying,
};
