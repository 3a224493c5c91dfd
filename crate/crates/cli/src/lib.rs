//! Configuration-driven experiment runner for multi-start TSP heuristics and
//! extreme-value models.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{validate_config, ConfigError, ExperimentConfig, FieldError};
pub use run::{run_experiment, Bundle, RunError};
