//! Multi-start TSP heuristics and extreme-value analysis of best-found
//! objective values.
//!
//! * [`tsp`]: instances, TSPLIB input, tour costs, exact Held-Karp baseline.
//! * [`heuristics`]: randomized constructions, 2-opt/3-opt/LK, double bridge.
//! * [`multistart`]: random multi-start and iterated local search traces.
//! * [`evt`]: analytic tail models, GEV quantities and Monte-Carlo checks.
//! * [`analysis`]: improvement-rate and relative-gap series, power-law fits,
//!   half-life, good-solution ratio and acceleration transforms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod evt;
pub mod heuristics;
pub mod multistart;
pub mod rng;
pub mod stats;
pub mod tsp;

pub use error::{Error, Result};
