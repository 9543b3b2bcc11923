//! Online learning games against stochastic, constrained, smoothed and
//! hybrid adversaries, with estimators for the sequential complexities that
//! control their value.

pub mod adversaries;
pub mod complexity;
pub mod config;
pub mod coord;
pub mod dist;
pub mod domain;
pub mod engine;
pub mod error;
pub mod learners;
pub mod rng;
pub mod stats;
pub mod suites;
pub mod trees;

pub use error::{Error, Result};
