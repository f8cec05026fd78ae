//! Simulation, diagnostics and pulse optimization for Raman spin-dependent
//! kicks on a single trapped ion.
//!
//! Units: ħ = 1, frequencies are angular (rad/s), times in seconds.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod beams;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod envelope;
pub mod error;
pub mod trap;
pub mod units;

pub use error::{Error, Result};
