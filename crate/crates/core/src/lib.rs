//! Gabor analysis on lattices and simple cut-and-project model sets.

pub mod appoisson;
pub mod cutproject;
pub mod duality;
pub mod error;
pub mod gabor_op;
pub mod internal_windows;
pub mod modelset;
pub mod report;
pub mod suite;
pub mod tf_core;

pub use error::{Error, Result};
