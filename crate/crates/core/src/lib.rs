//! Simulation and design toolkit for three-element electro-optic quantum
//! frequency processors: phase modulator, line-by-line pulse shaper, phase
//! modulator.

pub mod cli;
pub mod config;
pub mod design;
pub mod error;
pub mod metrics;
pub mod probe;
pub mod specfun;
pub mod transfer;

pub use error::{Error, Result};
