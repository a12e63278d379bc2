//! Simulation and numerics for the critical birth-death model of viral types.
//!
//! * [`chain`]: exact simulation of the type-count chain and its hitting times.
//! * [`types`]: fitness-ranked type bookkeeping and persistence of the maximal type.
//! * [`renewal`]: the hitting-time CDF as a renewal equation, with an ODE oracle.
//! * [`laplace`]: Laplace transforms and large-time diagnostics of that CDF.
//! * [`experiments`]: configuration, reproducible runs, and report tables.

pub mod chain;
pub mod error;
pub mod experiments;
pub mod laplace;
pub mod quad;
pub mod renewal;
pub mod rng;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
