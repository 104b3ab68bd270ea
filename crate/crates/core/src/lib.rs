//! Stochastic generalized linear switched systems: admissible switching,
//! simulation, output decomposition, innovation form and realization checks.

pub mod cli;
pub mod decompose;
pub mod error;
pub mod innovation;
pub mod io;
pub mod linalg;
pub mod model;
pub mod random;
pub mod realize;
pub mod regress;
pub mod report;
pub mod simulate;
pub mod stats;
pub mod switching;
pub mod words;

pub use error::{GlssError, Result};
