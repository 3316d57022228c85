//! Duality quantum computing with subwave projections.
//!
//! Builds linear combinations of (non-)unitary operators, simulates the
//! resulting circuits on a dense statevector, models expected runtimes of the
//! restart process, and runs Chebyshev-filtered ground-state preparation.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod files;
pub mod gtc;
pub mod json;
pub mod lcu;
pub mod linalg;
pub mod sample;
pub mod simulator;

pub use error::{Error, Result};
