//! Extraction of a smooth positive function from the amplitudes of a
//! simulated quantum state.
//!
//! The pipeline encodes ψ with a Grover-Rudolph circuit, optionally shifts it
//! towards the uniform state, samples the cumulative square integral Ψ at
//! Chebyshev nodes with comparator oracles and amplitude estimation, then
//! fits Ψ, differentiates the fit and takes a square root to recover ψ.

pub mod chebyshev;
pub mod comparator;
pub mod encoding;
pub mod error;
pub mod pipeline;
pub mod precondition;
pub mod qae;
pub mod quad;
pub mod rng;
pub mod sim;

pub use error::{Error, Result, Stage};
