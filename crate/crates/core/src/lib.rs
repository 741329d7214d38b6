//! Simulation of entanglement concentration and dilution for bipartite pure
//! states, together with the quantum data compression constructions they are
//! compared against.
//!
//! - [`qcore`]: states, Schmidt decomposition, reduced density matrices, entropies.
//! - [`locc`]: two-party harness restricted to local operations and classical messages.
//! - [`schmidt_projection`]: concentration by projecting `n` pairs onto Schmidt classes,
//!   followed by standardization into singlets.
//! - [`procrustean`]: single-pair filtering.
//! - [`qdc`]: likely-subspace compression and why it is not concentration (and vice versa).
//! - [`dilution`]: preparing partly entangled states from singlets by teleportation.

pub mod binomial;
pub mod dilution;
pub mod error;
pub mod locc;
pub mod procrustean;
pub mod qcore;
pub mod qdc;
pub mod schmidt_projection;

pub use error::{Error, Result};
