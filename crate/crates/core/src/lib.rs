//! Statevector simulation of Grover-style global minimum search.
//!
//! The crate is organised bottom-up:
//!
//! - [`statevector`]: dense amplitude register with the three primitives a
//!   Grover search needs (uniform preparation, selective phase inversion,
//!   inversion about the average) and seeded measurement.
//! - [`grover`]: the Grover iteration and the closed-form amplification law.
//! - [`encoding`]: maps basis indices onto per-variable linear grids.
//! - [`objectives`]: Goldstein-Price, Shubert and Lennard-Jones cluster energies.
//! - [`minsearch`]: threshold-adapted minimum search with measurement schedules.
//! - [`pivot`]: the pivot/Grover hybrid and Lennard-Jones cluster growth.
//! - [`baseline`]: exhaustive grid minimisation and zoom refinement.
//! - [`cli`]: run configuration, experiment drivers and artifact writers.
//!
//! Runnable walkthroughs for each capability live under `examples/`.

// Reference digits such as 1.0472 rad are grid values, not pi/3.
#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod baseline;
pub mod cli;
pub mod encoding;
pub mod error;
pub mod grover;
pub mod minsearch;
pub mod objectives;
pub mod pivot;
pub mod rng;
pub mod statevector;

pub use error::{Error, Result};
