//! Deterministic agent-based simulation of recommender feedback loops and
//! network information diffusion.
//!
//! The crate is organized around the simulation loop: [`numerics`] holds the
//! mathematical kernels, [`agents`] the user/item/creator populations,
//! [`models`] the recommender implementations, [`engine`] the per-timestep
//! loop, [`metrics`] the observer-style measurement framework, and
//! [`diffusion`] the SIR cascade machinery for scale-free networks.

pub mod agents;
pub mod diffusion;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod models;
pub mod numerics;

pub use error::{Error, Result};
