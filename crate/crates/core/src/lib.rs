//! Distributionally robust density steering for linear systems with
//! uncertain disturbance laws.
//!
//! [`system`] stacks the dynamics, [`ambiguity`] handles Wasserstein balls of
//! Gaussians, [`drds`] builds and solves the steering program and its
//! chance-constrained baseline, and [`noise_sim`] checks policies by simulation.

pub mod ambiguity;
pub mod drds;
mod error;
mod exec;
pub mod linalg;
pub mod noise_sim;
pub mod system;

pub use error::{Error, Result, Stage};
pub use exec::Exec;
