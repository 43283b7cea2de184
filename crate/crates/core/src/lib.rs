//! Feedback Stackelberg equilibria for linear-quadratic stochastic
//! differential games.
//!
//! The pipeline is: describe a game ([`model`]), integrate the coupled
//! Riccati equations backward ([`riccati`]), turn the kernels into affine
//! feedback strategies ([`equilibrium`]), then check them by simulation
//! ([`sim`], [`verify`]). [`hamiltonian`] holds the pointwise leader/follower
//! problem the Riccati equations are built from.

pub mod benchmarks;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod export;
pub mod hamiltonian;
pub mod linalg;
pub mod model;
pub mod riccati;
pub mod sim;
pub mod spec_file;
pub mod verify;

pub use error::{Error, Result};
