//! Mutual-coupling modelling for linear dipole arrays: a thin-wire MoM solver
//! and a physics-aware learned surrogate built on top of it.

pub mod cli;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod linalg;
pub mod mom;
pub mod nn;
pub mod pann;
pub mod pc_lstm;
pub mod reference;
pub mod synthesis;

pub use error::{Error, Result};
