//! Pseudospherical surfaces from loop-group potentials.
//!
//! The pipeline runs: potential pair → axis frames → per-node Birkhoff
//! splitting → extended frame `U(x, y; λ)` → Sym formula → surface in R³.

pub mod birkhoff;
pub mod cli;
pub mod error;
pub mod frames;
pub mod grid;
pub mod loop_algebra;
pub mod oracle;
pub mod potentials;
pub mod surface;
pub mod symmetry;

pub use error::{PsError, Result};
