pub mod consistency;
pub mod corrector;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod potential;
pub mod sampling;
pub mod stress;

pub use error::{Error, Result};
