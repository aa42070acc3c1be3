//! Shifted Landau-Lifshitz five-field relativistic fluid theories.
//!
//! The crate builds perfect-fluid fluxes in Godunov variables, the Landau
//! dissipation tensor and its Eulerian gradient shift, checks the algebraic
//! identities those constructions satisfy, analyses characteristics and
//! computes small-amplitude shock profiles.

pub mod analysis;
pub mod characteristics;
pub mod cli;
pub mod dissipation;
pub mod error;
pub mod fluid;
pub mod sampling;
pub mod shock;
pub mod suites;
pub mod tensor;

pub use error::{Error, Result};
