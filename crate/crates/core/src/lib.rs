//! Numerical dynamics of the spatial isosceles three-body problem.
//!
//! The crate covers the reduced Hamiltonian flow at energy `-1`, the Euler
//! orbit and the Hill equation governing its transverse linearisation
//! (indices, rotation number, degenerate curves), contact-volume formulas,
//! the disk-like return map with winding and linking invariants, escape
//! dynamics in McGehee coordinates, and exact polynomial certification.

pub mod error;
pub mod certify;
pub mod flow;
pub mod hill;
pub mod mcgehee;
pub mod ode;
pub mod params;
pub mod quad;
pub mod roots;
pub mod section;
pub mod volume;

pub use error::{Error, Result};
pub use flow::State4;
pub use params::Params;
