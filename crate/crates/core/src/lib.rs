//! Divergence-free nonconforming virtual element methods for the 2D Stokes
//! problem on polygonal meshes.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: polygonal meshes, generators, JSON I/O and cell geometry.
//! - [`polyspace`]: scaled monomials, quadrature, Gram matrices and the
//!   gradient / Koszul splitting of vector polynomials.
//! - [`element`]: per-cell degrees of freedom, the Stokes energy projector,
//!   stabilization and local matrices.
//! - [`rt`]: the generalized Raviart-Thomas reconstruction used by the
//!   pressure-robust load.
//! - [`system`]: global assembly and the standard, pressure-robust and
//!   reduced solvers with elementwise pressure recovery.
//! - [`harness`]: manufactured solutions, error norms and convergence tables.

pub mod element;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod polyspace;
pub mod rt;
pub mod system;

pub use error::{Error, Result};
pub use mesh::PolyMesh;

/// A point or vector in the plane.
pub type Point = [f64; 2];
