//! Optimal insulation of polygonal heat conductors.
//!
//! The crate computes the best placement of a fixed amount of insulating
//! material on the insulated part of a polygon's boundary and checks the
//! thin-layer energies against their Robin-type limit:
//!
//! * [`geometry`]: polygons with labelled facets, transversal boundary fields,
//!   the layer map and exact layer quadrature.
//! * [`mesh`]: bulk triangulation, layer extrusion and the glued mesh.
//! * [`fem`]: P1 assembly, sparse storage, Jacobi-preconditioned CG and
//!   energy evaluators.
//! * [`robin`], [`thin_layer`], [`reduced`]: the limit problem, the layer
//!   problem and the reduced convex problem.
//! * [`reconstruct`]: thickness from a temperature field.
//! * [`gamma`]: epsilon sweeps, recovery sequences and boundary-layer limits.
//! * [`io`]: configuration, CSV and VTK; [`cli`]: the command dispatch.

pub mod cli;
pub mod error;
pub mod fem;
pub mod gamma;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod reconstruct;
pub mod reduced;
pub mod robin;
pub mod thin_layer;

pub use error::{Error, ErrorClass, Result};

#[cfg(test)]
mod testing;
