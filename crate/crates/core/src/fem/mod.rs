//! P1 finite elements: sparse storage, assembly, Jacobi-preconditioned CG
//! and the energy functionals.

mod assemble;
mod cg;
mod data;
mod energy;
pub mod sparse;

pub use assemble::{
    assemble_boundary_mass, assemble_load, assemble_mass, assemble_neumann, assemble_stiffness,
    dirichlet_constraints, element_stiffness, p1_gradients, triangle_gradient, MassQuadrature,
    ReducedSystem, RegionCoefficients,
};
pub use cg::{solve_spd, CgOptions, CgOutcome};
pub use data::{ProblemData, Source};
pub use energy::{boundary_l1, eval_e_eps, eval_e_limit, eval_i, robin_mass, EnergyReport, RobinMass};
pub use sparse::{CsrMatrix, TripletBuilder};

/// Nodal values of a P1 function, one per mesh node.
pub type ScalarField = Vec<f64>;
