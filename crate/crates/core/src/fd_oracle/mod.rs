//! Brute-force finite-difference oracles.
//!
//! * [`eigen`]: Neumann eigenvalues of the vertex Hamiltonian on a uniform mesh.
//! * [`waveguide`]: the full two-dimensional resolvent on truncated edges plus
//!   the vertex region.

pub mod eigen;
pub mod waveguide;

pub use eigen::{fd_vertex_eigen, FdEigenpair, Grid1D};
pub use waveguide::{
    assemble_dense, fd_resolvent, source_norm, unitary_map_check, DiscreteField, NodalField, Region,
    UnitaryCheck, WaveguideGrid,
};
