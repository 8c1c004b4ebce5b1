//! Resolvent approximation for a thin curved Dirichlet waveguide that collapses
//! onto a graph with two half-infinite edges.
//!
//! The crate is organised bottom-up:
//!
//! * [`profile`]: curvature profiles, metric factor and effective potential.
//! * [`vertex_spectrum`]: shooting solutions, Neumann eigenpairs of the vertex
//!   Hamiltonian and the generic/resonant classification.
//! * [`kernels`]: vertex Green's function, free Neumann kernel and the
//!   half-line Dirichlet resolvent.
//! * [`coupling`]: the 2x2 vertex coupling system and its small-ε expansion.
//! * [`approx_residual`]: the assembled approximate resolvent and its residual.
//! * [`graph_limit`]: decoupled and weighted-Kirchhoff limit operators.
//! * [`fd_oracle`]: brute-force finite-difference cross-checks.
//! * [`experiments`]: sweeps, slope fits and persistence.

pub mod approx_residual;
pub mod coupling;
pub mod error;
pub mod experiments;
pub mod fd_oracle;
pub mod graph_limit;
pub mod kernels;
pub mod ode;
pub mod profile;
pub mod quadrature;
pub mod vertex_spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Square root of `z` on the branch with non-negative imaginary part.
pub fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// Transverse Dirichlet mode `√2 sin(nπu)`.
pub fn chi(n: usize, u: f64) -> f64 {
    std::f64::consts::SQRT_2 * (n as f64 * std::f64::consts::PI * u).sin()
}
