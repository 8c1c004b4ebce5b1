//! Limit operators on the two-edge graph: decoupled Dirichlet and weighted
//! Kirchhoff, their resolvents, transverse projections and boundary diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approx_residual::ApproxSolution;
use crate::coupling::{kirchhoff_projector, KirchhoffProjector};
use crate::error::{Error, Result};
use crate::kernels::{FunctionRecord, HalfLineResolvent};
use crate::quadrature::GaussLegendre;
use crate::vertex_spectrum::VertexCase;
use crate::chi;

/// Which limit operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphLimit {
    Decoupled,
    WeightedKirchhoff { projector: KirchhoffProjector },
}

/// Resolvent of a limit operator at `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphResolvent {
    pub kind: GraphLimit,
    pub z: Complex64,
    pub half_line: HalfLineResolvent,
}

impl GraphResolvent {
    pub fn new(kind: GraphLimit, z: Complex64) -> Result<Self> {
        Ok(GraphResolvent {
            kind,
            z,
            half_line: HalfLineResolvent::new(z)?,
        })
    }

    /// The limit that matches a vertex case.
    pub fn for_case(case: &VertexCase, z: Complex64) -> Result<Self> {
        let kind = match *case {
            VertexCase::Generic => GraphLimit::Decoupled,
            VertexCase::Resonant { alpha1, alpha2, .. } => GraphLimit::WeightedKirchhoff {
                projector: kirchhoff_projector(alpha1, alpha2)?,
            },
        };
        GraphResolvent::new(kind, z)
    }

    /// Edge amplitudes `q`: zero for the decoupled limit, `(i/√z)Λ₀p` otherwise.
    pub fn edge_amplitudes(&self, p: [Complex64; 2]) -> [Complex64; 2] {
        match &self.kind {
            GraphLimit::Decoupled => [Complex64::new(0.0, 0.0); 2],
            GraphLimit::WeightedKirchhoff { projector } => {
                let l = projector.lambda0;
                let f = Complex64::i() / self.half_line.sqrt_z;
                [
                    f * (l[0][0] * p[0] + l[0][1] * p[1]),
                    f * (l[1][0] * p[0] + l[1][1] * p[1]),
                ]
            }
        }
    }

    /// Resolvent applied to `(f₁, f₂)`.
    pub fn solve(&self, f1: &FunctionRecord, f2: &FunctionRecord) -> Result<GraphSolution> {
        let p = [
            self.half_line.boundary_derivative(f1)?,
            self.half_line.boundary_derivative(f2)?,
        ];
        Ok(GraphSolution {
            p,
            q: self.edge_amplitudes(p),
            half_line: self.half_line,
            f: [f1.clone(), f2.clone()],
        })
    }

    /// Value on edge `edge ∈ {1, 2}` at `s` of the resolvent applied to `(f₁, f₂)`.
    pub fn apply_resolvent(
        &self,
        f1: &FunctionRecord,
        f2: &FunctionRecord,
        s: f64,
        edge: usize,
    ) -> Result<Complex64> {
        self.solve(f1, f2)?.value(edge, s)
    }
}

/// `(x₁, x₂)` with `x_j = r₀(z)f_j + q_j e^{i√z s}`.
#[derive(Clone, Debug)]
pub struct GraphSolution {
    pub p: [Complex64; 2],
    pub q: [Complex64; 2],
    pub half_line: HalfLineResolvent,
    pub f: [FunctionRecord; 2],
}

fn edge_index(edge: usize) -> Result<usize> {
    match edge {
        1 | 2 => Ok(edge - 1),
        _ => Err(Error::InvalidInput(format!("edge index {edge} not in {{1, 2}}"))),
    }
}

impl GraphSolution {
    pub fn value(&self, edge: usize, s: f64) -> Result<Complex64> {
        let j = edge_index(edge)?;
        let ik = Complex64::i() * self.half_line.sqrt_z;
        Ok(self.half_line.apply(&self.f[j], s)? + self.q[j] * (ik * s).exp())
    }

    pub fn derivative(&self, edge: usize, s: f64) -> Result<Complex64> {
        let j = edge_index(edge)?;
        let ik = Complex64::i() * self.half_line.sqrt_z;
        Ok(self.half_line.apply_derivative(&self.f[j], s)? + self.q[j] * ik * (ik * s).exp())
    }

    /// `(x(0), x′(0)) = (q, p + i√z q)`.
    pub fn boundary_values(&self) -> ([Complex64; 2], [Complex64; 2]) {
        let ik = Complex64::i() * self.half_line.sqrt_z;
        (
            self.q,
            [self.p[0] + ik * self.q[0], self.p[1] + ik * self.q[1]],
        )
    }
}

/// `‖(x_{j,ε} − x_j)_j‖_{L²}` between the approximation's edge profiles and the
/// limit resolvent. Both share `r₀(z)f_j`, so the difference is a pure
/// `e^{i√z s}` tail with norm `|Δq_j| / (2 Im √z)^{1/2}`.
pub fn limit_comparison(sol: &ApproxSolution, res: &GraphResolvent) -> Result<f64> {
    match (&sol.coeffs.case, &res.kind) {
        (VertexCase::Generic, GraphLimit::Decoupled)
        | (VertexCase::Resonant { .. }, GraphLimit::WeightedKirchhoff { .. }) => {}
        _ => {
            return Err(Error::CaseMismatch(
                "generic profiles pair with the decoupled limit, resonant ones with weighted Kirchhoff"
                    .into(),
            ))
        }
    }
    if (sol.z - res.z).norm() > 1e-14 * sol.z.norm().max(1.0) {
        return Err(Error::InvalidInput("solution and resolvent use different z".into()));
    }
    let q = res.edge_amplitudes(sol.coeffs.p);
    let two_im = 2.0 * res.half_line.sqrt_z.im;
    let sum: f64 = (0..2).map(|j| (sol.coeffs.q[j] - q[j]).norm_sqr() / two_im).sum();
    Ok(sum.sqrt())
}

/// Boundary-value defects of the approximation at the vertex end of the edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "limit", rename_all = "snake_case")]
pub enum BoundaryDefects {
    /// `|x_j(0)|` and `|x_j′(0) − p_j|`.
    Dirichlet {
        value: [f64; 2],
        derivative: [f64; 2],
    },
    /// `|α₂x₁(0) − α₁x₂(0)|` and `|α₁x₁′(0) + α₂x₂′(0)|`.
    Kirchhoff { value: f64, flux: f64 },
}

impl BoundaryDefects {
    pub fn max(&self) -> f64 {
        match *self {
            BoundaryDefects::Dirichlet { value, derivative } => {
                value.iter().chain(&derivative).fold(0.0, |a, b| a.max(*b))
            }
            BoundaryDefects::Kirchhoff { value, flux } => value.max(flux),
        }
    }
}

pub fn boundary_limits(sol: &ApproxSolution) -> BoundaryDefects {
    let q = sol.coeffs.q;
    let xi = sol.coeffs.xi;
    let p = sol.coeffs.p;
    match sol.coeffs.case {
        VertexCase::Generic => BoundaryDefects::Dirichlet {
            value: [q[0].norm(), q[1].norm()],
            derivative: [(xi[0] - p[0]).norm(), (xi[1] - p[1]).norm()],
        },
        VertexCase::Resonant { alpha1, alpha2, .. } => BoundaryDefects::Kirchhoff {
            value: (alpha2 * q[0] - alpha1 * q[1]).norm(),
            flux: (alpha1 * xi[0] + alpha2 * xi[1]).norm(),
        },
    }
}

/// `(χₙ, ψ(s, ·))_{L²(0,1)}` by Gauss–Legendre in u.
pub fn project_transverse<F: Fn(f64) -> Complex64>(psi_at_s: F, n: usize) -> Complex64 {
    let rule = GaussLegendre::new(16);
    rule.composite(0.0, 1.0, 4 * n.max(1))
        .into_iter()
        .map(|(u, w)| psi_at_s(u) * (w * chi(n, u)))
        .sum()
}

/// `g(s)χₙ(u)`, the adjoint of the transverse projection applied to `g`.
pub fn lift_transverse(g: Complex64, n: usize, u: f64) -> Complex64 {
    g * chi(n, u)
}
