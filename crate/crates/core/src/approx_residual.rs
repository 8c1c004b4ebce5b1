//! The explicit approximate resolvent Ψ̂_ε and its residual on the vertex region.
//!
//! On edge j the approximation is `x_j(s)χₙ(u)` with
//! `x_j = r₀(z)f_j + q_j e^{i√z s}`; on the vertex it is `φ(s)χₙ(u)` with
//! `φ = ε[ξ₁ r_v(ε²z; s, −1) + ξ₂ r_v(ε²z; s, 1)]`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{solve_coupling_with_kernel, CouplingCoefficients};
use crate::error::{Error, Result};
use crate::kernels::{Endpoint, FunctionRecord, HalfLineResolvent, VertexKernel};
use crate::profile::CurvatureProfile;
use crate::quadrature::GaussLegendre;
use crate::vertex_spectrum::{classify_profile, VertexCase, VertexSpectrum, DEFAULT_ZERO_TOLERANCE};
use crate::chi;

/// Composite Gauss–Legendre layout on the vertex rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub s_panels: usize,
    pub s_order: usize,
    pub u_panels: usize,
    pub u_order: usize,
}

impl Default for QuadratureSpec {
    /// 64 nodes in s and 16 in u.
    fn default() -> Self {
        QuadratureSpec {
            s_panels: 8,
            s_order: 8,
            u_panels: 2,
            u_order: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.s_order < 4 || self.u_order < 4 {
            return Err(Error::InvalidInput("quadrature order must be >= 4".into()));
        }
        if self.s_panels == 0 || self.u_panels == 0 {
            return Err(Error::InvalidInput("quadrature needs at least one panel".into()));
        }
        Ok(())
    }
}

/// The assembled approximation for one (profile, n, z, ε, δ, f₁, f₂).
#[derive(Clone, Debug)]
pub struct ApproxSolution {
    pub profile: CurvatureProfile,
    pub n: usize,
    pub z: Complex64,
    pub epsilon: f64,
    pub delta: f64,
    pub f: [FunctionRecord; 2],
    pub coeffs: CouplingCoefficients,
    pub kernel: VertexKernel,
    pub half_line: HalfLineResolvent,
    pub spectrum: Arc<VertexSpectrum>,
}

/// Classifies the profile and assembles the approximation.
pub fn assemble(
    profile: &CurvatureProfile,
    n: usize,
    z: Complex64,
    epsilon: f64,
    delta: f64,
    f1: FunctionRecord,
    f2: FunctionRecord,
) -> Result<ApproxSolution> {
    let spectrum = Arc::new(classify_profile(profile, DEFAULT_ZERO_TOLERANCE)?);
    assemble_with_spectrum(spectrum, n, z, epsilon, delta, f1, f2)
}

/// Assembles the approximation reusing a precomputed spectrum.
pub fn assemble_with_spectrum(
    spectrum: Arc<VertexSpectrum>,
    n: usize,
    z: Complex64,
    epsilon: f64,
    delta: f64,
    f1: FunctionRecord,
    f2: FunctionRecord,
) -> Result<ApproxSolution> {
    if n == 0 {
        return Err(Error::InvalidInput("transverse mode index n must be >= 1".into()));
    }
    if !(delta > 0.0 && delta <= epsilon && epsilon <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < delta <= epsilon <= 1, got delta = {delta}, epsilon = {epsilon}"
        )));
    }
    f1.validate()?;
    f2.validate()?;
    let half_line = HalfLineResolvent::new(z)?;
    let p = [
        half_line.boundary_derivative(&f1)?,
        half_line.boundary_derivative(&f2)?,
    ];
    let profile = spectrum.profile;
    let kernel = VertexKernel::new(&profile, z * (epsilon * epsilon))?;
    let coeffs = solve_coupling_with_kernel(&kernel, z, epsilon, p, spectrum.case)?;
    Ok(ApproxSolution {
        profile,
        n,
        z,
        epsilon,
        delta,
        f: [f1, f2],
        coeffs,
        kernel,
        half_line,
        spectrum,
    })
}

fn edge_index(edge: usize) -> Result<usize> {
    match edge {
        1 | 2 => Ok(edge - 1),
        _ => Err(Error::InvalidInput(format!("edge index {edge} not in {{1, 2}}"))),
    }
}

impl ApproxSolution {
    pub fn ratio(&self) -> f64 {
        self.delta / self.epsilon
    }

    /// `x_{j,ε}(s)` on edge `edge ∈ {1, 2}`.
    pub fn edge_value(&self, edge: usize, s: f64) -> Result<Complex64> {
        let j = edge_index(edge)?;
        let ik = Complex64::i() * self.half_line.sqrt_z;
        Ok(self.half_line.apply(&self.f[j], s)? + self.coeffs.q[j] * (ik * s).exp())
    }

    /// `x_{j,ε}′(s)`.
    pub fn edge_derivative(&self, edge: usize, s: f64) -> Result<Complex64> {
        let j = edge_index(edge)?;
        let ik = Complex64::i() * self.half_line.sqrt_z;
        Ok(self.half_line.apply_derivative(&self.f[j], s)? + self.coeffs.q[j] * ik * (ik * s).exp())
    }

    /// `[φ(s), φ′(s)]` of the vertex profile.
    pub fn vertex_profile(&self, s: f64) -> [Complex64; 2] {
        let [m0, m1] = self.kernel.endpoint_column(s, Endpoint::Minus);
        let [p0, p1] = self.kernel.endpoint_column(s, Endpoint::Plus);
        let [x1, x2] = self.coeffs.xi;
        let e = self.epsilon;
        [e * (x1 * m0 + x2 * p0), e * (x1 * m1 + x2 * p1)]
    }

    fn residual_from(&self, s: f64, u: f64, phi: [Complex64; 2]) -> Complex64 {
        let g = self.profile.geometry_unchecked(s, u, self.ratio());
        let gam = self.profile.gamma(s, 0);
        let q4 = 0.25 * gam * gam;
        let w = self.z * (self.epsilon * self.epsilon);
        let coef = (g.inv_g - 1.0) * (q4 + w) + (g.w + q4);
        (coef * phi[0] - g.ds_inv_g * phi[1]) * chi(self.n, u)
    }

    /// `[L̃ − n²π²/(δ/ε)² − ε²z](φχₙ)` at (s, u), with `φ″` eliminated through the
    /// interior equation `φ″ = (−γ²/4 − ε²z)φ`.
    pub fn residual_field(&self, s: f64, u: f64) -> Complex64 {
        self.residual_from(s, u, self.vertex_profile(s))
    }

    /// `(‖f₁‖² + ‖f₂‖²)^{1/2}`.
    pub fn forcing_norm(&self) -> f64 {
        self.f[0].l2_norm().hypot(self.f[1].l2_norm())
    }

    fn xi_abs_sum(&self) -> f64 {
        self.coeffs.xi[0].norm() + self.coeffs.xi[1].norm()
    }

    /// `(ξ·α, ‖y*′‖)` for the resonant case.
    fn resonant_data(&self) -> Option<(Complex64, f64, &crate::vertex_spectrum::Eigenfunction)> {
        match self.spectrum.case {
            VertexCase::Resonant { alpha1, alpha2, .. } => {
                let y = self.spectrum.resonant_eigenfunction()?;
                let dot = self.coeffs.xi[0] * alpha1 + self.coeffs.xi[1] * alpha2;
                let dnorm = y.integrate_mesh(|s| y.derivative(s).powi(2)).sqrt();
                Some((dot, dnorm, y))
            }
            VertexCase::Generic => None,
        }
    }

    /// Residual norms on the vertex region with the bound shapes.
    pub fn residual_norms(&self, quad: &QuadratureSpec) -> Result<ResidualReport> {
        quad.validate()?;
        let s_nodes = GaussLegendre::new(quad.s_order).composite(-1.0, 1.0, quad.s_panels);
        let u_nodes = GaussLegendre::new(quad.u_order).composite(0.0, 1.0, quad.u_panels);
        let mut total = 0.0;
        for &(s, ws) in &s_nodes {
            let phi = self.vertex_profile(s);
            let inner: f64 = u_nodes
                .iter()
                .map(|&(u, wu)| wu * self.residual_from(s, u, phi).norm_sqr())
                .sum();
            total += ws * inner;
        }
        let l2 = total.sqrt();
        let e = self.epsilon;
        let rho = self.ratio();
        let xi_sum = self.xi_abs_sum();
        let (psi_star, psi_star_ds) = match self.resonant_data() {
            Some((dot, dnorm, _)) => {
                let base = dot.norm() / (e * self.z.norm());
                (base, base * dnorm)
            }
            None => (0.0, 0.0),
        };
        let bound_case1 = rho * e * xi_sum;
        let bound_case2 = rho * (e * xi_sum + psi_star + psi_star_ds);
        let bound = if self.spectrum.case.is_resonant() {
            bound_case2
        } else {
            bound_case1
        };
        Ok(ResidualReport {
            epsilon: e,
            delta: self.delta,
            residual_l2_v: l2,
            residual_hnorm: l2 * e.powf(-1.5),
            forcing_norm: self.forcing_norm(),
            xi_norm: xi_sum,
            psi_star_norm: psi_star,
            psi_star_ds_norm: psi_star_ds,
            bound_case1,
            bound_case2,
            bound_ratio: if bound > 0.0 { l2 / bound } else { 0.0 },
        })
    }

    /// Norms of `ψ̂_v − ψ̂*` and its s-derivative, relative to `ε(|ξ₁| + |ξ₂|)`.
    pub fn vertex_subtracted_norms(&self) -> Result<VertexSubtracted> {
        let (dot, _, y) = self.resonant_data().ok_or_else(|| {
            Error::CaseMismatch("vertex-subtracted norms need a resonant profile".into())
        })?;
        let e = self.epsilon;
        let c = dot / (e * self.z);
        let rule = GaussLegendre::new(8);
        let (mut n0, mut n1) = (0.0, 0.0);
        for (s, w) in rule.composite(-1.0, 1.0, 16) {
            let [phi, dphi] = self.vertex_profile(s);
            n0 += w * (phi + c * y.value(s)).norm_sqr();
            n1 += w * (dphi + c * y.derivative(s)).norm_sqr();
        }
        let (n0, n1) = (n0.sqrt(), n1.sqrt());
        let scale = e * self.xi_abs_sum();
        let ratio = |v: f64| if scale > 0.0 { v / scale } else { 0.0 };
        Ok(VertexSubtracted {
            epsilon: e,
            norm: n0,
            ds_norm: n1,
            ratio: ratio(n0),
            ds_ratio: ratio(n1),
        })
    }
}

/// Residual of Ψ̂_ε and the theorem-shaped bounds (constants omitted).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub epsilon: f64,
    pub delta: f64,
    pub residual_l2_v: f64,
    /// `ε^{−3/2} · residual_l2_v`.
    pub residual_hnorm: f64,
    pub forcing_norm: f64,
    /// `|ξ₁| + |ξ₂|`.
    pub xi_norm: f64,
    pub psi_star_norm: f64,
    pub psi_star_ds_norm: f64,
    /// `(δ/ε)·ε(|ξ₁| + |ξ₂|)`.
    pub bound_case1: f64,
    /// `(δ/ε)·[ε(|ξ₁| + |ξ₂|) + ‖ψ̂*‖ + ‖∂_sψ̂*‖]`.
    pub bound_case2: f64,
    /// `residual_l2_v` over the bound matching the profile's case.
    pub bound_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSubtracted {
    pub epsilon: f64,
    pub norm: f64,
    pub ds_norm: f64,
    pub ratio: f64,
    pub ds_ratio: f64,
}
