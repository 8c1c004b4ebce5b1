//! The 2x2 vertex coupling system and its small-ε behaviour.
//!
//! With `Λ_ε` the corner matrix of `r_v(ε²z)`, the edge amplitudes solve
//! `(1 − iε√z Λ_ε) q = ε Λ_ε p` and `ξ = p + i√z q`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::VertexKernel;
use crate::profile::CurvatureProfile;
use crate::sqrt_upper;
use crate::vertex_spectrum::{VertexCase, VertexSpectrum};

pub type CMat2 = Matrix2<Complex64>;
pub type CVec2 = Vector2<Complex64>;

/// Guard on `|det(1 − iε√z Λ_ε)|`.
pub const DETERMINANT_GUARD: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Induced 2-norm of a complex 2x2 matrix from its singular values.
pub fn norm2_mat(m: &CMat2) -> f64 {
    let h = m.adjoint() * m;
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)].norm();
    let tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (tr + disc).max(0.0).sqrt()
}

pub fn norm2_vec(v: &CVec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn to_array_vec(v: &CVec2) -> [Complex64; 2] {
    [v[0], v[1]]
}

pub fn to_array_mat(m: &CMat2) -> [[Complex64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn real_to_complex(m: &Matrix2<f64>) -> CMat2 {
    m.map(c)
}

/// Corner matrix `[[r(−1,−1), r(−1,1)], [r(1,−1), r(1,1)]]` of a kernel that
/// was built at the scaled parameter `ε²z`.
pub fn build_lambda_eps(kernel: &VertexKernel) -> Result<CMat2> {
    Ok(CMat2::new(
        kernel.value(-1.0, -1.0)?,
        kernel.value(-1.0, 1.0)?,
        kernel.value(1.0, -1.0)?,
        kernel.value(1.0, 1.0)?,
    ))
}

/// Solution of the coupling system at one (z, ε, p).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingCoefficients {
    pub z: Complex64,
    pub epsilon: f64,
    pub p: [Complex64; 2],
    pub q: [Complex64; 2],
    pub xi: [Complex64; 2],
    pub lambda_eps: [[Complex64; 2]; 2],
    pub case: VertexCase,
    /// `‖(1 − iε√zΛ_ε) q − εΛ_ε p‖`.
    pub residual: f64,
}

impl CouplingCoefficients {
    /// Solves the system for a given corner matrix.
    pub fn from_lambda(
        z: Complex64,
        epsilon: f64,
        lambda_eps: CMat2,
        p: [Complex64; 2],
        case: VertexCase,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidInput(format!("epsilon = {epsilon} outside (0, 1]")));
        }
        let k = sqrt_upper(z);
        let i = Complex64::i();
        let a = CMat2::identity() - lambda_eps * (i * epsilon * k);
        let det = a.determinant();
        if det.norm() < DETERMINANT_GUARD {
            return Err(Error::SingularSystem { det: det.norm() });
        }
        let inv = CMat2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]) / det;
        let pv = CVec2::new(p[0], p[1]);
        let rhs = lambda_eps * pv * c(epsilon);
        let q = inv * rhs;
        let xi = pv + q * (i * k);
        let residual = norm2_vec(&(a * q - rhs));
        Ok(CouplingCoefficients {
            z,
            epsilon,
            p,
            q: to_array_vec(&q),
            xi: to_array_vec(&xi),
            lambda_eps: to_array_mat(&lambda_eps),
            case,
            residual,
        })
    }

    pub fn p_vec(&self) -> CVec2 {
        CVec2::new(self.p[0], self.p[1])
    }

    pub fn q_vec(&self) -> CVec2 {
        CVec2::new(self.q[0], self.q[1])
    }

    pub fn xi_vec(&self) -> CVec2 {
        CVec2::new(self.xi[0], self.xi[1])
    }

    pub fn lambda_mat(&self) -> CMat2 {
        let l = &self.lambda_eps;
        CMat2::new(l[0][0], l[0][1], l[1][0], l[1][1])
    }
}

/// Builds the kernel at `ε²z` and solves the coupling system.
pub fn solve_coupling(
    profile: &CurvatureProfile,
    z: Complex64,
    epsilon: f64,
    p: [Complex64; 2],
    case: VertexCase,
) -> Result<CouplingCoefficients> {
    let kernel = VertexKernel::new(profile, z * (epsilon * epsilon))?;
    solve_coupling_with_kernel(&kernel, z, epsilon, p, case)
}

/// As [`solve_coupling`] with a kernel already built at `ε²z`.
pub fn solve_coupling_with_kernel(
    kernel: &VertexKernel,
    z: Complex64,
    epsilon: f64,
    p: [Complex64; 2],
    case: VertexCase,
) -> Result<CouplingCoefficients> {
    let lam = build_lambda_eps(kernel)?;
    CouplingCoefficients::from_lambda(z, epsilon, lam, p, case)
}

/// Rank-one projector onto (α₁, α₂) and its complement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KirchhoffProjector {
    pub alpha1: f64,
    pub alpha2: f64,
    pub lambda0: [[f64; 2]; 2],
    pub lambda0_perp: [[f64; 2]; 2],
}

/// `Λ₀ = ααᵀ/|α|²`, `Λ₀^⊥ = 1 − Λ₀`.
pub fn kirchhoff_projector(alpha1: f64, alpha2: f64) -> Result<KirchhoffProjector> {
    let n2 = alpha1 * alpha1 + alpha2 * alpha2;
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::InvalidInput("alpha vector must be nonzero".into()));
    }
    let l = [
        [alpha1 * alpha1 / n2, alpha1 * alpha2 / n2],
        [alpha1 * alpha2 / n2, alpha2 * alpha2 / n2],
    ];
    let perp = [[1.0 - l[0][0], -l[0][1]], [-l[1][0], 1.0 - l[1][1]]];
    Ok(KirchhoffProjector {
        alpha1,
        alpha2,
        lambda0: l,
        lambda0_perp: perp,
    })
}

impl KirchhoffProjector {
    pub fn alpha_sq(&self) -> f64 {
        self.alpha1 * self.alpha1 + self.alpha2 * self.alpha2
    }

    pub fn lambda0_mat(&self) -> Matrix2<f64> {
        let l = &self.lambda0;
        Matrix2::new(l[0][0], l[0][1], l[1][0], l[1][1])
    }

    pub fn perp_mat(&self) -> Matrix2<f64> {
        let l = &self.lambda0_perp;
        Matrix2::new(l[0][0], l[0][1], l[1][0], l[1][1])
    }
}

/// `δᵢⱼ − αᵢαⱼ/Σαₖ²` for two edges, computed directly from the weights.
pub fn weighted_kirchhoff_pi(alpha1: f64, alpha2: f64) -> Result<[[f64; 2]; 2]> {
    let a = [alpha1, alpha2];
    let n2: f64 = a.iter().map(|x| x * x).sum();
    if !(n2 > 0.0) {
        return Err(Error::InvalidInput("alpha vector must be nonzero".into()));
    }
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = if i == j { 1.0 } else { 0.0 } - a[i] * a[j] / n2;
        }
    }
    Ok(out)
}

/// Data for the resonant small-ε expansion
/// `(1 − iε√zΛ_ε)⁻¹ εΛ_ε = iΛ₀/√z + ε(−Λ₀/|α|² + Λ₀^⊥K₀Λ₀^⊥) + O(ε²)`,
/// where `K₀` is the corner matrix of the reduced resolvent at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantExpansion {
    pub projector: KirchhoffProjector,
    pub reduced_corners: [[f64; 2]; 2],
}

impl ResonantExpansion {
    pub fn reduced_mat(&self) -> Matrix2<f64> {
        let k = &self.reduced_corners;
        Matrix2::new(k[0][0], k[0][1], k[1][0], k[1][1])
    }

    /// The ε-coefficient `−Λ₀/|α|² + Λ₀^⊥K₀Λ₀^⊥`.
    pub fn first_order(&self) -> Matrix2<f64> {
        let l0 = self.projector.lambda0_mat();
        let q = self.projector.perp_mat();
        -l0 / self.projector.alpha_sq() + q * self.reduced_mat() * q
    }
}

/// Builds the resonant expansion data from a resonant spectrum.
///
/// `K₀ = lim_{w→0} [Λ(w) − ααᵀ/(λ* − w)]`, evaluated at `w = ±iη, ±2iη` and
/// Richardson-extrapolated in η.
pub fn resonant_expansion(spectrum: &VertexSpectrum) -> Result<ResonantExpansion> {
    let (n_star, a1, a2) = match spectrum.case {
        VertexCase::Resonant {
            n_star,
            alpha1,
            alpha2,
        } => (n_star, alpha1, alpha2),
        VertexCase::Generic => {
            return Err(Error::CaseMismatch(
                "resonant expansion requested for a generic profile".into(),
            ))
        }
    };
    let lam_star = spectrum.eigenvalues[n_star - 1];
    let projector = kirchhoff_projector(a1, a2)?;
    let alpha = Matrix2::new(a1 * a1, a1 * a2, a1 * a2, a2 * a2);
    let eta = 1e-2;
    let reduced_at = |h: f64| -> Result<Matrix2<f64>> {
        let w = Complex64::new(0.0, h);
        let k = VertexKernel::new(&spectrum.profile, w)?;
        let lam = build_lambda_eps(&k)?;
        let pole = real_to_complex(&alpha) / (c(lam_star) - w);
        Ok((lam - pole).map(|x| x.re))
    };
    let a1m = reduced_at(eta)?;
    let a2m = reduced_at(2.0 * eta)?;
    let k0 = (a1m * 4.0 - a2m) / 3.0;
    let sym = (k0 + k0.transpose()) * 0.5;
    Ok(ResonantExpansion {
        projector,
        reduced_corners: [[sym[(0, 0)], sym[(0, 1)]], [sym[(1, 0)], sym[(1, 1)]]],
    })
}

/// Deviations of (q, ξ) from their small-ε limits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDeviation {
    pub dev_q: f64,
    /// ξ-deviation after subtracting the complete first-order term.
    pub dev_xi: f64,
    /// ξ-deviation from the leading term only.
    pub dev_xi_naive: f64,
}

/// Generic: `‖q‖/‖p‖`, `‖ξ − p‖/‖p‖`. Resonant: deviations from
/// `iΛ₀p/√z` and from `Λ₀^⊥p + ε i√z(−Λ₀/|α|² + Λ₀^⊥K₀Λ₀^⊥)p`.
pub fn asymptotic_deviation(
    coeffs: &CouplingCoefficients,
    expansion: Option<&ResonantExpansion>,
) -> Result<AsymptoticDeviation> {
    let p = coeffs.p_vec();
    let q = coeffs.q_vec();
    let xi = coeffs.xi_vec();
    let np = norm2_vec(&p);
    match (&coeffs.case, expansion) {
        (VertexCase::Generic, None) => {
            if np == 0.0 {
                return Ok(AsymptoticDeviation {
                    dev_q: 0.0,
                    dev_xi: 0.0,
                    dev_xi_naive: 0.0,
                });
            }
            let d = norm2_vec(&(xi - p)) / np;
            Ok(AsymptoticDeviation {
                dev_q: norm2_vec(&q) / np,
                dev_xi: d,
                dev_xi_naive: d,
            })
        }
        (VertexCase::Resonant { .. }, Some(ex)) => {
            if np == 0.0 {
                return Ok(AsymptoticDeviation {
                    dev_q: 0.0,
                    dev_xi: 0.0,
                    dev_xi_naive: 0.0,
                });
            }
            let k = sqrt_upper(coeffs.z);
            let i = Complex64::i();
            let l0 = real_to_complex(&ex.projector.lambda0_mat());
            let perp = real_to_complex(&ex.projector.perp_mat());
            let first = real_to_complex(&ex.first_order());
            let q0 = l0 * p * (i / k);
            let xi0 = perp * p;
            let xi1 = first * p * (i * k * coeffs.epsilon);
            Ok(AsymptoticDeviation {
                dev_q: norm2_vec(&(q - q0)) / np,
                dev_xi: norm2_vec(&(xi - xi0 - xi1)) / np,
                dev_xi_naive: norm2_vec(&(xi - xi0)) / np,
            })
        }
        (VertexCase::Generic, Some(_)) => Err(Error::CaseMismatch(
            "expansion data supplied for a generic coupling".into(),
        )),
        (VertexCase::Resonant { .. }, None) => Err(Error::CaseMismatch(
            "resonant coupling needs expansion data".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = kirchhoff_projector(h, h).unwrap();
        for row in p.lambda0 {
            for v in row {
                assert!((v - 0.5).abs() < 1e-15);
            }
        }
        let p = kirchhoff_projector(1.0, 0.0).unwrap();
        assert_eq!(p.lambda0, [[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(
            kirchhoff_projector(-0.3, 0.8).unwrap().lambda0,
            kirchhoff_projector(0.3, -0.8).unwrap().lambda0
        );
        assert!(kirchhoff_projector(0.0, 0.0).is_err());
    }

    #[test]
    fn matrix_two_norm() {
        let m = CMat2::new(c(3.0), c(0.0), c(0.0), Complex64::new(0.0, -4.0));
        assert!((norm2_mat(&m) - 4.0).abs() < 1e-14);
        let m = CMat2::new(c(1.0), c(1.0), c(0.0), c(1.0));
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((norm2_mat(&m) - golden).abs() < 1e-14);
    }

    #[test]
    fn null_input_gives_null_output() {
        let lam = CMat2::new(c(1.0), c(2.0), c(2.0), c(1.0));
        let co = CouplingCoefficients::from_lambda(
            Complex64::i(),
            0.1,
            lam,
            [c(0.0), c(0.0)],
            VertexCase::Generic,
        )
        .unwrap();
        assert_eq!(co.q, [c(0.0), c(0.0)]);
        assert_eq!(co.xi, [c(0.0), c(0.0)]);
        let d = asymptotic_deviation(&co, None).unwrap();
        assert_eq!((d.dev_q, d.dev_xi), (0.0, 0.0));
    }

    #[test]
    fn singular_system_detected() {
        // 1 − iε√z Λ = 0 when Λ = 1/(iε√z).
        let z = Complex64::i();
        let eps = 0.5;
        let k = sqrt_upper(z);
        let d = 1.0 / (Complex64::i() * eps * k);
        let lam = CMat2::new(d, c(0.0), c(0.0), d);
        let r = CouplingCoefficients::from_lambda(z, eps, lam, [c(1.0), c(0.0)], VertexCase::Generic);
        assert!(matches!(r, Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn pi_theta_matches_perp() {
        let p = kirchhoff_projector(0.3, -1.2).unwrap();
        let pi = weighted_kirchhoff_pi(0.3, -1.2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((pi[i][j] - p.lambda0_perp[i][j]).abs() < 1e-15);
            }
        }
    }
}
