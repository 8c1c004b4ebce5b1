//! Neumann problem for the vertex Hamiltonian `h_v = −d²/ds² − γ²/4` on (−1, 1).
//!
//! Shooting solutions ζ (from s = −1) and η (from s = 1), their Wronskian,
//! eigenpairs and the generic/resonant classification.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{Trajectory, DEFAULT_RTOL};
use crate::profile::CurvatureProfile;
use crate::quadrature::GaussLegendre;

pub const DEFAULT_ZERO_TOLERANCE: f64 = 1e-9;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// ζ and η at a spectral parameter, with their Wronskian `ηζ′ − ζη′`.
#[derive(Clone, Debug)]
pub struct ShootingSolution {
    pub z: Complex64,
    pub zeta: Trajectory,
    pub eta: Trajectory,
    pub wronskian: Complex64,
}

impl ShootingSolution {
    /// `[ζ, ζ′]` at `s`.
    pub fn zeta_at(&self, s: f64) -> [Complex64; 2] {
        self.zeta.eval(s)
    }

    /// `[η, η′]` at `s`.
    pub fn eta_at(&self, s: f64) -> [Complex64; 2] {
        self.eta.eval(s)
    }

    /// Wronskian recomputed from the dense output at `s`.
    pub fn wronskian_at(&self, s: f64) -> Complex64 {
        let [z0, z1] = self.zeta.eval(s);
        let [e0, e1] = self.eta.eval(s);
        e0 * z1 - z0 * e1
    }

    /// Largest relative deviation of the Wronskian over the union of both meshes.
    pub fn wronskian_constancy(&self) -> f64 {
        let w = self.wronskian;
        let scale = w.norm().max(1e-300);
        self.zeta
            .mesh()
            .iter()
            .chain(self.eta.mesh())
            .map(|&s| (self.wronskian_at(s) - w).norm() / scale)
            .fold(0.0, f64::max)
    }
}

/// Integrates ζ(−1) = 1, ζ′(−1) = 0 and η(1) = 1, η′(1) = 0.
pub fn shoot(profile: &CurvatureProfile, z: Complex64) -> Result<ShootingSolution> {
    let zeta = Trajectory::integrate(profile, z, -1.0, [ONE, ZERO], 1.0, DEFAULT_RTOL)?;
    let eta = Trajectory::integrate(profile, z, 1.0, [ONE, ZERO], -1.0, DEFAULT_RTOL)?;
    // η(1) = 1 and η′(1) = 0 exactly, so the Wronskian is ζ′(1).
    let wronskian = zeta.eval(1.0)[1];
    Ok(ShootingSolution {
        z,
        zeta,
        eta,
        wronskian,
    })
}

fn zeta_only(profile: &CurvatureProfile, lambda: f64) -> Result<Trajectory> {
    Trajectory::integrate(
        profile,
        Complex64::new(lambda, 0.0),
        -1.0,
        [ONE, ZERO],
        1.0,
        DEFAULT_RTOL,
    )
}

/// Number of Neumann eigenvalues strictly below `lambda`, from the phase of ζ.
pub fn count_below(profile: &CurvatureProfile, lambda: f64) -> Result<usize> {
    let t = zeta_only(profile, lambda)?;
    let k = (t.phase() / std::f64::consts::PI).floor() + 1.0;
    Ok(k.max(0.0) as usize)
}

/// Free Neumann eigenvalue `((n−1)π/2)²`.
pub fn free_eigenvalue(n: usize) -> f64 {
    let k = (n as f64 - 1.0) * std::f64::consts::FRAC_PI_2;
    k * k
}

/// Brent's method on a bracketing interval `[a, b]` with `f(a)·f(b) ≤ 0`.
pub fn find_root<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootNotFound(format!(
            "no sign change on [{a}, {b}] (f = {fa:.3e}, {fb:.3e})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::RootNotFound("root iteration limit reached".into()))
}

/// Eigenvalue number `n` (1-based) of the vertex Hamiltonian.
///
/// The min-max bracket `[μₙ − sup γ²/4, μₙ]` is narrowed with the eigenvalue
/// counting function until it isolates λₙ; Brent's method on `ζ′(λ; 1)` then
/// polishes the root.
pub fn eigenvalue(profile: &CurvatureProfile, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("eigenvalue index is 1-based".into()));
    }
    let mu = free_eigenvalue(n);
    let sup = profile.sup_abs();
    let margin = 1e-6 * (1.0 + mu);
    let mut lo = mu - 0.25 * sup * sup - margin;
    let mut hi = mu + margin;
    let mut n_lo = count_below(profile, lo)?;
    let mut n_hi = count_below(profile, hi)?;
    let mut extensions = 0;
    while n_lo > n - 1 || n_hi < n {
        // The min-max bracket is rigorous; widen only to absorb phase-count
        // ambiguity right at the edges.
        if extensions == 2 {
            return Err(Error::RootNotFound(format!(
                "eigenvalue {n} not bracketed in [{lo}, {hi}]"
            )));
        }
        extensions += 1;
        let w = hi - lo;
        if n_lo > n - 1 {
            lo -= w;
            n_lo = count_below(profile, lo)?;
        }
        if n_hi < n {
            hi += w;
            n_hi = count_below(profile, hi)?;
        }
    }
    let mut iter = 0;
    while n_lo != n - 1 || n_hi != n {
        iter += 1;
        if iter > 200 {
            return Err(Error::RootNotFound(format!("could not isolate eigenvalue {n}")));
        }
        let mid = 0.5 * (lo + hi);
        let c = count_below(profile, mid)?;
        if c < n {
            lo = mid;
            n_lo = c;
        } else {
            hi = mid;
            n_hi = c;
        }
    }
    let w = |l: f64| -> Result<f64> { Ok(zeta_only(profile, l)?.eval(1.0)[1].re) };
    let (w_lo, w_hi) = (w(lo)?, w(hi)?);
    let xtol = 1e-13 * mu.max(1.0).max(lo.abs());
    find_root(w, lo, hi, w_lo, w_hi, xtol, 0.0)
}

/// A normalised real eigenfunction, stored as a scaled ζ trajectory.
#[derive(Clone, Debug)]
pub struct Eigenfunction {
    pub lambda: f64,
    trajectory: Trajectory,
    scale: f64,
}

impl Eigenfunction {
    fn new(profile: &CurvatureProfile, lambda: f64) -> Result<Self> {
        let trajectory = zeta_only(profile, lambda)?;
        let raw = Eigenfunction {
            lambda,
            trajectory,
            scale: 1.0,
        };
        let norm2 = raw.integrate_mesh(|s| raw.value(s).powi(2));
        let mut scale = 1.0 / norm2.sqrt();
        let sup = raw
            .trajectory
            .states()
            .iter()
            .map(|st| st[0].re.abs())
            .fold(0.0, f64::max);
        let thresh = 1e-8 * sup;
        let sign = if raw.value(-1.0).abs() > thresh {
            raw.value(-1.0).signum()
        } else {
            raw.trajectory
                .states()
                .iter()
                .map(|st| st[0].re)
                .find(|v| v.abs() > thresh)
                .map(f64::signum)
                .unwrap_or(1.0)
        };
        scale *= sign;
        Ok(Eigenfunction { scale, ..raw })
    }

    /// yₙ(s).
    pub fn value(&self, s: f64) -> f64 {
        self.scale * self.trajectory.eval(s)[0].re
    }

    /// yₙ′(s).
    pub fn derivative(&self, s: f64) -> f64 {
        self.scale * self.trajectory.eval(s)[1].re
    }

    pub fn mesh(&self) -> &[f64] {
        self.trajectory.mesh()
    }

    /// Composite 8-point Gauss–Legendre over the stored mesh intervals.
    pub fn integrate_mesh<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        integrate_over_mesh(self.trajectory.mesh(), &mut f)
    }
}

pub(crate) fn integrate_over_mesh<F: FnMut(f64) -> f64>(mesh: &[f64], f: &mut F) -> f64 {
    let rule = GaussLegendre::new(8);
    mesh.windows(2)
        .map(|w| rule.mapped(w[0], w[1]).map(|(x, wt)| wt * f(x)).sum::<f64>())
        .sum()
}

/// Generic (zero is not an eigenvalue) or resonant (λ_{n*} = 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum VertexCase {
    Generic,
    Resonant {
        n_star: usize,
        alpha1: f64,
        alpha2: f64,
    },
}

impl VertexCase {
    pub fn is_resonant(&self) -> bool {
        matches!(self, VertexCase::Resonant { .. })
    }
}

/// Eigenpairs of the vertex Hamiltonian and the derived classification.
#[derive(Clone, Debug)]
pub struct VertexSpectrum {
    pub profile: CurvatureProfile,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Eigenfunction>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub case: VertexCase,
    pub zero_tolerance: f64,
}

impl VertexSpectrum {
    /// The resonant eigenfunction y*, if any.
    pub fn resonant_eigenfunction(&self) -> Option<&Eigenfunction> {
        match self.case {
            VertexCase::Resonant { n_star, .. } => self.eigenfunctions.get(n_star - 1),
            VertexCase::Generic => None,
        }
    }
}

/// The lowest `count` eigenpairs, with the case decided by `zero_tolerance`.
pub fn eigenvalues(
    profile: &CurvatureProfile,
    count: usize,
    zero_tolerance: f64,
) -> Result<VertexSpectrum> {
    if count == 0 {
        return Err(Error::InvalidInput("eigenvalue count must be >= 1".into()));
    }
    if !(zero_tolerance >= 0.0) {
        return Err(Error::InvalidInput("zero_tolerance must be >= 0".into()));
    }
    let pairs: Vec<(f64, Eigenfunction)> = (1..=count)
        .into_par_iter()
        .map(|n| {
            let lam = eigenvalue(profile, n)?;
            Ok((lam, Eigenfunction::new(profile, lam)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let (eigenvalues, eigenfunctions): (Vec<f64>, Vec<Eigenfunction>) = pairs.into_iter().unzip();
    let mut spectrum = VertexSpectrum {
        profile: *profile,
        eigenvalues,
        eigenfunctions,
        alpha1: 0.0,
        alpha2: 0.0,
        case: VertexCase::Generic,
        zero_tolerance,
    };
    spectrum.case = classify_case(&spectrum);
    if let VertexCase::Resonant { alpha1, alpha2, .. } = spectrum.case {
        spectrum.alpha1 = alpha1;
        spectrum.alpha2 = alpha2;
    }
    Ok(spectrum)
}

/// Spectrum covering every eigenvalue below 1, enough to decide the case.
pub fn classify_profile(profile: &CurvatureProfile, zero_tolerance: f64) -> Result<VertexSpectrum> {
    let shift = 0.25 * profile.sup_abs().powi(2);
    let mut count = 1;
    while free_eigenvalue(count) - shift <= 1.0 {
        count += 1;
    }
    eigenvalues(profile, count.max(2), zero_tolerance)
}

/// Resonant iff some `|λₙ| ≤ zero_tolerance`; the smallest such |λₙ| wins.
pub fn classify_case(spectrum: &VertexSpectrum) -> VertexCase {
    let best = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.abs() <= spectrum.zero_tolerance)
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap());
    match best {
        Some((i, _)) => {
            let y = &spectrum.eigenfunctions[i];
            VertexCase::Resonant {
                n_star: i + 1,
                alpha1: y.value(-1.0),
                alpha2: y.value(1.0),
            }
        }
        None => VertexCase::Generic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_profile_closed_form() {
        let z = Complex64::new(PI * PI / 16.0, 0.0);
        let sh = shoot(&CurvatureProfile::Zero, z).unwrap();
        assert!(sh.zeta_at(1.0)[0].norm() < 1e-12);
        assert!((sh.wronskian - Complex64::new(-PI / 4.0, 0.0)).norm() < 1e-12);
        let sh0 = shoot(&CurvatureProfile::Zero, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(sh0.wronskian, Complex64::new(0.0, 0.0));
        assert_eq!(sh0.zeta_at(0.3)[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn counting_function_on_free_problem() {
        let p = CurvatureProfile::Zero;
        assert_eq!(count_below(&p, -1.0).unwrap(), 0);
        assert_eq!(count_below(&p, 0.1).unwrap(), 1);
        assert_eq!(count_below(&p, 3.0).unwrap(), 2);
        assert_eq!(count_below(&p, 10.0).unwrap(), 3);
        assert_eq!(count_below(&p, 23.0).unwrap(), 4);
    }

    #[test]
    fn brent_finds_cubic_root() {
        let r = find_root(|x| Ok(x * x * x - 2.0), 0.0, 2.0, -2.0, 6.0, 1e-15, 0.0).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        assert!(find_root(Ok, 1.0, 2.0, 1.0, 2.0, 1e-12, 0.0).is_err());
    }

    #[test]
    fn zero_profile_spectrum() {
        let sp = eigenvalues(&CurvatureProfile::Zero, 4, 1e-9).unwrap();
        for (n, l) in sp.eigenvalues.iter().enumerate() {
            assert!((l - free_eigenvalue(n + 1)).abs() < 1e-9, "n={n} l={l}");
        }
        match sp.case {
            VertexCase::Resonant {
                n_star,
                alpha1,
                alpha2,
            } => {
                assert_eq!(n_star, 1);
                assert!((alpha1 - 0.5f64.sqrt()).abs() < 1e-9);
                assert!((alpha2 - 0.5f64.sqrt()).abs() < 1e-9);
            }
            _ => panic!("zero profile must be resonant"),
        }
    }

    #[test]
    fn strict_threshold_semantics() {
        let mut sp = eigenvalues(&CurvatureProfile::Zero, 2, 1e-9).unwrap();
        sp.eigenvalues[0] = 2e-9;
        assert_eq!(classify_case(&sp), VertexCase::Generic);
        sp.eigenvalues[0] = 1e-9;
        assert!(classify_case(&sp).is_resonant());
    }
}
