//! Resolvent kernels: the vertex Green's function, the free Neumann kernel and
//! the half-line Dirichlet resolvent.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::CurvatureProfile;
use crate::quadrature::integrate_adaptive;
use crate::sqrt_upper;
use crate::vertex_spectrum::{free_eigenvalue, shoot, ShootingSolution, VertexSpectrum};

/// Below this Wronskian magnitude the vertex kernel is not evaluated.
pub const WRONSKIAN_GUARD: f64 = 1e-13;

/// Default number of eigenpairs in series mode.
pub const DEFAULT_SERIES_TERMS: usize = 200;

const QUAD_RTOL: f64 = 1e-10;
const QUAD_ATOL: f64 = 1e-15;
/// Decay level used to cut the support of closed-form records.
const TAIL_LEVEL: f64 = 1e-17;

/// Which endpoint of the vertex interval a kernel derivative refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    Minus,
    Plus,
}

impl Endpoint {
    pub fn s(self) -> f64 {
        match self {
            Endpoint::Minus => -1.0,
            Endpoint::Plus => 1.0,
        }
    }
}

/// A real source function on the half-line (0, ∞).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionRecord {
    Zero,
    /// `amplitude·e^{−rate·s}`.
    Exponential { amplitude: f64, rate: f64 },
    /// `amplitude·exp(−(s − center)²/(2 width²))`.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `amplitude` on `[start, end]`, zero elsewhere.
    Indicator { start: f64, end: f64, amplitude: f64 },
    /// Piecewise-linear interpolation of samples; zero beyond the last point.
    Samples { points: Vec<f64>, values: Vec<f64> },
}

impl FunctionRecord {
    pub fn exponential(amplitude: f64, rate: f64) -> Self {
        FunctionRecord::Exponential { amplitude, rate }
    }

    pub fn indicator(start: f64, end: f64) -> Self {
        FunctionRecord::Indicator {
            start,
            end,
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        match self {
            FunctionRecord::Zero => Ok(()),
            FunctionRecord::Exponential { amplitude, rate } => {
                if !(amplitude.is_finite() && *rate > 0.0 && rate.is_finite()) {
                    return bad("exponential record needs finite amplitude and rate > 0");
                }
                Ok(())
            }
            FunctionRecord::Gaussian {
                amplitude,
                center,
                width,
            } => {
                if !(amplitude.is_finite() && center.is_finite() && *width > 0.0) {
                    return bad("gaussian record needs finite amplitude, center and width > 0");
                }
                Ok(())
            }
            FunctionRecord::Indicator {
                start,
                end,
                amplitude,
            } => {
                if !(*start >= 0.0 && end > start && end.is_finite() && amplitude.is_finite()) {
                    return bad("indicator record needs 0 <= start < end < inf");
                }
                Ok(())
            }
            FunctionRecord::Samples { points, values } => {
                if points.len() < 2 || points.len() != values.len() {
                    return bad("samples need at least two (point, value) pairs");
                }
                if points[0] < 0.0 || points.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("sample points must be nonnegative and strictly increasing");
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("sample values must be finite");
                }
                Ok(())
            }
        }
    }

    /// `f(s)`; zero for negative `s`.
    pub fn eval(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self {
            FunctionRecord::Zero => 0.0,
            FunctionRecord::Exponential { amplitude, rate } => amplitude * (-rate * s).exp(),
            FunctionRecord::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let x = (s - center) / width;
                amplitude * (-0.5 * x * x).exp()
            }
            FunctionRecord::Indicator {
                start,
                end,
                amplitude,
            } => {
                if s >= *start && s <= *end {
                    *amplitude
                } else {
                    0.0
                }
            }
            FunctionRecord::Samples { points, values } => {
                let last = points.len() - 1;
                if s < points[0] || s > points[last] {
                    return 0.0;
                }
                let i = match points.binary_search_by(|p| p.partial_cmp(&s).unwrap()) {
                    Ok(i) => return values[i],
                    Err(i) => i,
                };
                let t = (s - points[i - 1]) / (points[i] - points[i - 1]);
                values[i - 1] * (1.0 - t) + values[i] * t
            }
        }
    }

    /// Point beyond which `f` is treated as zero.
    pub fn cutoff(&self) -> f64 {
        match self {
            FunctionRecord::Zero => 0.0,
            FunctionRecord::Exponential { rate, .. } => -TAIL_LEVEL.ln() / rate,
            FunctionRecord::Gaussian { center, width, .. } => {
                (center + width * (-2.0 * TAIL_LEVEL.ln()).sqrt()).max(0.0)
            }
            FunctionRecord::Indicator { end, .. } => *end,
            FunctionRecord::Samples { points, .. } => *points.last().unwrap(),
        }
    }

    /// Points where `f` or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            FunctionRecord::Indicator { start, end, .. } => vec![*start, *end],
            FunctionRecord::Samples { points, .. } => points.clone(),
            FunctionRecord::Gaussian { center, .. } => vec![*center],
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FunctionRecord::Zero => true,
            FunctionRecord::Exponential { amplitude, .. }
            | FunctionRecord::Gaussian { amplitude, .. }
            | FunctionRecord::Indicator { amplitude, .. } => *amplitude == 0.0,
            FunctionRecord::Samples { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    /// The record multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self.clone() {
            FunctionRecord::Zero => FunctionRecord::Zero,
            FunctionRecord::Exponential { amplitude, rate } => FunctionRecord::Exponential {
                amplitude: c * amplitude,
                rate,
            },
            FunctionRecord::Gaussian {
                amplitude,
                center,
                width,
            } => FunctionRecord::Gaussian {
                amplitude: c * amplitude,
                center,
                width,
            },
            FunctionRecord::Indicator {
                start,
                end,
                amplitude,
            } => FunctionRecord::Indicator {
                start,
                end,
                amplitude: c * amplitude,
            },
            FunctionRecord::Samples { points, values } => FunctionRecord::Samples {
                points,
                values: values.into_iter().map(|v| c * v).collect(),
            },
        }
    }

    /// `‖f‖_{L²(0,∞)}`.
    pub fn l2_norm(&self) -> f64 {
        match self {
            FunctionRecord::Zero => 0.0,
            FunctionRecord::Exponential { amplitude, rate } => amplitude.abs() / (2.0 * rate).sqrt(),
            FunctionRecord::Indicator {
                start,
                end,
                amplitude,
            } => amplitude.abs() * (end - start).sqrt(),
            _ => {
                let mut br = self.breakpoints();
                br.retain(|b| *b > 0.0);
                integrate_adaptive(
                    |s| Complex64::new(self.eval(s).powi(2), 0.0),
                    0.0,
                    self.cutoff(),
                    &br,
                    1e-12,
                    1e-300,
                )
                .map(|v| v.re.sqrt())
                .unwrap_or(f64::NAN)
            }
        }
    }
}

/// Dirichlet resolvent of `−d²/ds²` on the half-line at `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfLineResolvent {
    pub z: Complex64,
    pub sqrt_z: Complex64,
}

impl HalfLineResolvent {
    /// Requires `Im √z > 0` on the upper branch, i.e. `z ∉ [0, ∞)`.
    pub fn new(z: Complex64) -> Result<Self> {
        let sqrt_z = sqrt_upper(z);
        if !(sqrt_z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::InvalidInput(format!(
                "z = {z} lies on the half-line spectrum [0, inf)"
            )));
        }
        Ok(HalfLineResolvent { z, sqrt_z })
    }

    fn i_k(&self) -> Complex64 {
        Complex64::i() * self.sqrt_z
    }

    /// `r₀(z; s, t)`.
    pub fn kernel(&self, s: f64, t: f64) -> Complex64 {
        let ik = self.i_k();
        ((ik * (s + t)).exp() - (ik * (s - t).abs()).exp()) / (2.0 * ik)
    }

    /// `∂_s r₀(z; s, t)`.
    pub fn kernel_ds(&self, s: f64, t: f64) -> Complex64 {
        let ik = self.i_k();
        let sgn = if s >= t { 1.0 } else { -1.0 };
        0.5 * ((ik * (s + t)).exp() - sgn * (ik * (s - t).abs()).exp())
    }

    fn integrate<F: Fn(f64) -> Complex64>(&self, f: &FunctionRecord, s: Option<f64>, k: F) -> Result<Complex64> {
        if f.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let mut br = f.breakpoints();
        if let Some(s) = s {
            br.push(s);
        }
        integrate_adaptive(
            |t| k(t) * f.eval(t),
            0.0,
            f.cutoff(),
            &br,
            QUAD_RTOL,
            QUAD_ATOL,
        )
    }

    /// `(r₀(z) f)(s)`, zero at `s = 0` by construction.
    pub fn apply(&self, f: &FunctionRecord, s: f64) -> Result<Complex64> {
        if s <= 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.integrate(f, Some(s), |t| self.kernel(s, t))
    }

    /// `(r₀(z) f)′(s)`.
    pub fn apply_derivative(&self, f: &FunctionRecord, s: f64) -> Result<Complex64> {
        let s = s.max(0.0);
        self.integrate(f, Some(s), |t| self.kernel_ds(s, t))
    }

    /// `p = (r₀(z) f)′(0) = ∫₀^∞ e^{i√z t} f(t) dt`.
    pub fn boundary_derivative(&self, f: &FunctionRecord) -> Result<Complex64> {
        let ik = self.i_k();
        self.integrate(f, None, |t| (ik * t).exp())
    }
}

/// Closed-form kernel of the free Neumann problem on (−1, 1).
pub fn neumann_free_kernel(z: Complex64, s: f64, sp: f64) -> Result<Complex64> {
    let k = z.sqrt();
    let sin2k = (2.0 * k).sin();
    let denom = k * sin2k;
    if denom.norm() < WRONSKIAN_GUARD {
        return Err(Error::NearEigenvalue {
            z,
            wronskian: denom.norm(),
        });
    }
    let (a, b) = if s <= sp { (s, sp) } else { (sp, s) };
    Ok(-(k * (a + 1.0)).cos() * (k * (b - 1.0)).cos() / denom)
}

/// `∂_s` of [`neumann_free_kernel`].
pub fn neumann_free_kernel_ds(z: Complex64, s: f64, sp: f64) -> Result<Complex64> {
    let k = z.sqrt();
    let sin2k = (2.0 * k).sin();
    if (k * sin2k).norm() < WRONSKIAN_GUARD {
        return Err(Error::NearEigenvalue {
            z,
            wronskian: (k * sin2k).norm(),
        });
    }
    if s <= sp {
        Ok((k * (s + 1.0)).sin() * (k * (sp - 1.0)).cos() / sin2k)
    } else {
        Ok((k * (sp + 1.0)).cos() * (k * (s - 1.0)).sin() / sin2k)
    }
}

fn free_eigenfunction(n: usize, s: f64) -> f64 {
    if n == 1 {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        ((n as f64 - 1.0) * std::f64::consts::FRAC_PI_2 * (s + 1.0)).cos()
    }
}

/// Evaluation mode of the vertex kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    Wronskian,
    Series { n_terms: usize },
}

/// Green's function of `h_v − z` with Neumann ends.
#[derive(Clone, Debug)]
pub struct VertexKernel {
    pub profile: CurvatureProfile,
    pub z: Complex64,
    pub shooting: Arc<ShootingSolution>,
    pub mode: KernelMode,
    spectrum: Option<Arc<VertexSpectrum>>,
}

impl VertexKernel {
    /// Wronskian-mode kernel.
    pub fn new(profile: &CurvatureProfile, z: Complex64) -> Result<Self> {
        let shooting = shoot(profile, z)?;
        if shooting.wronskian.norm() < WRONSKIAN_GUARD {
            return Err(Error::NearEigenvalue {
                z,
                wronskian: shooting.wronskian.norm(),
            });
        }
        Ok(VertexKernel {
            profile: *profile,
            z,
            shooting: Arc::new(shooting),
            mode: KernelMode::Wronskian,
            spectrum: None,
        })
    }

    /// Series-mode kernel: the first `n_terms` eigenpairs of `spectrum` plus the
    /// free-Neumann remainder `r⁽⁰⁾ − Σ_{n≤N} y⁰ₙ y⁰ₙ/(μₙ − z)`.
    pub fn with_series(spectrum: Arc<VertexSpectrum>, z: Complex64, n_terms: usize) -> Result<Self> {
        if n_terms == 0 || spectrum.eigenvalues.len() < n_terms {
            return Err(Error::InvalidInput(format!(
                "series needs {n_terms} eigenpairs, spectrum has {}",
                spectrum.eigenvalues.len()
            )));
        }
        let mut k = VertexKernel::new(&spectrum.profile, z)?;
        k.mode = KernelMode::Series { n_terms };
        k.spectrum = Some(spectrum);
        Ok(k)
    }

    pub fn wronskian(&self) -> Complex64 {
        self.shooting.wronskian
    }

    /// `r_v(z; s, s′)`.
    pub fn value(&self, s: f64, sp: f64) -> Result<Complex64> {
        match self.mode {
            KernelMode::Wronskian => {
                let (a, b) = if s <= sp { (s, sp) } else { (sp, s) };
                Ok(self.shooting.zeta_at(a)[0] * self.shooting.eta_at(b)[0] / self.wronskian())
            }
            KernelMode::Series { n_terms } => {
                let sp_ = self.spectrum.as_ref().expect("series mode has a spectrum");
                let mut sum = neumann_free_kernel(self.z, s, sp)?;
                for n in 0..n_terms {
                    let y = &sp_.eigenfunctions[n];
                    sum += y.value(s) * y.value(sp) / (sp_.eigenvalues[n] - self.z);
                    sum -= free_eigenfunction(n + 1, s) * free_eigenfunction(n + 1, sp)
                        / (free_eigenvalue(n + 1) - self.z);
                }
                Ok(sum)
            }
        }
    }

    /// `d/ds r_v(z; s, endpoint)` from the shooting derivatives.
    pub fn s_derivative(&self, s: f64, endpoint: Endpoint) -> Complex64 {
        let w = self.wronskian();
        match endpoint {
            // s ≤ 1: ζ′(s) η(1) / W with η(1) = 1.
            Endpoint::Plus => self.shooting.zeta_at(s)[1] / w,
            // s ≥ −1: ζ(−1) η′(s) / W with ζ(−1) = 1.
            Endpoint::Minus => self.shooting.eta_at(s)[1] / w,
        }
    }

    /// `r_v(z; s, endpoint)` together with its s-derivative.
    pub fn endpoint_column(&self, s: f64, endpoint: Endpoint) -> [Complex64; 2] {
        let w = self.wronskian();
        match endpoint {
            Endpoint::Plus => {
                let [v, d] = self.shooting.zeta_at(s);
                [v / w, d / w]
            }
            Endpoint::Minus => {
                let [v, d] = self.shooting.eta_at(s);
                [v / w, d / w]
            }
        }
    }
}
