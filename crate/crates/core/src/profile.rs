//! Curvature profiles γ(s) of the vertex region and the geometric quantities
//! derived from them.
//!
//! The bump family is `a·exp(1 − 1/(1 − s²))` on `|s| < 1`, extended by zero.
//! Every derivative is evaluated in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vertex_spectrum;

/// Largest amplitude accepted for the plain bump family.
pub const AMPLITUDE_CAP: f64 = 0.999;

/// Amplitude search range used when tuning a bump to a resonance.
pub const TUNING_AMPLITUDE_MAX: f64 = 32.0;

/// A smooth curvature profile supported inside (−1, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurvatureProfile {
    Zero,
    Bump { amplitude: f64 },
    /// A bump whose amplitude was root-found so that eigenvalue number
    /// `target_index` of the vertex Hamiltonian vanishes.
    TunedBump { amplitude: f64, target_index: usize },
}

impl CurvatureProfile {
    /// Bump profile with peak value `amplitude`; rejects `|amplitude| > 0.999`.
    pub fn bump(amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude.abs() > AMPLITUDE_CAP {
            return Err(Error::InvalidInput(format!(
                "bump amplitude {amplitude} outside [-{AMPLITUDE_CAP}, {AMPLITUDE_CAP}]"
            )));
        }
        Ok(CurvatureProfile::Bump { amplitude })
    }

    /// Checks the invariants of a profile that may have come from deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            CurvatureProfile::Zero => Ok(()),
            CurvatureProfile::Bump { amplitude } => Self::bump(amplitude).map(|_| ()),
            CurvatureProfile::TunedBump {
                amplitude,
                target_index,
            } => {
                if target_index < 2 {
                    return Err(Error::InvalidInput(
                        "tuned bump needs target_index >= 2".into(),
                    ));
                }
                if !(amplitude.is_finite() && amplitude > 0.0 && amplitude <= TUNING_AMPLITUDE_MAX)
                {
                    return Err(Error::InvalidInput(format!(
                        "tuned bump amplitude {amplitude} outside (0, {TUNING_AMPLITUDE_MAX}]"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            CurvatureProfile::Zero => 0.0,
            CurvatureProfile::Bump { amplitude } => amplitude,
            CurvatureProfile::TunedBump { amplitude, .. } => amplitude,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude() == 0.0
    }

    /// `sup |γ|`, attained at s = 0.
    pub fn sup_abs(&self) -> f64 {
        self.amplitude().abs()
    }

    /// γ, γ′ or γ″ at `s`; identically zero for `|s| ≥ 1`.
    pub fn gamma(&self, s: f64, order: u8) -> f64 {
        let [g0, g1, g2] = self.gamma_all(s);
        match order {
            0 => g0,
            1 => g1,
            _ => g2,
        }
    }

    /// `[γ, γ′, γ″]` at `s`.
    pub fn gamma_all(&self, s: f64) -> [f64; 3] {
        let a = self.amplitude();
        if a == 0.0 || s.abs() >= 1.0 {
            return [0.0; 3];
        }
        let t = 1.0 - s * s;
        let inv_t = 1.0 / t;
        // Past this point exp(1 - 1/t) underflows while the polynomial factors
        // overflow; the true values are far below any representable scale.
        if inv_t > 700.0 {
            return [0.0; 3];
        }
        let g = a * (1.0 - inv_t).exp();
        let phi1 = -2.0 * s * inv_t * inv_t;
        let phi2 = -2.0 * inv_t * inv_t - 8.0 * s * s * inv_t * inv_t * inv_t;
        [g, g * phi1, g * (phi1 * phi1 + phi2)]
    }

    /// Metric factor, its inverse, `∂_s(1/g)` and the effective potential at (s, u).
    pub fn eval_geometry(&self, s: f64, u: f64, ratio: f64) -> Result<GeometryAt> {
        check_ratio(ratio)?;
        Ok(self.geometry_unchecked(s, u, ratio))
    }

    pub(crate) fn geometry_unchecked(&self, s: f64, u: f64, ratio: f64) -> GeometryAt {
        let [g0, g1, g2] = self.gamma_all(s);
        let a = 1.0 + u * ratio * g0;
        let a_s = u * ratio * g1;
        let a_ss = u * ratio * g2;
        let g = a * a;
        let inv_g = 1.0 / g;
        let ds_inv_g = -2.0 * a_s / (a * a * a);
        let w = -0.25 * g0 * g0 / (a * a) + 0.5 * a_ss / (a * a * a)
            - 1.25 * a_s * a_s / (a * a * a * a);
        GeometryAt {
            s,
            u,
            ratio,
            g,
            inv_g,
            ds_inv_g,
            w,
        }
    }

    /// Largest defect of `W̃ + (ε/δ)² W̃̃ − W` over `grid`.
    ///
    /// `W̃` and `W̃̃` are built from the derivatives of `g^{±1/4}` in closed form.
    /// The first-order coefficient `∂_s(1/g)` multiplies `∂_s` in the operator and
    /// does not enter this zeroth-order balance.
    pub fn check_potential_identity(&self, ratio: f64, grid: &[(f64, f64)]) -> Result<f64> {
        check_ratio(ratio)?;
        if grid.is_empty() {
            return Err(Error::InvalidInput("empty sample grid".into()));
        }
        let mut worst: f64 = 0.0;
        for &(s, u) in grid {
            let w = self.geometry_unchecked(s, u, ratio).w;
            let (wt, wtt) = self.split_potentials(s, u, ratio);
            let defect = (wt + wtt / (ratio * ratio) - w).abs();
            worst = worst.max(defect);
        }
        Ok(worst)
    }

    /// `(W̃, W̃̃)` at (s, u), with `g = a²`, `a = 1 + u·ratio·γ(s)`.
    pub fn split_potentials(&self, s: f64, u: f64, ratio: f64) -> (f64, f64) {
        let [g0, g1, g2] = self.gamma_all(s);
        let a = 1.0 + u * ratio * g0;
        // d/ds a^p = p a^{p-1} a', d²/ds² a^p = p(p-1) a^{p-2} a'² + p a^{p-1} a''.
        let pow_d = |p: f64, d1: f64, d2: f64| {
            (
                a.powf(p),
                p * a.powf(p - 1.0) * d1,
                p * (p - 1.0) * a.powf(p - 2.0) * d1 * d1 + p * a.powf(p - 1.0) * d2,
            )
        };
        // s-direction: a_s = u ρ γ′, a_ss = u ρ γ″; g^{-1/4} = a^{-1/2}, g^{-3/4} = a^{-3/2}.
        let (a_s, a_ss) = (u * ratio * g1, u * ratio * g2);
        let (_, b_s, b_ss) = pow_d(-0.5, a_s, a_ss);
        let (c0, c_s, _) = pow_d(-1.5, a_s, a_ss);
        let w_tilde = -(c_s * b_s + c0 * b_ss) + b_s * b_s / a;
        // u-direction: a_u = ρ γ, a_uu = 0; g^{1/4} = a^{1/2}.
        let a_u = ratio * g0;
        let (_, b_u, b_uu) = pow_d(-0.5, a_u, 0.0);
        let (d0, d_u, _) = pow_d(0.5, a_u, 0.0);
        let w_tilde2 = -(d_u * b_u + d0 * b_uu) + a * b_u * b_u;
        (w_tilde, w_tilde2)
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "ratio delta/epsilon = {ratio} outside (0, 1]"
        )));
    }
    Ok(())
}

/// Geometry of the vertex region at a single point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryAt {
    pub s: f64,
    pub u: f64,
    pub ratio: f64,
    pub g: f64,
    pub inv_g: f64,
    pub ds_inv_g: f64,
    #[serde(rename = "W")]
    pub w: f64,
}

/// Profile description as it appears in configuration files.
///
/// A `tuned_bump` without an amplitude is tuned on resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub kind: ProfileKindTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_index: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKindTag {
    Zero,
    Bump,
    TunedBump,
}

impl ProfileSpec {
    pub fn resolve(&self) -> Result<CurvatureProfile> {
        match self.kind {
            ProfileKindTag::Zero => Ok(CurvatureProfile::Zero),
            ProfileKindTag::Bump => {
                let a = self.amplitude.ok_or_else(|| {
                    Error::InvalidInput("bump profile needs an amplitude".into())
                })?;
                CurvatureProfile::bump(a)
            }
            ProfileKindTag::TunedBump => {
                let k = self.target_index.unwrap_or(2);
                match self.amplitude {
                    Some(amplitude) => {
                        let p = CurvatureProfile::TunedBump {
                            amplitude,
                            target_index: k,
                        };
                        p.validate()?;
                        Ok(p)
                    }
                    None => tune_to_resonance(&CurvatureProfile::Bump { amplitude: 0.5 }, k),
                }
            }
        }
    }
}

impl From<CurvatureProfile> for ProfileSpec {
    fn from(p: CurvatureProfile) -> Self {
        match p {
            CurvatureProfile::Zero => ProfileSpec {
                kind: ProfileKindTag::Zero,
                amplitude: None,
                target_index: None,
            },
            CurvatureProfile::Bump { amplitude } => ProfileSpec {
                kind: ProfileKindTag::Bump,
                amplitude: Some(amplitude),
                target_index: None,
            },
            CurvatureProfile::TunedBump {
                amplitude,
                target_index,
            } => ProfileSpec {
                kind: ProfileKindTag::TunedBump,
                amplitude: Some(amplitude),
                target_index: Some(target_index),
            },
        }
    }
}

/// Root-finds the bump amplitude for which eigenvalue number `target_index`
/// of the vertex Hamiltonian is zero.
///
/// λₙ decreases monotonically with the amplitude. For n ≥ 2 the crossing lies
/// beyond the plain-bump cap, so the tuned family is searched on
/// `(0, TUNING_AMPLITUDE_MAX]`.
pub fn tune_to_resonance(base: &CurvatureProfile, target_index: usize) -> Result<CurvatureProfile> {
    tune_to_eigenvalue(base, target_index, 0.0)
}

/// Like [`tune_to_resonance`] but drives λ_{target_index} to `target`.
pub fn tune_to_eigenvalue(
    base: &CurvatureProfile,
    target_index: usize,
    target: f64,
) -> Result<CurvatureProfile> {
    if matches!(base, CurvatureProfile::Zero) {
        return Err(Error::InvalidInput(
            "zero profile family has no amplitude to tune".into(),
        ));
    }
    if target_index < 2 {
        return Err(Error::InvalidInput(
            "target_index must be >= 2 (the lowest eigenvalue is negative for any nonzero bump)"
                .into(),
        ));
    }
    let lam = |a: f64| -> Result<f64> {
        let p = CurvatureProfile::TunedBump {
            amplitude: a,
            target_index,
        };
        Ok(vertex_spectrum::eigenvalue(&p, target_index)? - target)
    };
    let mut lo = 0.0;
    let mut f_lo = lam(1e-12)?;
    let mut hi = 0.5;
    let mut f_hi = lam(hi)?;
    while f_hi > 0.0 {
        if hi >= TUNING_AMPLITUDE_MAX {
            return Err(Error::RootNotFound(format!(
                "no amplitude in (0, {TUNING_AMPLITUDE_MAX}] brings eigenvalue {target_index} to {target}"
            )));
        }
        lo = hi;
        f_lo = f_hi;
        hi = (2.0 * hi).min(TUNING_AMPLITUDE_MAX);
        f_hi = lam(hi)?;
    }
    if f_lo < 0.0 {
        return Err(Error::RootNotFound(format!(
            "eigenvalue {target_index} already below {target} at vanishing amplitude"
        )));
    }
    let a = crate::vertex_spectrum::find_root(lam, lo, hi, f_lo, f_hi, 1e-14, 1e-12)?;
    Ok(CurvatureProfile::TunedBump {
        amplitude: a,
        target_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_peak_and_support() {
        let p = CurvatureProfile::bump(0.5).unwrap();
        assert_eq!(p.gamma(0.0, 0), 0.5);
        for order in 0..3 {
            assert_eq!(p.gamma(1.0, order), 0.0);
            assert_eq!(p.gamma(-1.0, order), 0.0);
            assert!(p.gamma(0.999, order).abs() < 1e-100);
        }
        assert_eq!(CurvatureProfile::Zero.gamma(0.3, 0), 0.0);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let p = CurvatureProfile::bump(0.5).unwrap();
        let h = 1e-5;
        for &s in &[-0.8, -0.3, 0.0, 0.2, 0.5, 0.9] {
            let d1 = (p.gamma(s + h, 0) - p.gamma(s - h, 0)) / (2.0 * h);
            let d2 = (p.gamma(s + h, 1) - p.gamma(s - h, 1)) / (2.0 * h);
            assert!((d1 - p.gamma(s, 1)).abs() < 1e-8, "s={s}");
            assert!((d2 - p.gamma(s, 2)).abs() < 1e-6, "s={s}");
        }
    }

    #[test]
    fn amplitude_cap_enforced() {
        assert!(CurvatureProfile::bump(0.999).is_ok());
        assert!(CurvatureProfile::bump(1.0).is_err());
        assert!(CurvatureProfile::bump(f64::NAN).is_err());
    }

    #[test]
    fn geometry_trivial_cases() {
        let g = CurvatureProfile::Zero.eval_geometry(0.4, 0.3, 0.5).unwrap();
        assert_eq!((g.g, g.ds_inv_g, g.w), (1.0, 0.0, 0.0));
        let g = CurvatureProfile::bump(0.5)
            .unwrap()
            .eval_geometry(0.0, 0.0, 0.3)
            .unwrap();
        assert_eq!(g.g, 1.0);
        assert!((g.w + 0.0625).abs() < 1e-15);
        assert!(CurvatureProfile::Zero.eval_geometry(0.0, 0.0, 1.5).is_err());
        assert!(CurvatureProfile::Zero.eval_geometry(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_profile_identity_is_exact() {
        let grid = [(0.1, 0.2), (-0.5, 0.9)];
        assert_eq!(
            CurvatureProfile::Zero
                .check_potential_identity(0.5, &grid)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn zero_family_cannot_be_tuned() {
        assert!(tune_to_resonance(&CurvatureProfile::Zero, 2).is_err());
        assert!(tune_to_resonance(&CurvatureProfile::Bump { amplitude: 0.5 }, 1).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"bump","amplitude":0.5}"#;
        let spec: ProfileSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.resolve().unwrap(), CurvatureProfile::Bump { amplitude: 0.5 });
        let back = ProfileSpec::from(CurvatureProfile::Bump { amplitude: 0.5 });
        assert_eq!(back, spec);
        let bad: ProfileSpec = serde_json::from_str(r#"{"kind":"bump","amplitude":2.0}"#).unwrap();
        assert!(bad.resolve().is_err());
    }
}
