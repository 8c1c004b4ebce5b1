//! Sweep configuration as read from JSON.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fit::WindowPolicy;
use super::SCHEMA_VERSION;
use crate::approx_residual::QuadratureSpec;
use crate::error::{Error, Result};
use crate::kernels::FunctionRecord;
use crate::profile::{ProfileKindTag, ProfileSpec};
use crate::sqrt_upper;
use crate::vertex_spectrum::DEFAULT_ZERO_TOLERANCE;

/// How δ follows ε along a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum DeltaRule {
    /// `δ = r·ε`, `0 < r ≤ 1`.
    FixedRatio { r: f64 },
    /// `δ = ε^a`, `a ≥ 1`.
    Power { a: f64 },
}

impl DeltaRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DeltaRule::FixedRatio { r } if r > 0.0 && r <= 1.0 => Ok(()),
            DeltaRule::Power { a } if a >= 1.0 && a.is_finite() => Ok(()),
            DeltaRule::FixedRatio { r } => Err(Error::InvalidInput(format!(
                "fixed-ratio rule needs 0 < r <= 1, got {r}"
            ))),
            DeltaRule::Power { a } => Err(Error::InvalidInput(format!(
                "power rule needs a >= 1, got {a}"
            ))),
        }
    }

    pub fn delta(&self, epsilon: f64) -> f64 {
        match *self {
            DeltaRule::FixedRatio { r } => r * epsilon,
            DeltaRule::Power { a } => epsilon.powf(a),
        }
    }

    /// Parses `fixed-ratio:R`, `fixed-ratio=R`, `power:A` or `power=A`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, value) = text
            .split_once([':', '='])
            .ok_or_else(|| Error::InvalidInput(format!("delta rule '{text}' needs a value")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad delta-rule value '{value}'")))?;
        let rule = match name.trim() {
            "fixed-ratio" | "fixed_ratio" => DeltaRule::FixedRatio { r: v },
            "power" => DeltaRule::Power { a: v },
            other => return Err(Error::InvalidInput(format!("unknown delta rule '{other}'"))),
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Quantity evaluated at each sweep point; the fit is taken on its column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DevQ,
    DevXi,
    QNorm,
    ResidualHnorm,
    BoundRatio,
    ComparisonNorm,
    DefectMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricFamily {
    Coupling,
    Residual,
    GraphLimit,
}

impl MetricFamily {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            MetricFamily::Coupling => &["dev_q", "dev_xi", "dev_xi_naive", "q_norm"],
            MetricFamily::Residual => &["residual_Hnorm", "xi_norm", "bound_ratio", "residual_l2_v"],
            MetricFamily::GraphLimit => {
                &["comparison_norm", "defect_value", "defect_derivative", "defect_max"]
            }
        }
    }
}

impl Metric {
    pub fn family(self) -> MetricFamily {
        match self {
            Metric::DevQ | Metric::DevXi | Metric::QNorm => MetricFamily::Coupling,
            Metric::ResidualHnorm | Metric::BoundRatio => MetricFamily::Residual,
            Metric::ComparisonNorm | Metric::DefectMax => MetricFamily::GraphLimit,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Metric::DevQ => "dev_q",
            Metric::DevXi => "dev_xi",
            Metric::QNorm => "q_norm",
            Metric::ResidualHnorm => "residual_Hnorm",
            Metric::BoundRatio => "bound_ratio",
            Metric::ComparisonNorm => "comparison_norm",
            Metric::DefectMax => "defect_max",
        }
    }
}

/// The swept variable.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepAxis {
    /// ε runs over `eps_grid`, δ follows `delta_rule`.
    #[default]
    Epsilon,
    /// ε fixed, δ runs over `delta_grid`.
    Delta { epsilon: f64, delta_grid: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Threshold on |λ| for the resonant classification.
    pub zero_tolerance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero_tolerance: DEFAULT_ZERO_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

/// A complete sweep description. Missing fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub metric: Metric,
    pub profile: ProfileSpec,
    /// `[Re z, Im z]`.
    pub z: [f64; 2],
    pub n: usize,
    pub eps_grid: Vec<f64>,
    pub delta_rule: DeltaRule,
    pub axis: SweepAxis,
    pub quadrature: QuadratureSpec,
    pub tolerances: Tolerances,
    pub forcing: [FunctionRecord; 2],
    pub window: WindowPolicy,
    pub output: OutputPaths,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            metric: Metric::DevQ,
            profile: ProfileSpec {
                kind: ProfileKindTag::Zero,
                amplitude: None,
                target_index: None,
            },
            z: [0.0, 1.0],
            n: 1,
            eps_grid: (3..=9).map(|k| 2f64.powi(-k)).collect(),
            delta_rule: DeltaRule::Power { a: 1.5 },
            axis: SweepAxis::Epsilon,
            quadrature: QuadratureSpec::default(),
            tolerances: Tolerances::default(),
            forcing: [
                FunctionRecord::exponential(1.0, 1.0),
                FunctionRecord::indicator(0.0, 1.0),
            ],
            window: WindowPolicy::default(),
            output: OutputPaths::default(),
            seed: 0,
        }
    }
}

fn check_decreasing(name: &str, grid: &[f64], upper: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput(format!("{name} is empty")));
    }
    if let Some(bad) = grid.iter().find(|&&v| !(v > 0.0 && v <= upper)) {
        return Err(Error::InvalidInput(format!(
            "{name} value {bad} outside (0, {upper}]"
        )));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput(format!("{name} must be strictly decreasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z[0], self.z[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("transverse mode n must be >= 1".into()));
        }
        let z = self.z();
        if !(z.re.is_finite() && z.im.is_finite() && sqrt_upper(z).im > 0.0) {
            return Err(Error::InvalidInput(format!("z = {z} must lie off [0, inf)")));
        }
        self.delta_rule.validate()?;
        match &self.axis {
            SweepAxis::Epsilon => check_decreasing("eps_grid", &self.eps_grid, 1.0)?,
            SweepAxis::Delta {
                epsilon,
                delta_grid,
            } => {
                if !(*epsilon > 0.0 && *epsilon <= 1.0) {
                    return Err(Error::InvalidInput(format!("epsilon {epsilon} outside (0, 1]")));
                }
                check_decreasing("delta_grid", delta_grid, *epsilon)?;
            }
        }
        self.quadrature.validate()?;
        for f in &self.forcing {
            f.validate()?;
        }
        if !(self.tolerances.zero_tolerance > 0.0) {
            return Err(Error::InvalidInput("zero_tolerance must be positive".into()));
        }
        self.window.validate()?;
        Ok(())
    }

    /// `(ε, δ)` for every point, ordered by the swept variable, largest first.
    pub fn points(&self) -> Vec<(f64, f64)> {
        match &self.axis {
            SweepAxis::Epsilon => self
                .eps_grid
                .iter()
                .map(|&e| (e, self.delta_rule.delta(e)))
                .collect(),
            SweepAxis::Delta {
                epsilon,
                delta_grid,
            } => delta_grid.iter().map(|&d| (*epsilon, d)).collect(),
        }
    }

    /// Name of the swept variable.
    pub fn variable(&self) -> &'static str {
        match self.axis {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Delta { .. } => "delta",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn empty_or_unsorted_grid_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.eps_grid.clear();
        assert!(cfg.validate().is_err());
        cfg.eps_grid = vec![0.1, 0.2];
        assert!(cfg.validate().is_err());
        cfg.eps_grid = vec![0.2, 0.2];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn delta_rule_parsing() {
        assert_eq!(DeltaRule::parse("power:1.5").unwrap(), DeltaRule::Power { a: 1.5 });
        assert_eq!(
            DeltaRule::parse("fixed-ratio=0.25").unwrap(),
            DeltaRule::FixedRatio { r: 0.25 }
        );
        assert!(DeltaRule::parse("power:0.5").is_err());
        assert!(DeltaRule::parse("fixed-ratio:2").is_err());
        assert!(DeltaRule::parse("linear:1").is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"metric":"residual_hnorm","eps_grid":[0.5,0.25]}"#)
            .unwrap();
        assert_eq!(cfg.metric, Metric::ResidualHnorm);
        assert_eq!(cfg.points()[1], (0.25, 0.125));
    }
}
