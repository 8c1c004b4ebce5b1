//! End-to-end comparison of the finite-difference waveguide resolvent with
//! the approximate resolvent and with the graph limit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{version_stamp, SCHEMA_VERSION};
use crate::approx_residual::{assemble, ApproxSolution};
use crate::error::{Error, Result};
use crate::fd_oracle::waveguide::source_norm;
use crate::fd_oracle::{fd_resolvent, unitary_map_check, DiscreteField, NodalField, UnitaryCheck, WaveguideGrid};
use crate::graph_limit::{GraphResolvent, GraphSolution};
use crate::kernels::FunctionRecord;
use crate::profile::{ProfileKindTag, ProfileSpec};
use crate::vertex_spectrum::VertexCase;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub schema_version: u32,
    pub profile: ProfileSpec,
    pub z: [f64; 2],
    pub n: usize,
    pub epsilon: f64,
    /// Defaults to `ε³`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub h_u: f64,
    /// Target spacing in arc length; snapped so the vertex holds whole cells.
    pub h_s: f64,
    pub forcing: [FunctionRecord; 2],
    /// Relative tolerance on the graph-limit mismatch.
    pub limit_tolerance: f64,
    /// Accepted range of the refinement factor.
    pub refinement_window: [f64; 2],
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            schema_version: SCHEMA_VERSION,
            profile: ProfileSpec {
                kind: ProfileKindTag::Zero,
                amplitude: None,
                target_index: None,
            },
            z: [0.0, 1.0],
            n: 1,
            epsilon: 0.3,
            delta: None,
            h_u: 1.0 / 32.0,
            h_s: 1.0 / 64.0,
            forcing: [
                FunctionRecord::exponential(1.0, 1.0),
                FunctionRecord::indicator(0.0, 1.0),
            ],
            limit_tolerance: 0.1,
            refinement_window: [3.0, 5.0],
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.epsilon.powi(3))
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.z[0], self.z[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!(
                "schema_version {} not supported",
                self.schema_version
            )));
        }
        if self.z[1] == 0.0 {
            return Err(Error::InvalidInput("the oracle needs Im z != 0".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("transverse mode n must be >= 1".into()));
        }
        if !(self.limit_tolerance > 0.0 && self.refinement_window[0] < self.refinement_window[1]) {
            return Err(Error::InvalidInput("bad oracle tolerances".into()));
        }
        for f in &self.forcing {
            f.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleTolerances {
    pub limit: f64,
    pub refinement: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleNorms {
    pub forcing: f64,
    pub discrete: f64,
    pub discrete_fine: f64,
    /// `‖Ξ^h‖/|Im z|`.
    pub resolvent_bound: f64,
}

/// Edge L² mismatches relative to `‖(f₁, f₂)‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleMismatch {
    pub approx: f64,
    pub approx_fine: f64,
    pub limit: f64,
    pub limit_fine: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema_version: u32,
    pub version: String,
    pub config: OracleConfig,
    pub case: VertexCase,
    pub grid: WaveguideGrid,
    pub grid_fine: WaveguideGrid,
    pub tolerances: OracleTolerances,
    pub norms: OracleNorms,
    pub mismatch: OracleMismatch,
    /// Coarse over fine mismatch against the approximate resolvent.
    pub refinement_factor: f64,
    pub unitary: UnitaryCheck,
    pub limit_pass: bool,
    pub refinement_pass: bool,
}

/// Trapezoid L² distance between the edge projections and `reference`.
fn edge_mismatch<F>(field: &DiscreteField, reference: F) -> Result<f64>
where
    F: Fn(usize, f64) -> Result<Complex64>,
{
    let g = &field.grid;
    let mut sum = 0.0;
    for edge in 1..=2 {
        for i in 0..=g.n_edge {
            let w = if i == 0 || i == g.n_edge { 0.5 } else { 1.0 } * g.h;
            let d = field.edge_projection(edge, i) - reference(edge, g.edge_s(i))?;
            sum += w * d.norm_sqr();
        }
    }
    Ok(sum.sqrt())
}

fn random_field(grid: &WaveguideGrid, seed: u64) -> NodalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<Complex64> = (0..4)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    NodalField::from_fn(grid, move |_, s, u| {
        coef.iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * u).sin())
            .sum::<Complex64>()
            * (-0.5 * s * s).exp()
    })
}

fn mismatches(
    field: &DiscreteField,
    sol: &ApproxSolution,
    limit: &GraphSolution,
    fnorm: f64,
) -> Result<(f64, f64)> {
    let a = edge_mismatch(field, |e, s| sol.edge_value(e, s))?;
    let l = edge_mismatch(field, |e, s| limit.value(e, s))?;
    Ok((a / fnorm, l / fnorm))
}

/// Solves on the configured grid and on the grid with halved spacings.
pub fn oracle_compare(cfg: &OracleConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let profile = cfg.profile.resolve()?;
    let z = cfg.z();
    let delta = cfg.delta();
    let [f1, f2] = cfg.forcing.clone();
    let sol = assemble(&profile, cfg.n, z, cfg.epsilon, delta, f1.clone(), f2.clone())?;
    let limit = GraphResolvent::for_case(&sol.spectrum.case, z)?.solve(&f1, &f2)?;
    let fnorm = sol.forcing_norm();
    if fnorm == 0.0 {
        return Err(Error::InvalidInput("forcing is identically zero".into()));
    }
    let grid = WaveguideGrid::new(cfg.epsilon, delta, cfg.h_s, cfg.h_u, z)?;
    let fine = grid.refined();
    let (coarse_field, fine_field) = rayon::join(
        || fd_resolvent(&grid, &profile, cfg.n, z, &cfg.forcing),
        || fd_resolvent(&fine, &profile, cfg.n, z, &cfg.forcing),
    );
    let (coarse_field, fine_field) = (coarse_field?, fine_field?);
    let (approx, lim) = mismatches(&coarse_field, &sol, &limit, fnorm)?;
    let (approx_fine, lim_fine) = mismatches(&fine_field, &sol, &limit, fnorm)?;
    let refinement_factor = approx / approx_fine;
    let unitary = unitary_map_check(&grid, &profile, &random_field(&grid, cfg.seed));
    let [lo, hi] = cfg.refinement_window;
    Ok(OracleReport {
        schema_version: SCHEMA_VERSION,
        version: version_stamp(),
        config: cfg.clone(),
        case: sol.spectrum.case,
        norms: OracleNorms {
            forcing: fnorm,
            discrete: coarse_field.norm(),
            discrete_fine: fine_field.norm(),
            resolvent_bound: source_norm(&grid, &cfg.forcing) / z.im.abs(),
        },
        mismatch: OracleMismatch {
            approx,
            approx_fine,
            limit: lim,
            limit_fine: lim_fine,
        },
        refinement_factor,
        unitary,
        limit_pass: lim <= cfg.limit_tolerance,
        refinement_pass: (lo..=hi).contains(&refinement_factor),
        tolerances: OracleTolerances {
            limit: cfg.limit_tolerance,
            refinement: cfg.refinement_window,
        },
        grid,
        grid_fine: fine,
    })
}
