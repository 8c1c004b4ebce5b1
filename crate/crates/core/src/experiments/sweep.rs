//! Sweep evaluation on a worker pool.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, MetricFamily};
use super::fit::{fit_slope, SlopeFit};
use super::{io, version_stamp, SCHEMA_VERSION, THREADS_ENV};
use crate::approx_residual::assemble_with_spectrum;
use crate::coupling::{
    asymptotic_deviation, norm2_vec, resonant_expansion, solve_coupling_with_kernel,
    ResonantExpansion,
};
use crate::error::{Error, Result};
use crate::graph_limit::{boundary_limits, limit_comparison, BoundaryDefects, GraphResolvent};
use crate::kernels::{HalfLineResolvent, VertexKernel};
use crate::vertex_spectrum::{classify_profile, VertexSpectrum};

/// One sweep point; `values` follow [`SweepResult::columns`] and are NaN when
/// the point failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnFit {
    pub column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<SlopeFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub version: String,
    pub config: ExperimentConfig,
    /// `"epsilon"` or `"delta"`.
    pub variable: String,
    pub columns: Vec<String>,
    pub primary: String,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<ColumnFit>,
}

impl SweepResult {
    fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `(swept variable, value)` pairs of a column.
    pub fn series(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let j = self.column_index(name)?;
        let by_delta = self.variable == "delta";
        Some(
            self.rows
                .iter()
                .map(|r| (if by_delta { r.delta } else { r.epsilon }, r.values[j]))
                .collect(),
        )
    }

    pub fn fit(&self, name: &str) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.column == name)?.fit.as_ref()
    }

    pub fn primary_fit(&self) -> Option<&SlopeFit> {
        self.fit(&self.primary)
    }

    pub fn failed_points(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Worker count from `WGL_THREADS`, if set to a positive integer.
pub fn pool_size() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = pool_size() {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Solver(format!("cannot start worker pool: {e}")))
}

struct Context {
    spectrum: Arc<VertexSpectrum>,
    expansion: Option<ResonantExpansion>,
}

fn evaluate_point(cfg: &ExperimentConfig, ctx: &Context, eps: f64, delta: f64) -> Result<Vec<f64>> {
    let z = cfg.z();
    let [f1, f2] = cfg.forcing.clone();
    match cfg.metric.family() {
        MetricFamily::Coupling => {
            let half = HalfLineResolvent::new(z)?;
            let p = [half.boundary_derivative(&f1)?, half.boundary_derivative(&f2)?];
            let kernel = VertexKernel::new(&ctx.spectrum.profile, z * (eps * eps))?;
            let coeffs = solve_coupling_with_kernel(&kernel, z, eps, p, ctx.spectrum.case)?;
            let dev = asymptotic_deviation(&coeffs, ctx.expansion.as_ref())?;
            Ok(vec![dev.dev_q, dev.dev_xi, dev.dev_xi_naive, norm2_vec(&coeffs.q_vec())])
        }
        MetricFamily::Residual => {
            let sol = assemble_with_spectrum(ctx.spectrum.clone(), cfg.n, z, eps, delta, f1, f2)?;
            let r = sol.residual_norms(&cfg.quadrature)?;
            Ok(vec![r.residual_hnorm, r.xi_norm, r.bound_ratio, r.residual_l2_v])
        }
        MetricFamily::GraphLimit => {
            let sol = assemble_with_spectrum(ctx.spectrum.clone(), cfg.n, z, eps, delta, f1, f2)?;
            let res = GraphResolvent::for_case(&ctx.spectrum.case, z)?;
            let cmp = limit_comparison(&sol, &res)?;
            let defects = boundary_limits(&sol);
            let (value, derivative) = match defects {
                BoundaryDefects::Dirichlet { value, derivative } => {
                    (value[0].max(value[1]), derivative[0].max(derivative[1]))
                }
                BoundaryDefects::Kirchhoff { value, flux } => (value, flux),
            };
            Ok(vec![cmp, value, derivative, defects.max()])
        }
    }
}

/// Evaluates every point and fits each column; nothing is written.
///
/// Point failures are recorded in their row and excluded from the fits.
pub fn evaluate_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let profile = cfg.profile.resolve()?;
    let spectrum = Arc::new(classify_profile(&profile, cfg.tolerances.zero_tolerance)?);
    let family = cfg.metric.family();
    let expansion = match (family, spectrum.case.is_resonant()) {
        (MetricFamily::Coupling, true) => Some(resonant_expansion(&spectrum)?),
        _ => None,
    };
    let ctx = Context {
        spectrum,
        expansion,
    };
    let columns: Vec<String> = family.columns().iter().map(|c| c.to_string()).collect();
    let points = cfg.points();
    let pool = thread_pool()?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(eps, delta)| match evaluate_point(cfg, &ctx, eps, delta) {
                Ok(values) => SweepRow {
                    epsilon: eps,
                    delta,
                    values,
                    error: None,
                },
                Err(e) => SweepRow {
                    epsilon: eps,
                    delta,
                    values: vec![f64::NAN; columns.len()],
                    error: Some(e.to_string()),
                },
            })
            .collect()
    });
    let by_delta = cfg.variable() == "delta";
    let key = |r: &SweepRow| if by_delta { r.delta } else { r.epsilon };
    rows.sort_by(|a, b| key(b).total_cmp(&key(a)));
    let mut result = SweepResult {
        schema_version: SCHEMA_VERSION,
        version: version_stamp(),
        config: cfg.clone(),
        variable: cfg.variable().to_string(),
        primary: cfg.metric.column().to_string(),
        columns: columns.clone(),
        rows,
        fits: Vec::new(),
    };
    result.fits = columns
        .iter()
        .map(|c| {
            let series = result.series(c).unwrap_or_default();
            match fit_slope(&series, cfg.window) {
                Ok(fit) => ColumnFit {
                    column: c.clone(),
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => ColumnFit {
                    column: c.clone(),
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(result)
}

/// [`evaluate_sweep`] followed by writing the configured CSV and JSON files.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let result = evaluate_sweep(cfg)?;
    if let Some(path) = &cfg.output.csv {
        io::write_csv(&result, std::fs::File::create(path)?)?;
    }
    if let Some(path) = &cfg.output.json {
        io::write_json(&result, std::fs::File::create(path)?)?;
    }
    Ok(result)
}
