//! `wgl`: sweeps, spectra, kernels and oracle comparisons for the thin
//! waveguide resolvent construction.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 on numerical failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use wgl_core::experiments::{
    oracle_compare, run_sweep, write_csv, write_json, write_table, DeltaRule, ExperimentConfig,
    Metric, OracleConfig, SweepAxis, SweepResult,
};
use wgl_core::kernels::VertexKernel;
use wgl_core::profile::{ProfileKindTag, ProfileSpec};
use wgl_core::vertex_spectrum::{eigenvalues, VertexCase};
use wgl_core::Error;

#[derive(Parser, Debug)]
#[command(name = "wgl", version, about = "Thin waveguide to quantum graph resolvent experiments")]
struct Cli {
    /// JSON configuration file; command-line flags override its fields.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileKind {
    Zero,
    Bump,
    TunedBump,
}

#[derive(Args, Debug, Default)]
struct ProfileArgs {
    #[arg(long, value_enum)]
    profile: Option<ProfileKind>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Eigenvalue index driven to zero by the tuned bump.
    #[arg(long)]
    target_index: Option<usize>,
}

impl ProfileArgs {
    fn apply(&self, spec: &mut ProfileSpec) {
        if let Some(kind) = self.profile {
            spec.kind = match kind {
                ProfileKind::Zero => ProfileKindTag::Zero,
                ProfileKind::Bump => ProfileKindTag::Bump,
                ProfileKind::TunedBump => ProfileKindTag::TunedBump,
            };
            if matches!(kind, ProfileKind::Bump) && spec.amplitude.is_none() {
                spec.amplitude = Some(0.5);
            }
        }
        if self.amplitude.is_some() {
            spec.amplitude = self.amplitude;
        }
        if self.target_index.is_some() {
            spec.target_index = self.target_index;
        }
    }
}

#[derive(Args, Debug, Default)]
struct SweepArgs {
    /// Spectral parameter as `RE,IM`.
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    /// Transverse mode index.
    #[arg(long)]
    n: Option<usize>,
    /// Strictly decreasing ε values, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps_grid: Option<Vec<f64>>,
    /// `fixed-ratio R` or `power A` (also `fixed-ratio:R`, `power=A`).
    #[arg(long, num_args = 1..=2)]
    delta_rule: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output; stdout when neither --csv nor --json is given.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    Auto,
    Generic,
    Resonant,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CouplingMetric {
    DevQ,
    DevXi,
    QNorm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ResidualMetric {
    ResidualHnorm,
    BoundRatio,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphMetric {
    ComparisonNorm,
    DefectMax,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Neumann eigenvalues and endpoint values of the vertex Hamiltonian.
    Spectrum {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, default_value_t = 6)]
        count: usize,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Vertex kernel values on a square grid of (s, s').
    Kernel {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long, default_value_t = 21)]
        points: usize,
        /// Evaluate through the eigenfunction series with this many terms.
        #[arg(long)]
        series_terms: Option<usize>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Coupling coefficients and their small-ε deviations along an ε sweep.
    Coupling {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_enum, default_value_t = CaseArg::Auto)]
        case: CaseArg,
        #[arg(long, value_enum)]
        metric: Option<CouplingMetric>,
    },
    /// Residual of the approximate resolvent along an ε or δ sweep.
    ResidualSweep {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_enum)]
        metric: Option<ResidualMetric>,
        /// Hold ε fixed and sweep δ over --delta-grid instead.
        #[arg(long, requires = "delta_grid")]
        fixed_epsilon: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        delta_grid: Option<Vec<f64>>,
    },
    /// Distance to the graph limit and vertex boundary defects.
    GraphLimit {
        #[command(flatten)]
        profile: ProfileArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_enum)]
        metric: Option<GraphMetric>,
    },
    /// Finite-difference waveguide resolvent against the approximation and the limit.
    OracleCompare {
        #[command(flatten)]
        profile: ProfileArgs,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        h_u: Option<f64>,
        #[arg(long)]
        h_s: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Runs the sweep described entirely by --config.
    Run {
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_validation() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure {
        code: 3,
        message: format!("i/o error: {e}"),
    }
}

fn parse_z(text: &str) -> Result<[f64; 2], Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re, im] => match (re.parse::<f64>(), im.parse::<f64>()) {
            (Ok(re), Ok(im)) => Ok([re, im]),
            _ => Err(invalid(format!("cannot parse z = '{text}'"))),
        },
        _ => Err(invalid(format!("z must be given as RE,IM, got '{text}'"))),
    }
}

fn parse_delta_rule(words: &[String]) -> Result<DeltaRule, Failure> {
    Ok(DeltaRule::parse(&words.join(":"))?)
}

fn read_config_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))
}

fn load_experiment(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => Ok(serde_json::from_str(&read_config_text(p)?)
            .map_err(|e| invalid(format!("bad config {}: {e}", p.display())))?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply_sweep(cfg: &mut ExperimentConfig, args: &SweepArgs) -> Result<(), Failure> {
    if let Some(z) = &args.z {
        cfg.z = parse_z(z)?;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(grid) = &args.eps_grid {
        cfg.eps_grid = grid.clone();
    }
    if let Some(rule) = &args.delta_rule {
        cfg.delta_rule = parse_delta_rule(rule)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.csv.is_some() {
        cfg.output.csv = args.csv.clone();
    }
    if args.json.is_some() {
        cfg.output.json = args.json.clone();
    }
    Ok(())
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(File::create(p).map_err(io_failure)?)),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn finish_sweep(cfg: ExperimentConfig) -> Result<(), Failure> {
    let result: SweepResult = run_sweep(&cfg)?;
    if cfg.output.csv.is_none() && cfg.output.json.is_none() {
        write_csv(&result, io::stdout().lock())?;
    }
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: point epsilon = {}, delta = {} failed: {}",
            row.epsilon,
            row.delta,
            row.error.as_deref().unwrap_or_default()
        );
    }
    if !result.rows.is_empty() && result.failed_points() == result.rows.len() {
        return Err(Failure {
            code: 3,
            message: "every sweep point failed".into(),
        });
    }
    Ok(())
}

fn sweep_config(
    cli_config: Option<&Path>,
    profile: &ProfileArgs,
    sweep: &SweepArgs,
) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_experiment(cli_config)?;
    profile.apply(&mut cfg.profile);
    apply_sweep(&mut cfg, sweep)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Spectrum {
            profile,
            count,
            out,
        } => {
            let mut cfg = load_experiment(config)?;
            profile.apply(&mut cfg.profile);
            let p = cfg.profile.resolve()?;
            let spec = eigenvalues(&p, count, cfg.tolerances.zero_tolerance)?;
            let rows: Vec<Vec<String>> = spec
                .eigenvalues
                .iter()
                .zip(&spec.eigenfunctions)
                .enumerate()
                .map(|(i, (lam, y))| {
                    vec![
                        (i + 1).to_string(),
                        lam.to_string(),
                        y.value(-1.0).to_string(),
                        y.value(1.0).to_string(),
                    ]
                })
                .collect();
            let meta = serde_json::json!({ "profile": p, "count": count, "case": spec.case });
            write_table(
                open_out(out.as_deref())?,
                &meta,
                &["n", "lambda", "y_at_minus1", "y_at_plus1"],
                &rows,
            )?;
        }
        Command::Kernel {
            profile,
            z,
            points,
            series_terms,
            out,
        } => {
            let mut cfg = load_experiment(config)?;
            profile.apply(&mut cfg.profile);
            if let Some(z) = z {
                cfg.z = parse_z(&z)?;
            }
            if points < 2 {
                return Err(invalid("kernel grid needs at least 2 points"));
            }
            let p = cfg.profile.resolve()?;
            let zc = Complex64::new(cfg.z[0], cfg.z[1]);
            let kernel = match series_terms {
                Some(terms) => {
                    let spec = eigenvalues(&p, terms, cfg.tolerances.zero_tolerance)?;
                    VertexKernel::with_series(Arc::new(spec), zc, terms)?
                }
                None => VertexKernel::new(&p, zc)?,
            };
            let node = |i: usize| -1.0 + 2.0 * i as f64 / (points - 1) as f64;
            let mut rows = Vec::with_capacity(points * points);
            for i in 0..points {
                for j in 0..points {
                    let (s, sp) = (node(i), node(j));
                    let v = kernel.value(s, sp)?;
                    rows.push(vec![s.to_string(), sp.to_string(), v.re.to_string(), v.im.to_string()]);
                }
            }
            let meta = serde_json::json!({
                "profile": p, "z": cfg.z, "points": points, "series_terms": series_terms,
            });
            write_table(open_out(out.as_deref())?, &meta, &["s", "s_prime", "re", "im"], &rows)?;
        }
        Command::Coupling {
            profile,
            sweep,
            case,
            metric,
        } => {
            let mut cfg = sweep_config(config, &profile, &sweep)?;
            cfg.metric = match metric {
                Some(CouplingMetric::DevQ) => Metric::DevQ,
                Some(CouplingMetric::DevXi) => Metric::DevXi,
                Some(CouplingMetric::QNorm) => Metric::QNorm,
                None if matches!(cfg.metric, Metric::DevQ | Metric::DevXi | Metric::QNorm) => cfg.metric,
                None => Metric::DevQ,
            };
            if !matches!(case, CaseArg::Auto) {
                cfg.validate()?;
                let p = cfg.profile.resolve()?;
                let spec = wgl_core::vertex_spectrum::classify_profile(&p, cfg.tolerances.zero_tolerance)?;
                let resonant = matches!(spec.case, VertexCase::Resonant { .. });
                if resonant != matches!(case, CaseArg::Resonant) {
                    return Err(Error::CaseMismatch(format!(
                        "--case {case:?} requested but the profile is {}",
                        if resonant { "resonant" } else { "generic" }
                    ))
                    .into());
                }
            }
            finish_sweep(cfg)?;
        }
        Command::ResidualSweep {
            profile,
            sweep,
            metric,
            fixed_epsilon,
            delta_grid,
        } => {
            let mut cfg = sweep_config(config, &profile, &sweep)?;
            cfg.metric = match metric {
                Some(ResidualMetric::ResidualHnorm) => Metric::ResidualHnorm,
                Some(ResidualMetric::BoundRatio) => Metric::BoundRatio,
                None if matches!(cfg.metric, Metric::ResidualHnorm | Metric::BoundRatio) => cfg.metric,
                None => Metric::ResidualHnorm,
            };
            if let (Some(epsilon), Some(delta_grid)) = (fixed_epsilon, delta_grid) {
                cfg.axis = SweepAxis::Delta {
                    epsilon,
                    delta_grid,
                };
            }
            finish_sweep(cfg)?;
        }
        Command::GraphLimit {
            profile,
            sweep,
            metric,
        } => {
            let mut cfg = sweep_config(config, &profile, &sweep)?;
            cfg.metric = match metric {
                Some(GraphMetric::ComparisonNorm) => Metric::ComparisonNorm,
                Some(GraphMetric::DefectMax) => Metric::DefectMax,
                None if matches!(cfg.metric, Metric::ComparisonNorm | Metric::DefectMax) => cfg.metric,
                None => Metric::ComparisonNorm,
            };
            finish_sweep(cfg)?;
        }
        Command::OracleCompare {
            profile,
            z,
            n,
            eps,
            delta,
            h_u,
            h_s,
            seed,
            out,
        } => {
            let mut cfg: OracleConfig = match config {
                Some(p) => serde_json::from_str(&read_config_text(p)?)
                    .map_err(|e| invalid(format!("bad config {}: {e}", p.display())))?,
                None => OracleConfig::default(),
            };
            profile.apply(&mut cfg.profile);
            if let Some(z) = z {
                cfg.z = parse_z(&z)?;
            }
            if let Some(n) = n {
                cfg.n = n;
            }
            if let Some(e) = eps {
                cfg.epsilon = e;
            }
            if delta.is_some() {
                cfg.delta = delta;
            }
            if let Some(h) = h_u {
                cfg.h_u = h;
            }
            if let Some(h) = h_s {
                cfg.h_s = h;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = oracle_compare(&cfg)?;
            write_json(&report, open_out(out.as_deref())?)?;
        }
        Command::Run { csv, json } => {
            let path = config.ok_or_else(|| invalid("run needs --config FILE"))?;
            let mut cfg = load_experiment(Some(path))?;
            if csv.is_some() {
                cfg.output.csv = csv;
            }
            if json.is_some() {
                cfg.output.json = json;
            }
            finish_sweep(cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
