//! Acceptance criteria 1–7, one line each. Exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgl_core::approx_residual::{assemble, QuadratureSpec};
use wgl_core::coupling::{kirchhoff_projector, weighted_kirchhoff_pi};
use wgl_core::experiments::{
    evaluate_sweep, oracle_compare, DeltaRule, ExperimentConfig, Metric, OracleConfig, SweepAxis,
};
use wgl_core::fd_oracle::fd_vertex_eigen;
use wgl_core::kernels::{neumann_free_kernel, FunctionRecord, VertexKernel};
use wgl_core::profile::{tune_to_resonance, CurvatureProfile, ProfileKindTag, ProfileSpec};
use wgl_core::vertex_spectrum::{classify_profile, eigenvalue, eigenvalues, shoot, DEFAULT_ZERO_TOLERANCE};
use wgl_core::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bump(a: f64) -> CurvatureProfile {
    CurvatureProfile::bump(a).unwrap()
}

fn spec(kind: ProfileKindTag, amplitude: Option<f64>, target_index: Option<usize>) -> ProfileSpec {
    ProfileSpec { kind, amplitude, target_index }
}

fn grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

fn exp_decay() -> FunctionRecord {
    FunctionRecord::exponential(1.0, 1.0)
}

fn criterion_1() -> Outcome {
    let sp = eigenvalues(&CurvatureProfile::Zero, 4, DEFAULT_ZERO_TOLERANCE).unwrap();
    let exact = [0.0, PI * PI / 4.0, PI * PI, 9.0 * PI * PI / 4.0];
    let eig_err = sp.eigenvalues.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let z = c(0.0, 1.0);
    let k = VertexKernel::new(&CurvatureProfile::Zero, z).unwrap();
    let pts: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
    let mut kern_err = 0.0f64;
    for &s in &pts {
        for &t in &pts {
            let d = k.value(s, t).unwrap() - neumann_free_kernel(z, s, t).unwrap();
            kern_err = kern_err.max(d.norm());
        }
    }
    let cls = classify_profile(&CurvatureProfile::Zero, DEFAULT_ZERO_TOLERANCE).unwrap();
    let (a1, a2) = (cls.alpha1, cls.alpha2);
    let l0 = kirchhoff_projector(a1, a2).unwrap().lambda0;
    let l0_err = l0.iter().flatten().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    let sol = assemble(&CurvatureProfile::Zero, 1, z, 0.1, 0.01, exp_decay(), FunctionRecord::indicator(0.0, 1.0)).unwrap();
    let res = sol.residual_norms(&QuadratureSpec::default()).unwrap().residual_hnorm;
    let pass = eig_err <= 1e-9 && kern_err <= 1e-8 && l0_err <= 1e-15 && res <= 1e-10 && cls.case.is_resonant();
    outcome(
        pass,
        format!("eigenvalue error {eig_err:.2e} (<= 1e-9), kernel error {kern_err:.2e} (<= 1e-8), Lambda0 error {l0_err:.2e}, residual {res:.2e} (<= 1e-10)"),
    )
}

fn criterion_2() -> Outcome {
    let z = c(1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tuned = tune_to_resonance(&bump(0.5), 2).unwrap();
    let mut worst = Vec::new();
    for profile in [bump(0.5), tuned] {
        let spectrum = Arc::new(eigenvalues(&profile, 200, DEFAULT_ZERO_TOLERANCE).unwrap());
        let resonant = spectrum.case.is_resonant();
        let series = VertexKernel::with_series(spectrum, z, 200).unwrap();
        let direct = VertexKernel::new(&profile, z).unwrap();
        let mut m = 0.0f64;
        for _ in 0..50 {
            let (s, t) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            m = m.max((series.value(s, t).unwrap() - direct.value(s, t).unwrap()).norm());
        }
        worst.push((resonant, m));
    }
    let pass = !worst[0].0 && worst[1].0 && worst.iter().all(|w| w.1 <= 1e-6);
    outcome(
        pass,
        format!("generic max diff {:.2e}, resonant max diff {:.2e} (<= 1e-6, 50 random pairs each)", worst[0].1, worst[1].1),
    )
}

fn criterion_3() -> Outcome {
    let zero = ExperimentConfig { eps_grid: grid(6, 14), ..ExperimentConfig::default() };
    let r = evaluate_sweep(&zero).unwrap();
    let dq = r.fit("dev_q").unwrap().slope;
    let dx = r.fit("dev_xi").unwrap().slope;
    let generic = ExperimentConfig {
        metric: Metric::QNorm,
        profile: spec(ProfileKindTag::Bump, Some(0.5), None),
        eps_grid: grid(6, 14),
        ..ExperimentConfig::default()
    };
    let g = evaluate_sweep(&generic).unwrap();
    let qn = g.fit("q_norm").unwrap().slope;
    let pass = (dq - 1.0).abs() <= 0.15 && (dx - 2.0).abs() <= 0.2 && (qn - 1.0).abs() <= 0.15;
    outcome(
        pass,
        format!("resonant dev_q slope {dq:.3} (1 +- 0.15), dev_xi slope {dx:.3} (2 +- 0.2), generic |q| slope {qn:.3} (1 +- 0.15)"),
    )
}

fn criterion_4() -> Outcome {
    let bump_spec = spec(ProfileKindTag::Bump, Some(0.5), None);
    let by_delta = ExperimentConfig {
        metric: Metric::ResidualHnorm,
        profile: bump_spec.clone(),
        axis: SweepAxis::Delta { epsilon: 0.2, delta_grid: (1..=8).map(|k| 0.2 * 2f64.powi(-k)).collect() },
        ..ExperimentConfig::default()
    };
    let sd = evaluate_sweep(&by_delta).unwrap().primary_fit().unwrap().slope;
    let ratio = ExperimentConfig {
        metric: Metric::ResidualHnorm,
        profile: bump_spec,
        eps_grid: grid(3, 10),
        delta_rule: DeltaRule::FixedRatio { r: 0.1 },
        ..ExperimentConfig::default()
    };
    let se = evaluate_sweep(&ratio).unwrap().primary_fit().unwrap().slope;
    let resonant = ExperimentConfig {
        metric: Metric::BoundRatio,
        profile: spec(ProfileKindTag::TunedBump, Some(0.5), Some(2)),
        eps_grid: grid(3, 10),
        delta_rule: DeltaRule::Power { a: 2.5 },
        ..ExperimentConfig::default()
    };
    let rr = evaluate_sweep(&resonant).unwrap();
    let br: Vec<f64> = rr.series("bound_ratio").unwrap().into_iter().map(|p| p.1).collect();
    let (lo, hi) = br.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = hi / lo;
    let pass = (sd - 1.0).abs() <= 0.1 && (se + 0.5).abs() <= 0.15 && spread <= 3.0 && rr.failed_points() == 0;
    outcome(
        pass,
        format!("delta slope {sd:.3} (1 +- 0.1), fixed-ratio epsilon slope {se:.3} (-0.5 +- 0.15), resonant bound ratio max/min {spread:.2} (<= 3)"),
    )
}

fn criterion_5() -> Outcome {
    let zero = oracle_compare(&OracleConfig::default()).unwrap();
    let bumped = oracle_compare(&OracleConfig {
        profile: spec(ProfileKindTag::Bump, Some(0.5), None),
        ..OracleConfig::default()
    })
    .unwrap();
    let pass = zero.limit_pass && zero.refinement_pass && bumped.limit_pass && !bumped.case.is_resonant();
    outcome(
        pass,
        format!(
            "resonant limit mismatch {:.3} (<= 0.1), refinement factor {:.2} ([3, 5]), generic limit mismatch {:.3} (<= 0.1)",
            zero.mismatch.limit, zero.refinement_factor, bumped.mismatch.limit
        ),
    )
}

fn criterion_6() -> Outcome {
    let pts: Vec<(f64, f64)> = (0..20)
        .flat_map(|i| (0..20).map(move |j| (-1.0 + (i as f64 + 0.5) / 10.0, (j as f64 + 0.5) / 20.0)))
        .collect();
    let pot = [(0.5, 0.3), (0.9, 1.0), (0.999, 0.5)]
        .iter()
        .map(|&(a, r)| bump(a).check_potential_identity(r, &pts).unwrap())
        .fold(0.0, f64::max);
    let wr = [bump(0.5), bump(0.9), CurvatureProfile::Zero]
        .iter()
        .map(|p| shoot(p, c(1.0, 0.5)).unwrap().wronskian_constancy())
        .fold(0.0, f64::max);
    let mut matching = 0.0f64;
    for (a, eps, delta) in [(0.5, 0.1, 0.01), (0.9, 0.3, 0.027), (0.0, 0.5, 0.5)] {
        let sol = assemble(&bump(a), 1, c(0.3, 1.0), eps, delta, exp_decay(), FunctionRecord::indicator(0.0, 1.0)).unwrap();
        let [m, dm] = sol.vertex_profile(-1.0);
        let [p, dp] = sol.vertex_profile(1.0);
        matching = matching
            .max((sol.edge_value(1, 0.0).unwrap() - m).norm())
            .max((sol.edge_value(2, 0.0).unwrap() - p).norm())
            .max((sol.edge_derivative(1, 0.0).unwrap() + dm / eps).norm())
            .max((sol.edge_derivative(2, 0.0).unwrap() - dp / eps).norm());
    }
    let tuned = classify_profile(&tune_to_resonance(&bump(0.5), 2).unwrap(), DEFAULT_ZERO_TOLERANCE).unwrap();
    let mut algebra = 0.0f64;
    let mut pith = 0.0f64;
    for (a1, a2) in [(FRAC_1_SQRT_2, FRAC_1_SQRT_2), (1.0, 0.0), (0.3, -1.7), (tuned.alpha1, tuned.alpha2)] {
        let pr = kirchhoff_projector(a1, a2).unwrap();
        let l = pr.lambda0_mat();
        algebra = algebra
            .max((l * l - l).abs().max())
            .max((l - l.transpose()).abs().max())
            .max((l.trace() - 1.0).abs());
        let pi = weighted_kirchhoff_pi(a1, a2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                pith = pith.max((pi[i][j] - pr.lambda0_perp[i][j]).abs());
            }
        }
    }
    let pass = pot <= 1e-8 && wr <= 1e-8 && matching <= 1e-8 && algebra <= 1e-12 && pith <= 1e-12;
    outcome(
        pass,
        format!("potential {pot:.2e}, Wronskian {wr:.2e}, matching {matching:.2e} (<= 1e-8 each), projector {algebra:.2e}, PiTh {pith:.2e} (<= 1e-12 each)"),
    )
}

fn criterion_7() -> Outcome {
    let tuned = tune_to_resonance(&bump(0.5), 2).unwrap();
    let mut worst = 0.0f64;
    for p in [CurvatureProfile::Zero, bump(0.5), bump(0.9)] {
        let fd = fd_vertex_eigen(&p, 800, 6).unwrap();
        let sh = eigenvalues(&p, 6, DEFAULT_ZERO_TOLERANCE).unwrap();
        for (a, b) in fd.iter().zip(&sh.eigenvalues) {
            worst = worst.max((a.lambda - b).abs());
        }
    }
    let res = eigenvalue(&tuned, 2).unwrap().abs();
    let pass = worst <= 1e-6 && res <= 1e-10;
    outcome(pass, format!("max shooting-FD gap {worst:.2e} (<= 1e-6), tuned |lambda_2| {res:.2e} (<= 1e-10)"))
}

fn main() {
    let criteria: [(fn() -> Outcome, u64); 7] = [
        (criterion_1, 5),
        (criterion_2, 10),
        (criterion_3, 30),
        (criterion_4, 120),
        (criterion_5, 600),
        (criterion_6, 10),
        (criterion_7, 30),
    ];
    let mut failed = 0;
    for (i, (run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let within = elapsed <= Duration::from_secs(*budget);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && within, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {}; runtime {:.2}s (< {}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            detail,
            elapsed.as_secs_f64(),
            budget
        );
    }
    if failed > 0 {
        println!("{failed} of 7 criteria failed");
        std::process::exit(1);
    }
    println!("all 7 criteria passed");
}
