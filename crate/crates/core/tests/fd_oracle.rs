mod common;

use std::f64::consts::PI;

use common::c;
use proptest::prelude::*;
use wgl_core::fd_oracle::{
    assemble_dense, fd_resolvent, fd_vertex_eigen, source_norm, unitary_map_check, NodalField,
    WaveguideGrid,
};
use wgl_core::kernels::FunctionRecord;
use wgl_core::profile::{tune_to_resonance, CurvatureProfile};
use wgl_core::vertex_spectrum::eigenvalues;
use wgl_core::Complex64;

fn bump(a: f64) -> CurvatureProfile {
    CurvatureProfile::bump(a).unwrap()
}

fn forcing() -> [FunctionRecord; 2] {
    [FunctionRecord::exponential(1.0, 1.0), FunctionRecord::indicator(0.0, 1.0)]
}

/// `√z = 1 + 6.5i` decays fast enough for an edge of length 3.
fn damped_z() -> Complex64 {
    c(1.0, 6.5).powi(2)
}

fn small_grid() -> WaveguideGrid {
    WaveguideGrid::new(0.5, 0.1, 0.1, 1.0 / 8.0, damped_z()).unwrap()
}

#[test]
fn zero_profile_second_eigenvalue() {
    let fd = fd_vertex_eigen(&CurvatureProfile::Zero, 2000, 2).unwrap();
    assert!((fd[1].lambda - PI * PI / 4.0).abs() <= 1e-5);
    assert!(fd[0].lambda.abs() <= 1e-8);
    assert!(fd_vertex_eigen(&CurvatureProfile::Zero, 100, 2).is_err());
}

#[test]
fn matches_shooting_and_oscillation() {
    let p = bump(0.5);
    let fd = fd_vertex_eigen(&p, 800, 4).unwrap();
    let sh = eigenvalues(&p, 4, 1e-9).unwrap();
    for (a, b) in fd.iter().zip(&sh.eigenvalues) {
        assert!((a.lambda - b).abs() <= 1e-6);
    }
    for (k, pair) in fd.iter().enumerate() {
        assert_eq!(pair.sign_changes(), k);
    }
    let tuned = tune_to_resonance(&p, 2).unwrap();
    assert_eq!(fd_vertex_eigen(&tuned, 800, 2).unwrap()[1].sign_changes(), 1);
}

#[test]
fn zero_forcing_gives_zero_field() {
    let g = small_grid();
    let zero = [FunctionRecord::Zero, FunctionRecord::Zero];
    let field = fd_resolvent(&g, &bump(0.5), 1, damped_z(), &zero).unwrap();
    assert_eq!(field.norm(), 0.0);
}

#[test]
fn dense_matrix_is_symmetric() {
    let g = small_grid();
    let (a, _) = assemble_dense(&g, &bump(0.7), 2, damped_z(), &forcing()).unwrap();
    let defect = (&a - a.transpose()).iter().map(|x| x.norm()).fold(0.0, f64::max);
    assert!(defect <= 1e-12, "{defect}");
}

/// The block solver against a dense LU solve of the nodal system.
#[test]
fn fast_solver_matches_dense() {
    let g = small_grid();
    for (profile, n) in [(CurvatureProfile::Zero, 1), (bump(0.7), 2)] {
        let z = damped_z();
        let (a, b) = assemble_dense(&g, &profile, n, z, &forcing()).unwrap();
        let x = a.lu().solve(&b).unwrap();
        let field = fd_resolvent(&g, &profile, n, z, &forcing()).unwrap().to_nodal();
        let m = g.modes();
        let fv = g.n_edge - 1;
        let mut worst = 0.0f64;
        let scale = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for p in 0..(2 * (g.n_edge - 1) + g.n_vertex + 1) {
            let row = if p < fv {
                &field.edges[0][g.n_edge - 1 - p]
            } else if p <= fv + g.n_vertex {
                &field.vertex[p - fv]
            } else {
                &field.edges[1][p - fv - g.n_vertex]
            };
            for j in 0..m {
                worst = worst.max((row[j] - x[p * m + j]).norm());
            }
        }
        assert!(worst <= 1e-10 * scale, "{profile:?}: {worst} vs {scale}");
    }
}

#[test]
fn unitary_map() {
    let g = WaveguideGrid::new(0.3, 0.027, 1.0 / 32.0, 1.0 / 16.0, c(0.0, 1.0)).unwrap();
    let smooth = NodalField::from_fn(&g, |_, s, u| c((PI * u).sin() * (-s * s).exp(), u * (1.0 - u) * s.cos()));
    let flat = unitary_map_check(&g, &CurvatureProfile::Zero, &smooth);
    assert!(flat.round_trip <= 1e-15);
    assert!(flat.norm_defect <= 1e-12);
    let bent = unitary_map_check(&g, &bump(0.5), &smooth);
    assert!(bent.norm_defect <= 1e-8, "{bent:?}");
    let zero = NodalField::from_fn(&g, |_, _, _| c(0.0, 0.0));
    let z = unitary_map_check(&g, &bump(0.5), &zero);
    assert_eq!((z.round_trip, z.norm_defect), (0.0, 0.0));
}

#[test]
fn discrete_resolvent_bound() {
    let z = c(0.5, 1.0);
    let g = WaveguideGrid::new(0.3, 0.027, 1.0 / 64.0, 1.0 / 16.0, z).unwrap();
    for profile in [CurvatureProfile::Zero, bump(0.5), bump(0.9)] {
        let field = fd_resolvent(&g, &profile, 1, z, &forcing()).unwrap();
        let bound = source_norm(&g, &forcing()) / z.im;
        assert!(field.norm() <= bound * 1.05, "{profile:?}: {} > {bound}", field.norm());
    }
}

#[test]
fn truncation_length() {
    let z = c(0.0, 1.0);
    let g = WaveguideGrid::new(0.3, 0.027, 1.0 / 64.0, 1.0 / 32.0, z).unwrap();
    let k = wgl_core::sqrt_upper(z);
    assert!((-k.im * g.edge_length).exp() <= 1e-8);
    assert!(g.n_vertex * 2 == g.refined().n_vertex);
    assert!(WaveguideGrid::new(0.3, 0.5, 0.01, 0.1, z).is_err());
    assert!(WaveguideGrid::new(0.3, 0.1, 0.01, 0.1, c(1.0, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn resolvent_bound_random(re in -3.0f64..3.0, im in 0.3f64..2.0, a in 0.0f64..0.95) {
        let z = Complex64::new(re, im);
        let g = WaveguideGrid::new(0.3, 0.027, 1.0 / 32.0, 1.0 / 8.0, z).unwrap();
        let field = fd_resolvent(&g, &bump(a), 1, z, &forcing()).unwrap();
        prop_assert!(field.norm() <= source_norm(&g, &forcing()) / im * 1.05);
    }

    #[test]
    fn unitary_random_bump(a in 0.0f64..0.999, k in 1.0f64..4.0) {
        let g = WaveguideGrid::new(0.3, 0.09, 1.0 / 16.0, 1.0 / 8.0, c(0.0, 1.0)).unwrap();
        let field = NodalField::from_fn(&g, |_, s, u| c((k * s).cos() * (PI * u).sin(), 0.0));
        let r = unitary_map_check(&g, &bump(a), &field);
        prop_assert!(r.norm_defect <= 1e-8 * r.norm_physical.max(1.0));
    }
}
