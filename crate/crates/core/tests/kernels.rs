mod common;

use std::sync::Arc;

use common::{c, d1c, d2c, simpson};
use proptest::prelude::*;
use wgl_core::kernels::{
    neumann_free_kernel, neumann_free_kernel_ds, Endpoint, FunctionRecord, HalfLineResolvent,
    VertexKernel,
};
use wgl_core::profile::{tune_to_resonance, CurvatureProfile};
use wgl_core::vertex_spectrum::{eigenvalues, DEFAULT_ZERO_TOLERANCE};
use wgl_core::{sqrt_upper, Complex64, Error};

fn bump(a: f64) -> CurvatureProfile {
    CurvatureProfile::bump(a).unwrap()
}

fn exp_decay() -> FunctionRecord {
    FunctionRecord::exponential(1.0, 1.0)
}

#[test]
fn free_kernel_corners() {
    let z = c(0.0, 1.0);
    let k = z.sqrt();
    let want = -(2.0 * k).cos() / (k * (2.0 * k).sin());
    assert!((neumann_free_kernel(z, 1.0, 1.0).unwrap() - want).norm() < 1e-13);
    assert!((neumann_free_kernel(z, -1.0, -1.0).unwrap() - want).norm() < 1e-13);
    let zero = VertexKernel::new(&CurvatureProfile::Zero, z).unwrap();
    assert!((zero.value(-1.0, -1.0).unwrap() - want).norm() < 1e-9);
    assert!(matches!(
        neumann_free_kernel(c(0.0, 0.0), 0.1, 0.2),
        Err(Error::NearEigenvalue { .. })
    ));
}

#[test]
fn zero_profile_matches_closed_form() {
    let z = c(1.0, 1.0);
    let k = VertexKernel::new(&CurvatureProfile::Zero, z).unwrap();
    for (s, sp) in [(-0.2, 0.4), (0.4, -0.2), (0.9, 0.9), (-1.0, 1.0)] {
        let want = neumann_free_kernel(z, s, sp).unwrap();
        assert!((k.value(s, sp).unwrap() - want).norm() <= 1e-9);
    }
    assert_eq!(
        neumann_free_kernel(z, -0.2, 0.4).unwrap(),
        neumann_free_kernel(z, 0.4, -0.2).unwrap()
    );
    let f = |s: f64| neumann_free_kernel(z, s, 0.3).unwrap();
    assert!((neumann_free_kernel_ds(z, -0.5, 0.3).unwrap() - d1c(f, -0.5, 1e-3)).norm() < 1e-9);
    assert!((neumann_free_kernel_ds(z, 0.7, 0.3).unwrap() - d1c(f, 0.7, 1e-3)).norm() < 1e-9);
}

#[test]
fn bump_kernel_symmetry_and_series() {
    let p = bump(0.5);
    let z = c(1.0, 1.0);
    let k = VertexKernel::new(&p, z).unwrap();
    let a = k.value(0.3, -0.6).unwrap();
    assert!((a - k.value(-0.6, 0.3).unwrap()).norm() <= 1e-10 * a.norm());
    let spectrum = Arc::new(eigenvalues(&p, 200, DEFAULT_ZERO_TOLERANCE).unwrap());
    let series = VertexKernel::with_series(spectrum.clone(), z, 200).unwrap();
    for (s, sp) in [(0.3, -0.6), (-1.0, -1.0), (1.0, -1.0), (0.0, 0.0)] {
        let d = (series.value(s, sp).unwrap() - k.value(s, sp).unwrap()).norm();
        assert!(d <= 1e-6, "({s},{sp}): {d}");
    }
    assert!(VertexKernel::with_series(spectrum, z, 201).is_err());
}

#[test]
fn endpoint_relations() {
    for p in [CurvatureProfile::Zero, bump(0.5), bump(0.9)] {
        let k = VertexKernel::new(&p, c(1.0, 1.0)).unwrap();
        assert!((k.s_derivative(1.0, Endpoint::Plus) - 1.0).norm() < 1e-10);
        assert!((k.s_derivative(-1.0, Endpoint::Minus) + 1.0).norm() < 1e-10);
        assert!(k.s_derivative(1.0, Endpoint::Minus).norm() < 1e-10);
        assert!(k.s_derivative(-1.0, Endpoint::Plus).norm() < 1e-10);
    }
}

#[test]
fn endpoint_derivative_matches_difference() {
    let k = VertexKernel::new(&bump(0.5), c(1.0, 1.0)).unwrap();
    for (e, end) in [(Endpoint::Minus, -1.0), (Endpoint::Plus, 1.0)] {
        let fd = d1c(|s| k.value(s, end).unwrap(), 0.2, 1e-3);
        assert!((k.s_derivative(0.2, e) - fd).norm() <= 1e-6);
        let [v, d] = k.endpoint_column(0.2, e);
        assert!((v - k.value(0.2, end).unwrap()).norm() < 1e-12);
        assert_eq!(d, k.s_derivative(0.2, e));
    }
}

#[test]
fn near_eigenvalue_guard() {
    let r = VertexKernel::new(&CurvatureProfile::Zero, c(0.0, 0.0));
    assert!(matches!(r, Err(Error::NearEigenvalue { .. })));
}

/// `r_v = r⁰ + r⁰ (γ²/4) r_v` composed by quadrature.
#[test]
fn resolvent_identity() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let p = bump(0.8);
    for _ in 0..10 {
        let z = c(rng.gen_range(-2.0..4.0), rng.gen_range(0.2..2.0));
        let (s, sp) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let k = VertexKernel::new(&p, z).unwrap();
        let integrand = |t: f64| {
            neumann_free_kernel(z, s, t).unwrap() * (0.25 * p.gamma(t, 0).powi(2)) * k.value(t, sp).unwrap()
        };
        // Split at the kinks s and s′.
        let mut cuts = [-1.0, s, sp, 1.0];
        cuts.sort_by(f64::total_cmp);
        let comp: Complex64 = cuts.windows(2).map(|w| simpson(integrand, w[0], w[1], 400)).sum();
        let rhs = neumann_free_kernel(z, s, sp).unwrap() + comp;
        let d = (k.value(s, sp).unwrap() - rhs).norm();
        assert!(d <= 1e-6, "z={z} s={s} s'={sp}: {d}");
    }
}

fn grid_sup(k: &VertexKernel, sub: impl Fn(f64, f64) -> Complex64) -> f64 {
    let pts: Vec<f64> = (0..41).map(|i| -1.0 + i as f64 * 0.05).collect();
    let mut m: f64 = 0.0;
    for &s in &pts {
        for &t in &pts {
            m = m.max((k.value(s, t).unwrap() + sub(s, t)).norm());
        }
    }
    m
}

#[test]
fn generic_kernel_bounded_as_epsilon_shrinks() {
    let p = bump(0.5);
    let z = c(0.0, 1.0);
    // λ₁ ≈ −0.03 for this profile, so the sweep starts once ε²|z| is below it.
    let sups: Vec<f64> = (4..=12)
        .map(|k| {
            let eps = 2f64.powi(-k);
            grid_sup(&VertexKernel::new(&p, z * eps * eps).unwrap(), |_, _| c(0.0, 0.0))
        })
        .collect();
    for s in &sups {
        assert!(*s <= 2.0 * sups[0], "{sups:?}");
    }
}

#[test]
fn resonant_kernel_bounded_after_subtraction() {
    let z = c(0.0, 1.0);
    let y = std::f64::consts::FRAC_1_SQRT_2;
    let sups: Vec<f64> = (2..=10)
        .map(|k| {
            let w = z * 2f64.powi(-2 * k);
            let kern = VertexKernel::new(&CurvatureProfile::Zero, w).unwrap();
            grid_sup(&kern, |_, _| y * y / w)
        })
        .collect();
    for s in &sups {
        assert!(*s <= 2.0 * sups[0], "{sups:?}");
    }
}

#[test]
fn derivative_norms_bounded() {
    let z = c(0.0, 1.0);
    let l2 = |f: &dyn Fn(f64) -> Complex64| simpson(|s| c(f(s).norm_sqr(), 0.0), -1.0, 1.0, 400).re.sqrt();
    let free: Vec<f64> = (2..=10)
        .map(|k| {
            let w = z * 2f64.powi(-2 * k);
            l2(&|s| neumann_free_kernel_ds(w, s, 1.0).unwrap())
        })
        .collect();
    for v in &free {
        assert!(*v <= 2.0 * free[0] + 1e-12, "{free:?}");
    }
    let tuned = tune_to_resonance(&bump(0.5), 2).unwrap();
    let spectrum = eigenvalues(&tuned, 2, DEFAULT_ZERO_TOLERANCE).unwrap();
    let ystar = spectrum.resonant_eigenfunction().unwrap().clone();
    for (end, e) in [(-1.0, Endpoint::Minus), (1.0, Endpoint::Plus)] {
        let sub: Vec<f64> = (2..=8)
            .map(|k| {
                let w = z * 2f64.powi(-2 * k);
                let kern = VertexKernel::new(&tuned, w).unwrap();
                l2(&|s| kern.s_derivative(s, e) + ystar.derivative(s) * ystar.value(end) / w)
            })
            .collect();
        for v in &sub {
            assert!(*v <= 2.0 * sub[0], "{end}: {sub:?}");
        }
    }
}

#[test]
fn half_line_dirichlet_and_zero_forcing() {
    let r = HalfLineResolvent::new(c(0.0, 1.0)).unwrap();
    assert_eq!(r.apply(&exp_decay(), 0.0).unwrap(), c(0.0, 0.0));
    assert_eq!(r.kernel(0.0, 0.7), c(0.0, 0.0));
    assert!(r.kernel(0.7, 0.0).norm() < 1e-16);
    assert_eq!(r.boundary_derivative(&FunctionRecord::Zero).unwrap(), c(0.0, 0.0));
    assert!(HalfLineResolvent::new(c(2.0, 0.0)).is_err());
    assert!(r.sqrt_z.im > 0.0);
}

#[test]
fn half_line_apply_trapezoid_oracle() {
    let r = HalfLineResolvent::new(c(0.0, 1.0)).unwrap();
    let n = 400_000;
    let h = 40.0 / n as f64;
    let mut sum = c(0.0, 0.0);
    for i in 0..=n {
        let t = i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += r.kernel(1.0, t) * (-t).exp() * w;
    }
    let got = r.apply(&exp_decay(), 1.0).unwrap();
    assert!((got - sum * h).norm() <= 1e-7, "{got} vs {}", sum * h);
}

#[test]
fn half_line_apply_indicator_closed_form() {
    let z = c(0.0, 2.0);
    let r = HalfLineResolvent::new(z).unwrap();
    let ik = Complex64::i() * sqrt_upper(z);
    let s = 0.5;
    let whole = ((ik).exp() - 1.0) / ik;
    let left = ((ik * s).exp() - 1.0) / ik;
    let right = ((ik * (1.0 - s)).exp() - 1.0) / ik;
    let want = ((ik * s).exp() * whole - left - right) / (2.0 * ik);
    let got = r.apply(&FunctionRecord::indicator(0.0, 1.0), s).unwrap();
    assert!((got - want).norm() <= 1e-9);
}

#[test]
fn boundary_derivative_oracles() {
    let z = c(0.0, 1.0);
    let r = HalfLineResolvent::new(z).unwrap();
    let ik = Complex64::i() * c(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
    let ind = FunctionRecord::indicator(0.0, 1.0);
    let cases = [
        (exp_decay(), 1.0 / (1.0 - ik)),
        (ind.clone(), (ik.exp() - 1.0) / ik),
    ];
    for (f, want) in cases {
        let p = r.boundary_derivative(&f).unwrap();
        assert!((p - want).norm() <= 1e-10, "{p} vs {want}");
        // Independent quadrature of the defining integral.
        let quad = simpson(|t| (ik * t).exp() * f.eval(t), 0.0, f.cutoff().min(60.0), 120_000);
        assert!((p - quad).norm() <= 1e-8);
        // One-sided fourth-order difference of the resolvent at the boundary.
        let h = 1e-3;
        let u = |k: f64| r.apply(&f, k * h).unwrap();
        let fd = (u(1.0) * 48.0 - u(2.0) * 36.0 + u(3.0) * 16.0 - u(4.0) * 3.0) / (12.0 * h);
        assert!((p - fd).norm() <= 1e-8, "{p} vs {fd}");
        assert!((r.apply_derivative(&f, 0.0).unwrap() - p).norm() <= 1e-10);
    }
}

#[test]
fn half_line_solves_the_ode() {
    let r = HalfLineResolvent::new(c(1.0, 1.0)).unwrap();
    let f = FunctionRecord::Gaussian { amplitude: 1.0, center: 1.5, width: 0.5 };
    for s in [0.5, 1.5, 2.7] {
        let u = |x: f64| r.apply(&f, x).unwrap();
        let lhs = -d2c(u, s, 1e-2) - r.z * u(s);
        assert!((lhs - f.eval(s)).norm() <= 1e-6, "s={s}: {lhs}");
        let du = d1c(u, s, 1e-3);
        assert!((du - r.apply_derivative(&f, s).unwrap()).norm() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn half_line_kernel_symmetric(s in 0.0f64..5.0, t in 0.0f64..5.0, re in -3.0f64..3.0, im in 0.1f64..3.0) {
        let r = HalfLineResolvent::new(c(re, im)).unwrap();
        prop_assert!((r.kernel(s, t) - r.kernel(t, s)).norm() <= 1e-14);
    }

    #[test]
    fn vertex_kernel_symmetric(a in 0.0f64..0.99, s in -1.0f64..1.0, t in -1.0f64..1.0, im in 0.1f64..3.0) {
        let k = VertexKernel::new(&bump(a), c(1.0, im)).unwrap();
        let x = k.value(s, t).unwrap();
        prop_assert!((x - k.value(t, s).unwrap()).norm() <= 1e-8 * x.norm().max(1e-300));
    }

    #[test]
    fn boundary_derivative_is_linear(a in -3.0f64..3.0, rate in 0.2f64..4.0) {
        let r = HalfLineResolvent::new(c(0.5, 1.0)).unwrap();
        let f = FunctionRecord::exponential(1.0, rate);
        let p1 = r.boundary_derivative(&f).unwrap();
        let pa = r.boundary_derivative(&f.scaled(a)).unwrap();
        prop_assert!((pa - p1 * a).norm() <= 1e-10 * (1.0 + a.abs()));
    }
}
