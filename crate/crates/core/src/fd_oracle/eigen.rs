//! Second-order finite differences for `−y″ − (γ²/4) y = λ y` with Neumann
//! ends, solved as a symmetric tridiagonal eigenproblem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::CurvatureProfile;

/// Uniform mesh on [−1, 1] with `n` intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    pub points: Vec<f64>,
    pub h: f64,
}

impl Grid1D {
    pub fn new(n: usize) -> Self {
        let h = 2.0 / n as f64;
        Grid1D {
            points: (0..=n).map(|i| -1.0 + i as f64 * h).collect(),
            h,
        }
    }

    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }
}

/// Symmetrised operator: mirrored ghost points at both ends give the row pairs
/// `(2, −2)/h²`; scaling node 0 and node N by `√2` makes the matrix symmetric.
fn tridiagonal(profile: &CurvatureProfile, grid: &Grid1D) -> (Vec<f64>, Vec<f64>) {
    let n = grid.intervals();
    let h2 = grid.h * grid.h;
    let diag: Vec<f64> = grid
        .points
        .iter()
        .map(|&s| {
            let g = profile.gamma(s, 0);
            2.0 / h2 - 0.25 * g * g
        })
        .collect();
    let mut off = vec![-1.0 / h2; n];
    off[0] = -std::f64::consts::SQRT_2 / h2;
    off[n - 1] = -std::f64::consts::SQRT_2 / h2;
    (diag, off)
}

/// Number of eigenvalues below `x` (Sturm count of the LDLᵀ pivots).
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = diag[0] - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let prev = if d == 0.0 { f64::EPSILON * off[i - 1].abs() } else { d };
        d = diag[i] - x - off[i - 1] * off[i - 1] / prev;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T − σ) x = b` by Gaussian elimination with partial pivoting on the band.
fn solve_shifted(diag: &[f64], off: &[f64], sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // Band storage: rows keep (main, first upper, second upper) after pivoting.
    let mut a0: Vec<f64> = diag.iter().map(|d| d - sigma).collect();
    let mut a1: Vec<f64> = off.to_vec();
    a1.push(0.0);
    let mut a2 = vec![0.0; n];
    let mut sub: Vec<f64> = off.to_vec();
    let mut x = b.to_vec();
    for i in 0..n - 1 {
        let l = sub[i];
        if l.abs() > a0[i].abs() {
            // Swap rows i and i+1.
            let (r0, r1, r2) = (a0[i], a1[i], a2[i]);
            a0[i] = l;
            a1[i] = a0[i + 1];
            a2[i] = a1[i + 1];
            x.swap(i, i + 1);
            let m = r0 / l;
            a0[i + 1] = r1 - m * a1[i];
            a1[i + 1] = r2 - m * a2[i];
            x[i + 1] -= m * x[i];
        } else {
            let piv = if a0[i] == 0.0 { 1e-300 } else { a0[i] };
            let m = l / piv;
            a0[i + 1] -= m * a1[i];
            a1[i + 1] -= m * a2[i];
            x[i + 1] -= m * x[i];
        }
        sub[i] = 0.0;
    }
    for i in (0..n).rev() {
        let mut v = x[i];
        if i + 1 < n {
            v -= a1[i] * x[i + 1];
        }
        if i + 2 < n {
            v -= a2[i] * x[i + 2];
        }
        let piv = if a0[i] == 0.0 { 1e-300 } else { a0[i] };
        x[i] = v / piv;
    }
    x
}

fn eigenvector(diag: &[f64], off: &[f64], lambda: f64, h: f64) -> Vec<f64> {
    let n = diag.len();
    let sigma = lambda + 1e-10 * lambda.abs().max(1.0);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    for _ in 0..4 {
        v = solve_shifted(diag, off, sigma, &v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    // Undo the end-node symmetrisation, normalise in the trapezoid inner product.
    let mut y = v;
    y[0] /= std::f64::consts::SQRT_2;
    y[n - 1] /= std::f64::consts::SQRT_2;
    let weight = |i: usize| if i == 0 || i == n - 1 { 0.5 * h } else { h };
    let norm = (0..n).map(|i| weight(i) * y[i] * y[i]).sum::<f64>().sqrt();
    let sup = y.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let first = y.iter().copied().find(|v| v.abs() > 1e-8 * sup).unwrap_or(1.0);
    let sign = first.signum() / norm;
    y.iter_mut().for_each(|x| *x *= sign);
    y
}

/// One eigenpair from the finite-difference oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdEigenpair {
    /// Richardson value `(4λ_{2N} − λ_N)/3`.
    pub lambda: f64,
    pub lambda_coarse: f64,
    pub lambda_fine: f64,
    /// Eigenvector on the coarse mesh, unit norm in the trapezoid inner product.
    pub vector: Vec<f64>,
    pub mesh: Vec<f64>,
}

impl FdEigenpair {
    /// Number of sign changes of the eigenvector.
    pub fn sign_changes(&self) -> usize {
        let sup = self.vector.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut last = 0.0;
        let mut count = 0;
        for &v in &self.vector {
            if v.abs() <= 1e-10 * sup {
                continue;
            }
            if last != 0.0 && v.signum() != last {
                count += 1;
            }
            last = v.signum();
        }
        count
    }
}

/// The lowest `count` eigenpairs on meshes with `n` and `2n` intervals.
pub fn fd_vertex_eigen(profile: &CurvatureProfile, n: usize, count: usize) -> Result<Vec<FdEigenpair>> {
    if n < 200 {
        return Err(Error::InvalidInput("finite-difference mesh needs N >= 200".into()));
    }
    if count == 0 || count > n / 4 {
        return Err(Error::InvalidInput(format!(
            "eigenvalue count {count} must be in 1..={}",
            n / 4
        )));
    }
    let coarse = Grid1D::new(n);
    let fine = Grid1D::new(2 * n);
    let (dc, oc) = tridiagonal(profile, &coarse);
    let (df, of) = tridiagonal(profile, &fine);
    Ok((0..count)
        .map(|k| {
            let lc = kth_eigenvalue(&dc, &oc, k);
            let lf = kth_eigenvalue(&df, &of, k);
            FdEigenpair {
                lambda: (4.0 * lf - lc) / 3.0,
                lambda_coarse: lc,
                lambda_fine: lf,
                vector: eigenvector(&dc, &oc, lc, coarse.h),
                mesh: coarse.points.clone(),
            }
        })
        .collect())
}
