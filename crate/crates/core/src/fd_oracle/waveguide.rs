//! Finite-difference resolvent of the full waveguide operator.
//!
//! The vertex is rescaled to physical arc length `x = ε(s + 1)`, where its
//! operator reads `−∂_x((1/g)∂_x) + W/ε² − δ⁻²∂²_u` and the inner product is
//! plain `dx du`. Edge 1 (reversed), the vertex and edge 2 then form one line
//! with a uniform spacing `h`, divergence-form coefficient `a = 1/g` on the
//! vertex and `a = 1` on the edges. Value continuity and the ε-scaled flux
//! condition at the junctions are built into this single conservative stencil.
//!
//! The u-direction uses the `M − 1` interior nodes of a uniform mesh and is
//! diagonalised by the discrete sine transform. On the edges the sine modes
//! decouple and are eliminated by scalar sweeps from the truncation point
//! inward; the vertex core couples modes through `1/g` and `W` and is solved by
//! block tridiagonal elimination.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::FunctionRecord;
use crate::profile::CurvatureProfile;
use crate::quadrature::GaussLegendre;
use crate::sqrt_upper;

/// Truncation level for the edge length: `e^{−Im√z·S_max} ≤ 1e−8`.
pub const TRUNCATION_LEVEL: f64 = 1e-8;

/// Grid for the waveguide on truncated edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveguideGrid {
    pub epsilon: f64,
    pub delta: f64,
    /// Physical spacing in s, shared by edges and vertex.
    pub h: f64,
    /// Intervals across the vertex, `2ε/h`.
    pub n_vertex: usize,
    /// Intervals along each edge; node `n_edge` carries the Dirichlet condition.
    pub n_edge: usize,
    pub edge_length: f64,
    /// Intervals in u.
    pub m_u: usize,
}

impl WaveguideGrid {
    /// Snaps `h_target` so that `2ε/h` is an integer and picks the edge length
    /// from the decay rate `Im √z`.
    pub fn new(epsilon: f64, delta: f64, h_target: f64, h_u: f64, z: Complex64) -> Result<Self> {
        let k = sqrt_upper(z);
        if !(k.im > 0.0) {
            return Err(Error::InvalidInput("z must lie off [0, inf)".into()));
        }
        let length = -TRUNCATION_LEVEL.ln() / k.im;
        Self::with_edge_length(epsilon, delta, h_target, h_u, length)
    }

    pub fn with_edge_length(
        epsilon: f64,
        delta: f64,
        h_target: f64,
        h_u: f64,
        edge_length: f64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= epsilon && epsilon <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "need 0 < delta <= epsilon <= 1, got delta = {delta}, epsilon = {epsilon}"
            )));
        }
        if !(h_target > 0.0 && h_u > 0.0 && h_u <= 0.25 && edge_length > 0.0) {
            return Err(Error::InvalidInput("grid spacings must be positive, h_u <= 1/4".into()));
        }
        let n_vertex = ((2.0 * epsilon / h_target).round() as usize).max(2);
        let h = 2.0 * epsilon / n_vertex as f64;
        let n_edge = ((edge_length / h).ceil() as usize).max(2);
        let m_u = (1.0 / h_u).round() as usize;
        let unknowns = (2 * n_edge + n_vertex) * (m_u - 1);
        if unknowns > 5_000_000 {
            return Err(Error::InvalidInput(format!(
                "grid has {unknowns} unknowns, above the desk-scale cap"
            )));
        }
        Ok(WaveguideGrid {
            epsilon,
            delta,
            h,
            n_vertex,
            n_edge,
            edge_length: n_edge as f64 * h,
            m_u,
        })
    }

    /// The same grid with both spacings halved.
    pub fn refined(&self) -> Self {
        WaveguideGrid {
            h: 0.5 * self.h,
            n_vertex: 2 * self.n_vertex,
            n_edge: 2 * self.n_edge,
            m_u: 2 * self.m_u,
            ..self.clone()
        }
    }

    pub fn h_u(&self) -> f64 {
        1.0 / self.m_u as f64
    }

    /// Number of interior u nodes, equal to the number of sine modes.
    pub fn modes(&self) -> usize {
        self.m_u - 1
    }

    /// Reference coordinate of vertex node `k`.
    pub fn vertex_s(&self, k: usize) -> f64 {
        -1.0 + k as f64 * self.h / self.epsilon
    }

    pub fn edge_s(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn u(&self, j: usize) -> f64 {
        j as f64 / self.m_u as f64
    }

    /// Discrete transverse eigenvalue `(4/h_u²) sin²(kπh_u/2)` of mode `k`.
    pub fn transverse_eigenvalue(&self, k: usize) -> f64 {
        let hu = self.h_u();
        let s = (k as f64 * std::f64::consts::PI * hu / 2.0).sin();
        4.0 * s * s / (hu * hu)
    }

    /// Orthonormal sine transform `Φ_{jk} = √(2/M) sin(jkπ/M)`.
    fn sine_matrix(&self) -> DMatrix<f64> {
        let m = self.modes();
        let mm = self.m_u as f64;
        let c = (2.0 / mm).sqrt();
        DMatrix::from_fn(m, m, |j, k| {
            c * (((j + 1) * (k + 1)) as f64 * std::f64::consts::PI / mm).sin()
        })
    }
}

/// Solution in sine coefficients per node.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    pub grid: WaveguideGrid,
    pub n: usize,
    /// Vertex nodes `0..=n_vertex`; nodes 0 and `n_vertex` are the junctions.
    pub vertex: Vec<DVector<Complex64>>,
    /// Edge nodes `0..=n_edge`; node 0 duplicates the junction.
    pub edges: [Vec<DVector<Complex64>>; 2],
}

impl DiscreteField {
    /// `(χₙ, ψ)_{L²(0,1)}` at edge node `i` of edge `j ∈ {1, 2}`.
    pub fn edge_projection(&self, edge: usize, i: usize) -> Complex64 {
        self.edges[edge - 1][i][self.n - 1] / (self.grid.m_u as f64).sqrt()
    }

    /// Projection at vertex node `k`.
    pub fn vertex_projection(&self, k: usize) -> Complex64 {
        self.vertex[k][self.n - 1] / (self.grid.m_u as f64).sqrt()
    }

    /// Discrete norm in the physical-coordinate inner product `h·h_u·Σ|ψ|²`.
    pub fn norm(&self) -> f64 {
        let g = &self.grid;
        let mut sum: f64 = self.vertex.iter().map(|c| c.norm_squared()).sum();
        for e in &self.edges {
            sum += e[1..].iter().map(|c| c.norm_squared()).sum::<f64>();
        }
        (g.h * g.h_u() * sum).sqrt()
    }

    /// Nodal values at the interior u nodes.
    pub fn to_nodal(&self) -> NodalField {
        let phi = self.grid.sine_matrix().map(|x| Complex64::new(x, 0.0));
        let conv = |c: &DVector<Complex64>| (&phi * c).iter().copied().collect::<Vec<_>>();
        NodalField {
            grid: self.grid.clone(),
            vertex: self.vertex.iter().map(conv).collect(),
            edges: [
                self.edges[0].iter().map(conv).collect(),
                self.edges[1].iter().map(conv).collect(),
            ],
        }
    }
}

/// Average of `f` over the dual cell of edge node `i`; the junction cell is
/// half vertex, where the source vanishes.
fn cell_source(grid: &WaveguideGrid, f: &FunctionRecord, i: usize) -> f64 {
    let s = grid.edge_s(i);
    let a = if i == 0 { 0.0 } else { s - 0.5 * grid.h };
    let b = s + 0.5 * grid.h;
    let mut cuts = vec![a];
    cuts.extend(f.breakpoints().into_iter().filter(|&x| x > a && x < b));
    cuts.push(b);
    let rule = GaussLegendre::new(4);
    let total: f64 = cuts
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |x| f.eval(x)))
        .sum();
    total / grid.h
}

/// Discrete norm of the cell-averaged source `fχₙ` in the same inner product.
pub fn source_norm(grid: &WaveguideGrid, f: &[FunctionRecord; 2]) -> f64 {
    let sum: f64 = f
        .iter()
        .map(|fj| (0..grid.n_edge).map(|i| cell_source(grid, fj, i).powi(2)).sum::<f64>())
        .sum();
    (grid.h * sum).sqrt()
}

/// Solves `(H̃^h − μₙ^h/δ² − z)Ψ = f_jχₙ` on the edges.
///
/// The threshold subtracted is the discrete transverse eigenvalue of mode n so
/// that the u-discretisation error does not appear as a spectral shift of
/// order `h_u²/δ²`.
pub fn fd_resolvent(
    grid: &WaveguideGrid,
    profile: &CurvatureProfile,
    n: usize,
    z: Complex64,
    f: &[FunctionRecord; 2],
) -> Result<DiscreteField> {
    if z.im == 0.0 {
        return Err(Error::InvalidInput("finite-difference resolvent needs Im z != 0".into()));
    }
    let m = grid.modes();
    if n == 0 || n > m {
        return Err(Error::InvalidInput(format!("mode {n} not resolved by {m} u nodes")));
    }
    let k = sqrt_upper(z);
    if (-k.im * grid.edge_length).exp() > TRUNCATION_LEVEL * (1.0 + 1e-9) {
        return Err(Error::InvalidInput(format!(
            "edge length {} too short for z = {z}",
            grid.edge_length
        )));
    }
    let h = grid.h;
    let h2 = h * h;
    let d2 = grid.delta * grid.delta;
    let sigma = grid.transverse_eigenvalue(n) / d2;
    let sqrt_m = (grid.m_u as f64).sqrt();
    let mu: Vec<f64> = (1..=m).map(|k| grid.transverse_eigenvalue(k) / d2).collect();
    let czero = Complex64::new(0.0, 0.0);

    // Edge sweeps: c_i = β_i c_{i−1} + γ_i, per mode.
    let mut beta: [Vec<Vec<Complex64>>; 2] = [vec![], vec![]];
    let mut gam: [Vec<Vec<Complex64>>; 2] = [vec![], vec![]];
    for j in 0..2 {
        let mut bj = vec![vec![czero; m]; grid.n_edge + 1];
        let mut gj = vec![vec![czero; m]; grid.n_edge + 1];
        for mode in 0..m {
            let d = 2.0 + h2 * (mu[mode] - sigma - z);
            let (mut b_next, mut g_next) = (czero, czero);
            for i in (1..grid.n_edge).rev() {
                let src = if mode == n - 1 {
                    h2 * sqrt_m * cell_source(grid, &f[j], i)
                } else {
                    0.0
                };
                let b = 1.0 / (d - b_next);
                let g = (src + g_next) * b;
                bj[i][mode] = b;
                gj[i][mode] = g;
                b_next = b;
                g_next = g;
            }
        }
        beta[j] = bj;
        gam[j] = gj;
    }

    // Vertex blocks in the sine basis.
    let phi = grid.sine_matrix();
    let ratio = grid.delta / grid.epsilon;
    let nv = grid.n_vertex;
    let to_c = |mtx: DMatrix<f64>| mtx.map(|x| Complex64::new(x, 0.0));
    let coeff_block = |s: f64| -> DMatrix<f64> {
        let diag = DVector::from_fn(m, |j, _| {
            profile.geometry_unchecked(s, grid.u(j + 1), ratio).inv_g
        });
        &phi * DMatrix::from_diagonal(&diag) * &phi
    };
    let potential_block = |s: f64| -> DMatrix<f64> {
        let e2 = grid.epsilon * grid.epsilon;
        let diag = DVector::from_fn(m, |j, _| {
            profile.geometry_unchecked(s, grid.u(j + 1), ratio).w / e2
        });
        &phi * DMatrix::from_diagonal(&diag) * &phi
    };
    let identity = DMatrix::<f64>::identity(m, m);
    // a at midpoints k+1/2 for k = −1..=nv; the outer two are edge midpoints.
    let mid: Vec<DMatrix<f64>> = (0..=nv + 1)
        .map(|idx| {
            if idx == 0 || idx == nv + 1 {
                identity.clone()
            } else {
                let s = 0.5 * (grid.vertex_s(idx - 1) + grid.vertex_s(idx));
                coeff_block(s)
            }
        })
        .collect();
    let shift = DMatrix::from_diagonal(&DVector::from_fn(m, |k, _| {
        Complex64::new(h2 * mu[k], 0.0) - h2 * (sigma + z)
    }));

    let mut diag_blocks: Vec<DMatrix<Complex64>> = Vec::with_capacity(nv + 1);
    let mut rhs: Vec<DVector<Complex64>> = Vec::with_capacity(nv + 1);
    for kk in 0..=nv {
        let s = grid.vertex_s(kk);
        let mut d = to_c(&mid[kk] + &mid[kk + 1] + potential_block(s) * h2) + &shift;
        let mut r = DVector::from_element(m, czero);
        if kk == 0 || kk == nv {
            let j = if kk == 0 { 0 } else { 1 };
            for mode in 0..m {
                d[(mode, mode)] -= beta[j][1][mode];
                r[mode] += gam[j][1][mode];
            }
            r[n - 1] += h2 * sqrt_m * cell_source(grid, &f[j], 0);
        }
        diag_blocks.push(d);
        rhs.push(r);
    }

    // Block Thomas: c_k = y_k − X_k c_{k+1}.
    let mut xs: Vec<DMatrix<Complex64>> = Vec::with_capacity(nv + 1);
    let mut ys: Vec<DVector<Complex64>> = Vec::with_capacity(nv + 1);
    for kk in 0..=nv {
        let mut d = diag_blocks[kk].clone();
        let mut r = rhs[kk].clone();
        if kk > 0 {
            // L_k = −A_{k−1/2}; subtract L_k·(X_{k−1}, y_{k−1}).
            let a = to_c(mid[kk].clone());
            d += &a * &xs[kk - 1];
            r += &a * &ys[kk - 1];
        }
        let lu = d.lu();
        let upper = if kk < nv {
            -to_c(mid[kk + 1].clone())
        } else {
            DMatrix::from_element(m, m, czero)
        };
        let x = lu
            .solve(&upper)
            .ok_or_else(|| Error::Solver(format!("singular vertex block at node {kk}")))?;
        let y = lu
            .solve(&r)
            .ok_or_else(|| Error::Solver(format!("singular vertex block at node {kk}")))?;
        xs.push(x);
        ys.push(y);
    }
    let mut vertex = vec![DVector::from_element(m, czero); nv + 1];
    vertex[nv] = ys[nv].clone();
    for kk in (0..nv).rev() {
        vertex[kk] = &ys[kk] - &xs[kk] * &vertex[kk + 1];
    }

    let mut edges: [Vec<DVector<Complex64>>; 2] = [vec![], vec![]];
    for j in 0..2 {
        let mut col = vec![DVector::from_element(m, czero); grid.n_edge + 1];
        col[0] = if j == 0 { vertex[0].clone() } else { vertex[nv].clone() };
        for i in 1..grid.n_edge {
            for mode in 0..m {
                col[i][mode] = beta[j][i][mode] * col[i - 1][mode] + gam[j][i][mode];
            }
        }
        edges[j] = col;
    }
    Ok(DiscreteField {
        grid: grid.clone(),
        n,
        vertex,
        edges,
    })
}

/// Which part of the waveguide a nodal value belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Edge1,
    Edge2,
    Vertex,
}

/// Nodal values at the interior u nodes; same node layout as [`DiscreteField`].
#[derive(Clone, Debug)]
pub struct NodalField {
    pub grid: WaveguideGrid,
    pub vertex: Vec<Vec<Complex64>>,
    pub edges: [Vec<Vec<Complex64>>; 2],
}

impl NodalField {
    /// Samples `f(region, s, u)`; `s` is the reference coordinate on the vertex
    /// and arc length on the edges.
    pub fn from_fn<F: Fn(Region, f64, f64) -> Complex64>(grid: &WaveguideGrid, f: F) -> Self {
        let m = grid.modes();
        let us: Vec<f64> = (1..=m).map(|j| grid.u(j)).collect();
        let vertex = (0..=grid.n_vertex)
            .map(|k| us.iter().map(|&u| f(Region::Vertex, grid.vertex_s(k), u)).collect())
            .collect();
        let edge = |r: Region| {
            (0..=grid.n_edge)
                .map(|i| us.iter().map(|&u| f(r, grid.edge_s(i), u)).collect())
                .collect()
        };
        NodalField {
            grid: grid.clone(),
            vertex,
            edges: [edge(Region::Edge1), edge(Region::Edge2)],
        }
    }
}

/// Round trip and norm preservation of the unitary map to flat coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryCheck {
    pub round_trip: f64,
    pub norm_defect: f64,
    pub norm_physical: f64,
    pub norm_flat: f64,
}

/// Treats `field` as a function on the physical waveguide, maps it with
/// `ψ ↦ δ^{1/2}ψ` on the edges and `ψ ↦ δ^{1/2}g^{1/4}ψ` on the vertex, maps back,
/// and compares norms computed with the metric weights `δ` and `δεg^{1/2}`.
pub fn unitary_map_check(grid: &WaveguideGrid, profile: &CurvatureProfile, field: &NodalField) -> UnitaryCheck {
    let ratio = grid.delta / grid.epsilon;
    let sd = grid.delta.sqrt();
    let hu = grid.h_u();
    let ds_ref = grid.h / grid.epsilon;
    let mut round = 0.0f64;
    let (mut phys, mut flat) = (0.0, 0.0);
    for (k, row) in field.vertex.iter().enumerate() {
        let s = grid.vertex_s(k);
        let wk = if k == 0 || k == grid.n_vertex { 0.5 } else { 1.0 };
        for (j, v) in row.iter().enumerate() {
            let g = profile.geometry_unchecked(s, grid.u(j + 1), ratio).g;
            let mapped = v * (sd * g.powf(0.25));
            let back = mapped / (sd * g.powf(0.25));
            round = round.max((back - v).norm());
            phys += wk * ds_ref * hu * v.norm_sqr() * grid.delta * grid.epsilon * g.sqrt();
            flat += wk * ds_ref * hu * grid.epsilon * mapped.norm_sqr();
        }
    }
    for e in &field.edges {
        for (i, row) in e.iter().enumerate() {
            let wi = if i == 0 || i == grid.n_edge { 0.5 } else { 1.0 };
            for v in row {
                let mapped = v * sd;
                let back = mapped / sd;
                round = round.max((back - v).norm());
                phys += wi * grid.h * hu * v.norm_sqr() * grid.delta;
                flat += wi * grid.h * hu * mapped.norm_sqr();
            }
        }
    }
    let (np, nf) = (phys.sqrt(), flat.sqrt());
    UnitaryCheck {
        round_trip: round,
        norm_defect: (nf - np).abs(),
        norm_physical: np,
        norm_flat: nf,
    }
}

/// Dense nodal-basis matrix of `H̃^h − μₙ^h/δ² − z` and the right-hand side,
/// for small grids. Unknowns run along the line (edge 1 reversed, vertex,
/// edge 2), each node holding the interior u values.
pub fn assemble_dense(
    grid: &WaveguideGrid,
    profile: &CurvatureProfile,
    n: usize,
    z: Complex64,
    f: &[FunctionRecord; 2],
) -> Result<(DMatrix<Complex64>, DVector<Complex64>)> {
    let m = grid.modes();
    let ne = grid.n_edge;
    let nv = grid.n_vertex;
    let nodes = 2 * (ne - 1) + nv + 1;
    if nodes * m > 4000 {
        return Err(Error::InvalidInput("dense assembly limited to 4000 unknowns".into()));
    }
    let h2 = grid.h * grid.h;
    let hu2 = grid.h_u() * grid.h_u();
    let d2 = grid.delta * grid.delta;
    let sigma = grid.transverse_eigenvalue(n) / d2;
    let ratio = grid.delta / grid.epsilon;
    // Line position p: 0..ne−2 edge 1 nodes ne−1..1, then vertex 0..nv, then edge 2 1..ne−1.
    let first_vertex = ne - 1;
    let a_mid = |p: usize, j: usize| -> f64 {
        // Coefficient between line nodes p and p+1.
        if p < first_vertex || p >= first_vertex + nv {
            1.0
        } else {
            let k = p - first_vertex;
            let s = 0.5 * (grid.vertex_s(k) + grid.vertex_s(k + 1));
            profile.geometry_unchecked(s, grid.u(j + 1), ratio).inv_g
        }
    };
    let pot = |p: usize, j: usize| -> f64 {
        if p >= first_vertex && p <= first_vertex + nv {
            let s = grid.vertex_s(p - first_vertex);
            profile.geometry_unchecked(s, grid.u(j + 1), ratio).w / (grid.epsilon * grid.epsilon)
        } else {
            0.0
        }
    };
    let source = |p: usize, j: usize| -> f64 {
        let chi = crate::chi(n, grid.u(j + 1));
        if p < first_vertex {
            cell_source(grid, &f[0], ne - 1 - p) * chi
        } else if p == first_vertex {
            cell_source(grid, &f[0], 0) * chi
        } else if p == first_vertex + nv {
            cell_source(grid, &f[1], 0) * chi
        } else if p > first_vertex + nv {
            cell_source(grid, &f[1], p - first_vertex - nv) * chi
        } else {
            0.0
        }
    };
    let size = nodes * m;
    let mut a = DMatrix::from_element(size, size, Complex64::new(0.0, 0.0));
    let mut b = DVector::from_element(size, Complex64::new(0.0, 0.0));
    let idx = |p: usize, j: usize| p * m + j;
    for p in 0..nodes {
        for j in 0..m {
            let r = idx(p, j);
            let left = if p > 0 { a_mid(p - 1, j) } else { 1.0 };
            let right = if p + 1 < nodes { a_mid(p, j) } else { 1.0 };
            a[(r, r)] += (left + right) / h2 + 2.0 / (d2 * hu2) + pot(p, j) - sigma - z;
            if p > 0 {
                a[(r, idx(p - 1, j))] -= left / h2;
            }
            if p + 1 < nodes {
                a[(r, idx(p + 1, j))] -= right / h2;
            }
            if j > 0 {
                a[(r, idx(p, j - 1))] -= 1.0 / (d2 * hu2);
            }
            if j + 1 < m {
                a[(r, idx(p, j + 1))] -= 1.0 / (d2 * hu2);
            }
            b[r] = Complex64::new(source(p, j), 0.0);
        }
    }
    Ok((a, b))
}
