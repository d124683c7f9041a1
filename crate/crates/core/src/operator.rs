//! The weighted operator `div(|y|^β ∇u)` and Dirichlet solves.
//!
//! The discrete system on the stored half is the stationarity condition of
//! the cell energy: for each free node `Σ W (u_i - u_nb) = 0`, where thin
//! links at row `j` carry `thin_link_weight(j)` and vertical links carry the
//! conductance of their cell row.

use crate::cg::{pcg, CgConfig, CgOutcome};
use crate::error::{Error, Result};
use crate::grid::{Grid, Phase, ScalarField, ThinMask};

/// Visit the links of node `(i0, i1, j)` as `(neighbour index, weight)`.
#[inline]
fn for_each_link(g: &Grid, i0: usize, i1: usize, j: usize, mut f: impl FnMut(usize, f64)) {
    let nx = g.nx();
    let wt = g.thin_link_weight(j);
    if i0 > 0 {
        f(g.index(i0 - 1, i1, j), wt);
    }
    if i0 + 1 < nx[0] {
        f(g.index(i0 + 1, i1, j), wt);
    }
    if g.n() == 2 {
        if i1 > 0 {
            f(g.index(i0, i1 - 1, j), wt);
        }
        if i1 + 1 < nx[1] {
            f(g.index(i0, i1 + 1, j), wt);
        }
    }
    if j + 1 < g.ny() {
        f(g.index(i0, i1, j + 1), g.vertical_link_weight(j));
    }
    if j > 0 {
        f(g.index(i0, i1, j - 1), g.vertical_link_weight(j - 1));
    }
}

/// Discrete `div(|y|^β ∇u)` on interior nodes, zero on the box boundary.
///
/// On the slab row the reflected stencil doubles both the thin and the
/// vertical flux, matching the full-space cell.
pub fn apply_l(field: &ScalarField) -> ScalarField {
    let g = field.grid();
    let u = field.values();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let mut out = vec![0.0; g.node_count()];
    for (idx, o) in out.iter_mut().enumerate() {
        if g.on_boundary(idx) {
            continue;
        }
        let (i0, i1, j) = g.unindex(idx);
        let mut acc = 0.0;
        for_each_link(g, i0, i1, j, |nb, w| acc += w * (u[nb] - u[idx]));
        let reflect = if j == 0 { 2.0 } else { 1.0 };
        *o = reflect * acc * inv_h2;
    }
    ScalarField::new(g.clone(), out).expect("same layout")
}

/// Residual normalised by the total link weight, `Σ W Δu / Σ W`, at each
/// interior node; this is the residual in units of `u`.
pub fn scaled_residual(field: &ScalarField) -> Vec<f64> {
    let g = field.grid();
    let u = field.values();
    (0..g.node_count())
        .map(|idx| {
            if g.on_boundary(idx) {
                return 0.0;
            }
            let (i0, i1, j) = g.unindex(idx);
            let (mut acc, mut wsum) = (0.0, 0.0);
            for_each_link(g, i0, i1, j, |nb, w| {
                acc += w * (u[nb] - u[idx]);
                wsum += w;
            });
            acc / wsum
        })
        .collect()
}

/// Free-node bookkeeping for a Dirichlet problem with a clamped zero set.
#[derive(Debug, Clone)]
pub struct DirichletSystem {
    grid: Grid,
    free: Vec<bool>,
    diag: Vec<f64>,
}

impl DirichletSystem {
    pub fn new(grid: &Grid, zero_set: &ThinMask) -> Self {
        let mut free = vec![true; grid.node_count()];
        for (idx, f) in free.iter_mut().enumerate() {
            if grid.on_boundary(idx) {
                *f = false;
            }
        }
        for s in 0..grid.slab_count() {
            if zero_set.get(s) == Phase::Zero {
                free[grid.slab_node(s, 0)] = false;
            }
        }
        let mut diag = vec![0.0; grid.node_count()];
        for (idx, d) in diag.iter_mut().enumerate() {
            if free[idx] {
                let (i0, i1, j) = grid.unindex(idx);
                for_each_link(grid, i0, i1, j, |_, w| *d += w);
            }
        }
        Self { grid: grid.clone(), free, diag }
    }

    pub fn is_free(&self, idx: usize) -> bool {
        self.free[idx]
    }

    /// `(A d)_i = Σ W (d_i - d_nb)` on free nodes, zero elsewhere.
    pub fn apply(&self, d: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let nx = g.nx();
        let ny = g.ny();
        let s0 = nx[1] * ny;
        let two_d = g.n() == 2;
        for i0 in 0..nx[0] {
            for i1 in 0..nx[1] {
                let base = g.index(i0, i1, 0);
                for j in 0..ny {
                    let idx = base + j;
                    if !self.free[idx] {
                        out[idx] = 0.0;
                        continue;
                    }
                    // Free nodes are never on the lateral boundary or the top row.
                    let di = d[idx];
                    let wt = g.thin_link_weight(j);
                    let mut acc = wt * (2.0 * di - d[idx - s0] - d[idx + s0]);
                    if two_d {
                        acc += wt * (2.0 * di - d[idx - ny] - d[idx + ny]);
                    }
                    acc += g.vertical_link_weight(j) * (di - d[idx + 1]);
                    if j > 0 {
                        acc += g.vertical_link_weight(j - 1) * (di - d[idx - 1]);
                    }
                    out[idx] = acc;
                }
            }
        }
    }

    /// Solve for the free values given fixed values in `u` (boundary data and
    /// zeros). Free entries of `u` serve as the initial guess and are
    /// overwritten by the solution.
    pub fn solve(&self, u: &mut [f64], cfg: &CgConfig) -> CgOutcome {
        let n = u.len();
        let mut au = vec![0.0; n];
        self.apply(u, &mut au);
        let b: Vec<f64> = au.iter().map(|v| -v).collect();
        // Reference norm: right-hand side of the cold start (free values zeroed).
        let mut cold = u.to_vec();
        for (c, &f) in cold.iter_mut().zip(&self.free) {
            if f {
                *c = 0.0;
            }
        }
        self.apply(&cold, &mut au);
        let reference = au.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut d = vec![0.0; n];
        let outcome = pcg(|x, y| self.apply(x, y), &self.diag, &b, &mut d, reference, cfg);
        for i in 0..n {
            if self.free[i] {
                u[i] += d[i];
            }
        }
        outcome
    }
}

/// `Σ W (u_i - u_nb)` at node `idx` with the full stencil, whether or not
/// the node is free.
pub fn node_residual(grid: &Grid, u: &[f64], idx: usize) -> f64 {
    let (i0, i1, j) = grid.unindex(idx);
    let mut acc = 0.0;
    for_each_link(grid, i0, i1, j, |nb, w| acc += w * (u[idx] - u[nb]));
    acc
}

impl DirichletSystem {
    /// Diagonal entries `(A⁻¹)_ii` of the free-node system at the given free nodes.
    pub fn green_diagonal(&self, nodes: &[usize], cfg: &CgConfig) -> Result<Vec<f64>> {
        let len = self.free.len();
        let mut b = vec![0.0; len];
        let mut out = Vec::with_capacity(nodes.len());
        for &i in nodes {
            if !self.free[i] {
                return Err(Error::InvalidArgument(format!("node {i} is not free")));
            }
            b[i] = 1.0;
            let mut x = vec![0.0; len];
            pcg(|p, q| self.apply(p, q), &self.diag, &b, &mut x, 1.0, cfg).into_result()?;
            b[i] = 0.0;
            out.push(x[i]);
        }
        Ok(out)
    }
}

/// Initial vector with boundary data on boundary nodes and zeros elsewhere.
pub fn clamp_values(grid: &Grid, zero_set: &ThinMask, boundary: &ScalarField) -> Result<Vec<f64>> {
    if !boundary.grid().same_layout(grid) || !zero_set.grid().same_layout(grid) {
        return Err(Error::ShapeMismatch("boundary data or mask on a different grid".into()));
    }
    let b = boundary.values();
    let mut u = vec![0.0; grid.node_count()];
    for (idx, v) in u.iter_mut().enumerate() {
        if grid.on_boundary(idx) {
            *v = b[idx];
        }
    }
    for s in 0..grid.slab_count() {
        if zero_set.is_zero(s) && grid.slab_on_boundary(s) && b[grid.slab_node(s, 0)] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "zero-set node {s} lies on the box boundary with nonzero data"
            )));
        }
    }
    Ok(u)
}

/// ℒ-harmonic extension of the boundary data with the zero set clamped to 0.
///
/// Only boundary-node entries of `boundary` are read.
pub fn dirichlet_solve(grid: &Grid, zero_set: &ThinMask, boundary: &ScalarField) -> Result<ScalarField> {
    dirichlet_solve_with(grid, zero_set, boundary, &CgConfig::default()).map(|(f, _)| f)
}

pub fn dirichlet_solve_with(
    grid: &Grid,
    zero_set: &ThinMask,
    boundary: &ScalarField,
    cfg: &CgConfig,
) -> Result<(ScalarField, CgOutcome)> {
    let mut u = clamp_values(grid, zero_set, boundary)?;
    let sys = DirichletSystem::new(grid, zero_set);
    let outcome = sys.solve(&mut u, cfg).into_result()?;
    Ok((ScalarField::new(grid.clone(), u)?, outcome))
}
