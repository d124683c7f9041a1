//! Half-space tensor grids, node-indexed fields and thin masks.
//!
//! Only the upper half `y >= 0` is stored. Every field is even in `y`, so a
//! query at `(x', -y)` reads the value at `(x', y)`.
//!
//! Nodes are laid out thin-axes major with `y` fastest:
//! `index = (i0 * nx1 + i1) * ny + j`, where `nx1 = 1` when `n = 1`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const ALPHA_MIN: f64 = 0.05;
pub const ALPHA_MAX: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub alpha: f64,
    pub half_extent: f64,
    pub spacing: f64,
}

impl GridSpec {
    pub fn new(n: usize, alpha: f64, half_extent: f64, spacing: f64) -> Result<Self> {
        let spec = Self { n, alpha, half_extent, spacing };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 1 && self.n != 2 {
            return Err(Error::InvalidGrid(format!("thin dimension must be 1 or 2, got {}", self.n)));
        }
        if !(ALPHA_MIN..=ALPHA_MAX).contains(&self.alpha) {
            return Err(Error::InvalidGrid(format!(
                "alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}], got {}",
                self.alpha
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {}", self.spacing)));
        }
        if !(self.half_extent > 0.0 && self.half_extent.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half_extent must be positive, got {}",
                self.half_extent
            )));
        }
        let ratio = self.half_extent / self.spacing;
        let m = ratio.round();
        if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing {} does not divide half_extent {}",
                self.spacing, self.half_extent
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        1.0 - 2.0 * self.alpha
    }

    /// Number of mesh steps in `[0, R]`.
    pub fn steps(&self) -> usize {
        (self.half_extent / self.spacing).round() as usize
    }

    pub fn thin_count(&self) -> usize {
        2 * self.steps() + 1
    }

    pub fn vertical_count(&self) -> usize {
        self.steps() + 1
    }

    /// Nodes per axis, thin axes first, vertical last.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![self.thin_count(); self.n];
        c.push(self.vertical_count());
        c
    }
}

/// A point of the upper half-space. `x[1]` is unused when `n = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: [f64; 2],
    pub y: f64,
}

impl Point {
    pub fn new(x: [f64; 2], y: f64) -> Self {
        Self { x, y }
    }
}

/// Convert a user-facing thin point into the internal two-slot form.
pub fn thin_point(n: usize, p: &[f64]) -> Result<[f64; 2]> {
    if p.len() != n {
        return Err(Error::ShapeMismatch(format!("thin point has {} coordinates, expected {n}", p.len())));
    }
    Ok(if n == 1 { [p[0], 0.0] } else { [p[0], p[1]] })
}

/// `∫_a^b t^p dt` for `0 <= a <= b`, `p > -1`.
pub fn power_integral(a: f64, b: f64, p: f64) -> f64 {
    (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
}

/// Per-row weight tables for the cells between node rows `j` and `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowWeights {
    /// `(1/h) ∫ t^β` over the lower half of the cell row.
    pub lower_half: Vec<f64>,
    /// `(1/h) ∫ t^β` over the upper half of the cell row.
    pub upper_half: Vec<f64>,
    /// Harmonic-mean conductance `h / ∫ t^{-β}` of the vertical links.
    pub conductance: Vec<f64>,
}

impl RowWeights {
    fn build(h: f64, beta: f64, rows: usize) -> Self {
        let mut lower_half = Vec::with_capacity(rows);
        let mut upper_half = Vec::with_capacity(rows);
        let mut conductance = Vec::with_capacity(rows);
        for j in 0..rows {
            let a = j as f64 * h;
            let m = (j as f64 + 0.5) * h;
            let b = (j as f64 + 1.0) * h;
            lower_half.push(power_integral(a, m, beta) / h);
            upper_half.push(power_integral(m, b, beta) / h);
            conductance.push(h / power_integral(a, b, -beta));
        }
        Self { lower_half, upper_half, conductance }
    }
}

/// Built grid: node geometry plus face weights.
///
/// Sub-lattices used for extrapolation share this type; they carry an
/// origin that need not equal `-R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    h: f64,
    origin: [f64; 2],
    nx: [usize; 2],
    ny: usize,
    weights: RowWeights,
}

pub fn build_grid(spec: GridSpec) -> Result<Grid> {
    spec.validate()?;
    let nt = spec.thin_count();
    let nx = if spec.n == 1 { [nt, 1] } else { [nt, nt] };
    let origin = if spec.n == 1 { [-spec.half_extent, 0.0] } else { [-spec.half_extent; 2] };
    Ok(Grid::with_layout(spec, spec.spacing, origin, nx, spec.vertical_count()))
}

impl Grid {
    fn with_layout(spec: GridSpec, h: f64, origin: [f64; 2], nx: [usize; 2], ny: usize) -> Self {
        let weights = RowWeights::build(h, spec.beta(), ny.saturating_sub(1));
        Self { spec, h, origin, nx, ny, weights }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn n(&self) -> usize {
        self.spec.n
    }
    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }
    pub fn beta(&self) -> f64 {
        self.spec.beta()
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn nx(&self) -> [usize; 2] {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn weights(&self) -> &RowWeights {
        &self.weights
    }

    pub fn node_count(&self) -> usize {
        self.nx[0] * self.nx[1] * self.ny
    }

    pub fn slab_count(&self) -> usize {
        self.nx[0] * self.nx[1]
    }

    #[inline]
    pub fn index(&self, i0: usize, i1: usize, j: usize) -> usize {
        (i0 * self.nx[1] + i1) * self.ny + j
    }

    #[inline]
    pub fn slab_index(&self, i0: usize, i1: usize) -> usize {
        i0 * self.nx[1] + i1
    }

    /// Node index of slab node `s` at row `j`.
    #[inline]
    pub fn slab_node(&self, s: usize, j: usize) -> usize {
        s * self.ny + j
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let j = idx % self.ny;
        let s = idx / self.ny;
        (s / self.nx[1], s % self.nx[1], j)
    }

    #[inline]
    pub fn slab_unindex(&self, s: usize) -> (usize, usize) {
        (s / self.nx[1], s % self.nx[1])
    }

    #[inline]
    pub fn thin_coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.h
    }

    #[inline]
    pub fn y_coord(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn point(&self, idx: usize) -> Point {
        let (i0, i1, j) = self.unindex(idx);
        self.point_at(i0, i1, j)
    }

    #[inline]
    pub fn point_at(&self, i0: usize, i1: usize, j: usize) -> Point {
        let x1 = if self.n() == 2 { self.thin_coord(1, i1) } else { 0.0 };
        Point::new([self.thin_coord(0, i0), x1], self.y_coord(j))
    }

    pub fn slab_point(&self, s: usize) -> [f64; 2] {
        let (i0, i1) = self.slab_unindex(s);
        let p = self.point_at(i0, i1, 0);
        p.x
    }

    /// Upper end of the stored domain along each thin axis.
    pub fn thin_max(&self, axis: usize) -> f64 {
        self.thin_coord(axis, self.nx[axis] - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y_coord(self.ny - 1)
    }

    /// True when the slab node lies on the lateral box boundary.
    pub fn slab_on_boundary(&self, s: usize) -> bool {
        let (i0, i1) = self.slab_unindex(s);
        i0 == 0 || i0 + 1 == self.nx[0] || (self.n() == 2 && (i1 == 0 || i1 + 1 == self.nx[1]))
    }

    /// True for nodes carrying Dirichlet data: lateral faces and the top row.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let (i0, i1, j) = self.unindex(idx);
        j + 1 == self.ny || self.slab_on_boundary(self.slab_index(i0, i1))
    }

    /// Slab nodes that are not on the lateral boundary, in lexicographic order.
    pub fn free_slab_nodes(&self) -> Vec<usize> {
        (0..self.slab_count()).filter(|&s| !self.slab_on_boundary(s)).collect()
    }

    /// `(1/h) ∫ t^β` over the cell row between node rows `j` and `j + 1`.
    pub fn mean_face_weight(&self, j: usize) -> f64 {
        self.weights.lower_half[j] + self.weights.upper_half[j]
    }

    /// Weight of the thin-direction links at node row `j` (upper half only).
    #[inline]
    pub fn thin_link_weight(&self, j: usize) -> f64 {
        let w = &self.weights;
        let above = if j + 1 < self.ny { w.lower_half[j] } else { 0.0 };
        let below = if j > 0 { w.upper_half[j - 1] } else { 0.0 };
        above + below
    }

    /// Weight of the vertical link between rows `j` and `j + 1`.
    #[inline]
    pub fn vertical_link_weight(&self, j: usize) -> f64 {
        self.weights.conductance[j]
    }

    /// Whether the closed thin ball lies inside the stored slab.
    pub fn contains_thin_ball(&self, c: [f64; 2], r: f64) -> bool {
        let tol = 1e-9 * self.h;
        let ok0 = c[0] - r >= self.origin[0] - tol && c[0] + r <= self.thin_max(0) + tol;
        let ok1 = self.n() == 1 || (c[1] - r >= self.origin[1] - tol && c[1] + r <= self.thin_max(1) + tol);
        ok0 && ok1
    }

    /// Whether the closed half-ball of radius `r` about `(c, 0)` lies inside the grid.
    pub fn contains_ball(&self, c: [f64; 2], r: f64) -> bool {
        self.contains_thin_ball(c, r) && r <= self.y_max() + 1e-9 * self.h
    }

    pub fn check_ball(&self, c: [f64; 2], r: f64) -> Result<()> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        if !self.contains_ball(c, r) {
            return Err(Error::OutOfGrid(format!("ball of radius {r} about {:?} exits the grid", &c[..self.n()])));
        }
        Ok(())
    }

    /// Sub-lattice of spacing `2h` keeping even rows and the thin indices
    /// whose parity matches `parity` on each axis.
    pub fn coarsen(&self, parity: [usize; 2]) -> Result<Grid> {
        let mut origin = self.origin;
        let mut nx = [1usize; 2];
        for a in 0..self.n() {
            let p = parity[a] % 2;
            if self.nx[a] <= p {
                return Err(Error::InvalidGrid("grid too small to coarsen".into()));
            }
            origin[a] = self.thin_coord(a, p);
            nx[a] = (self.nx[a] - p).div_ceil(2);
        }
        let ny = self.ny.div_ceil(2);
        if nx[0] < 2 || ny < 2 || (self.n() == 2 && nx[1] < 2) {
            return Err(Error::InvalidGrid("grid too small to coarsen".into()));
        }
        let mut spec = self.spec;
        spec.spacing = 2.0 * self.h;
        Ok(Grid::with_layout(spec, 2.0 * self.h, origin, nx, ny))
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.h == other.h && self.origin == other.origin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite field value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { values: vec![0.0; grid.node_count()], grid: grid.clone() }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { values: vec![c; grid.node_count()], grid: grid.clone() }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(Point) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(grid.point(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn spec(&self) -> &GridSpec {
        self.grid.spec()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i0: usize, i1: usize, j: usize) -> f64 {
        self.values[self.grid.index(i0, i1, j)]
    }

    /// Value at node `(i0, i1)` and signed row `j`; negative rows reflect.
    pub fn at_signed(&self, i0: usize, i1: usize, j: isize) -> f64 {
        self.at(i0, i1, j.unsigned_abs())
    }

    /// Trace values on the `y = 0` slab.
    pub fn slab_values(&self) -> Vec<f64> {
        (0..self.grid.slab_count()).map(|s| self.values[self.grid.slab_node(s, 0)]).collect()
    }

    /// Restriction to a coarsened sub-lattice of the same grid.
    pub fn restrict(&self, coarse: &Grid) -> Result<ScalarField> {
        let h = self.grid.h();
        let step = (coarse.h() / h).round() as usize;
        let mut off = [0usize; 2];
        for (a, o) in off.iter_mut().enumerate().take(self.grid.n()) {
            let d = (coarse.origin()[a] - self.grid.origin()[a]) / h;
            *o = d.round() as usize;
        }
        let mut values = Vec::with_capacity(coarse.node_count());
        for i0 in 0..coarse.nx()[0] {
            for i1 in 0..coarse.nx()[1] {
                for j in 0..coarse.ny() {
                    let (f0, f1, fj) = (off[0] + step * i0, off[1] + step * i1, step * j);
                    if f0 >= self.grid.nx()[0] || f1 >= self.grid.nx()[1] || fj >= self.grid.ny() {
                        return Err(Error::ShapeMismatch("coarse lattice exceeds the fine grid".into()));
                    }
                    values.push(self.at(f0, f1, fj));
                }
            }
        }
        Ok(ScalarField { grid: coarse.clone(), values })
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Zero,
    Positive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinMask {
    grid: Grid,
    states: Vec<Phase>,
}

impl ThinMask {
    pub fn new(grid: &Grid, states: Vec<Phase>) -> Result<Self> {
        if states.len() != grid.slab_count() {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} labels, slab has {} nodes",
                states.len(),
                grid.slab_count()
            )));
        }
        Ok(Self { grid: grid.clone(), states })
    }

    pub fn all(grid: &Grid, phase: Phase) -> Self {
        Self { grid: grid.clone(), states: vec![phase; grid.slab_count()] }
    }

    /// Empty zero set.
    pub fn empty(grid: &Grid) -> Self {
        Self::all(grid, Phase::Positive)
    }

    pub fn from_fn(grid: &Grid, zero: impl Fn([f64; 2]) -> bool) -> Self {
        let states = (0..grid.slab_count())
            .map(|s| if zero(grid.slab_point(s)) { Phase::Zero } else { Phase::Positive })
            .collect();
        Self { grid: grid.clone(), states }
    }

    /// Mask `{u > 0}` read off a field's trace.
    pub fn from_field(field: &ScalarField) -> Self {
        let states = field
            .slab_values()
            .into_iter()
            .map(|v| if v > 0.0 { Phase::Positive } else { Phase::Zero })
            .collect();
        Self { grid: field.grid().clone(), states }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn states(&self) -> &[Phase] {
        &self.states
    }
    pub fn get(&self, s: usize) -> Phase {
        self.states[s]
    }
    pub fn set(&mut self, s: usize, p: Phase) {
        self.states[s] = p;
    }
    pub fn is_zero(&self, s: usize) -> bool {
        self.states[s] == Phase::Zero
    }

    pub fn zero_nodes(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&s| self.is_zero(s)).collect()
    }

    pub fn count(&self, p: Phase) -> usize {
        self.states.iter().filter(|&&q| q == p).count()
    }

    /// Slab neighbours of `s` along the thin axes.
    pub fn neighbors(&self, s: usize) -> Vec<usize> {
        slab_neighbors(&self.grid, s)
    }
}

pub fn slab_neighbors(grid: &Grid, s: usize) -> Vec<usize> {
    let (i0, i1) = grid.slab_unindex(s);
    let nx = grid.nx();
    let mut out = Vec::with_capacity(4);
    if i0 > 0 {
        out.push(grid.slab_index(i0 - 1, i1));
    }
    if i0 + 1 < nx[0] {
        out.push(grid.slab_index(i0 + 1, i1));
    }
    if grid.n() == 2 {
        if i1 > 0 {
            out.push(grid.slab_index(i0, i1 - 1));
        }
        if i1 + 1 < nx[1] {
            out.push(grid.slab_index(i0, i1 + 1));
        }
    }
    out
}

/// Node weights `∫_cell |y|^β dx` of the dual cells, both half-spaces
/// included: a node at height `y > 0` also stands for its mirror image.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeasure {
    grid: Grid,
    cell_weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(grid: &Grid) -> Self {
        let h = grid.h();
        let beta = grid.beta();
        let ny = grid.ny();
        let row: Vec<f64> = (0..ny)
            .map(|j| {
                let y = j as f64 * h;
                let lo = (y - 0.5 * h).max(0.0);
                let hi = if j + 1 == ny { y } else { y + 0.5 * h };
                2.0 * power_integral(lo, hi, beta)
            })
            .collect();
        // Dual cells of lateral boundary nodes are cut in half per axis.
        let thin_factor = |a: usize, i: usize| {
            if grid.n() <= a {
                1.0
            } else if i == 0 || i + 1 == grid.nx()[a] {
                0.5 * h
            } else {
                h
            }
        };
        let mut cell_weights = vec![0.0; grid.node_count()];
        for i0 in 0..grid.nx()[0] {
            for i1 in 0..grid.nx()[1] {
                let area = thin_factor(0, i0) * thin_factor(1, i1);
                for (j, rw) in row.iter().enumerate() {
                    cell_weights[grid.index(i0, i1, j)] = area * rw;
                }
            }
        }
        Self { grid: grid.clone(), cell_weights }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    /// Weighted measure of the nodes inside the closed ball about `(c, 0)`.
    pub fn ball_weight(&self, c: [f64; 2], r: f64) -> f64 {
        let g = &self.grid;
        ball_nodes(g, c, r).into_iter().map(|i| self.cell_weights[i]).sum()
    }
}

/// Nodes of the upper half inside the closed ball of radius `r` about `(c, 0)`.
pub fn ball_nodes(grid: &Grid, c: [f64; 2], r: f64) -> Vec<usize> {
    let h = grid.h();
    let r2 = r * r * (1.0 + 1e-12);
    let range = |a: usize| -> (usize, usize) {
        if grid.n() <= a {
            return (0, 0);
        }
        let lo = ((c[a] - r - grid.origin()[a]) / h).ceil().max(0.0) as usize;
        let hi = (((c[a] + r - grid.origin()[a]) / h).floor().max(-1.0) + 1.0) as usize;
        (lo, hi.min(grid.nx()[a]))
    };
    let (a0, b0) = range(0);
    let (a1, b1) = if grid.n() == 2 { range(1) } else { (0, 1) };
    let jmax = ((r / h).floor() as usize + 1).min(grid.ny());
    let mut out = Vec::new();
    for i0 in a0..b0 {
        let d0 = grid.thin_coord(0, i0) - c[0];
        for i1 in a1..b1 {
            let d1 = if grid.n() == 2 { grid.thin_coord(1, i1) - c[1] } else { 0.0 };
            for j in 0..jmax {
                let y = grid.y_coord(j);
                if d0 * d0 + d1 * d1 + y * y <= r2 {
                    out.push(grid.index(i0, i1, j));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn counts_of_small_grid() {
        let g = build_grid(GridSpec::new(1, 0.5, 1.0, 0.25).unwrap()).unwrap();
        assert_eq!(g.nx(), [9, 1]);
        assert_eq!(g.ny(), 5);
        assert_eq!(g.node_count(), 45);
        assert_eq!(g.spec().counts(), vec![9, 5]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(1, 0.5, 1.0, 0.3).is_err());
        assert!(GridSpec::new(1, 0.01, 1.0, 0.25).is_err());
        assert!(GridSpec::new(1, 1.0, 1.0, 0.25).is_err());
        assert!(GridSpec::new(3, 0.5, 1.0, 0.25).is_err());
        assert!(GridSpec::new(2, 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn unit_weights_when_beta_vanishes() {
        let g = build_grid(GridSpec::new(2, 0.5, 1.0, 0.125).unwrap()).unwrap();
        for j in 0..g.ny() - 1 {
            assert_relative_eq!(g.mean_face_weight(j), 1.0, epsilon = 1e-14);
            assert_relative_eq!(g.vertical_link_weight(j), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn lowest_face_weight_closed_form() {
        let h = 1.0 / 64.0;
        let g = build_grid(GridSpec::new(1, 0.25, 1.0, h).unwrap()).unwrap();
        assert_relative_eq!(g.mean_face_weight(0), (2.0 / 3.0) * h.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn index_roundtrip() {
        let g = build_grid(GridSpec::new(2, 0.3, 1.0, 0.25).unwrap()).unwrap();
        for idx in 0..g.node_count() {
            let (a, b, c) = g.unindex(idx);
            assert_eq!(g.index(a, b, c), idx);
        }
        let p = g.point(g.index(4, 4, 0));
        assert_eq!(p, Point::new([0.0, 0.0], 0.0));
    }

    #[test]
    fn coarsen_keeps_center_node() {
        let g = build_grid(GridSpec::new(1, 0.5, 1.0, 0.125).unwrap()).unwrap();
        let c = g.coarsen([0, 0]).unwrap();
        assert_eq!(c.nx()[0], 9);
        assert_eq!(c.ny(), 5);
        assert_eq!(c.origin()[0], -1.0);
        let odd = g.coarsen([1, 0]).unwrap();
        assert_eq!(odd.nx()[0], 8);
        assert_relative_eq!(odd.origin()[0], -0.875);
        let f = ScalarField::from_fn(&g, |p| p.x[0] + 3.0 * p.y);
        let fc = f.restrict(&odd).unwrap();
        for i in 0..fc.values().len() {
            let p = odd.point(i);
            assert_relative_eq!(fc.values()[i], p.x[0] + 3.0 * p.y, epsilon = 1e-14);
        }
    }

    #[test]
    fn ball_weight_converges_to_closed_form() {
        // ∫_{-1}^{1} ∫_{-√(1-x²)}^{√(1-x²)} |y|^β dy dx by fine midpoint quadrature in x.
        let alpha = 0.3;
        let beta = 1.0 - 2.0 * alpha;
        let exact = {
            let m = 20000;
            (0..m)
                .map(|k| {
                    let x = -1.0 + (k as f64 + 0.5) * 2.0 / m as f64;
                    2.0 * (1.0 - x * x).sqrt().powf(1.0 + beta) / (1.0 + beta) * 2.0 / m as f64
                })
                .sum::<f64>()
        };
        let mut errs = vec![];
        for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
            let g = build_grid(GridSpec::new(1, alpha, 1.5, h).unwrap()).unwrap();
            let w = WeightedMeasure::new(&g).ball_weight([0.0, 0.0], 1.0);
            errs.push((w - exact).abs() / exact);
        }
        assert!(errs[2] < 0.01, "{errs:?}");
        assert!(errs[2] < errs[0]);
    }

    #[test]
    fn all_cell_weights_positive() {
        for alpha in [0.05, 0.5, 0.95] {
            let g = build_grid(GridSpec::new(2, alpha, 0.5, 0.125).unwrap()).unwrap();
            let w = WeightedMeasure::new(&g);
            assert!(w.cell_weights().iter().all(|&v| v > 0.0 && v.is_finite()));
        }
    }
}
