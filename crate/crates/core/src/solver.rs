//! Minimization of the discrete functional over thin masks.
//!
//! For a fixed zero set the optimal field is the ℒ-harmonic extension of the
//! boundary data, so the discrete problem is a search over slab labels. Small
//! problems are enumerated; larger ones are swept with exact re-solves.
//!
//! Every evaluated labeling is replaced by its canonical mask `{u > 0}`, the
//! set the thin-area term actually sees.

use crate::cg::CgConfig;
use crate::energy::{eval_j_local, EnergyBreakdown, Region};
use crate::error::{Error, Result};
use crate::extension::{minimizing_amplitude, trivial_value};
use crate::grid::{slab_neighbors, Grid, Phase, ScalarField, ThinMask};
use crate::operator::{clamp_values, node_residual, DirichletSystem};
use crate::rng::SplitMix64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

pub const MAX_EXHAUSTIVE: usize = 24;
pub const MAX_BRUTE_FORCE: usize = 20;

/// Relative energy gap below which two masks count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub flip_tolerance: f64,
    pub max_outer_iters: usize,
    pub exhaustive_threshold: usize,
    pub cg: CgConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { flip_tolerance: 1e-9, max_outer_iters: 200, exhaustive_threshold: 16, cg: CgConfig::default() }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.flip_tolerance >= 0.0) {
            return Err(Error::InvalidArgument("flip_tolerance must be >= 0".into()));
        }
        if self.exhaustive_threshold > MAX_EXHAUSTIVE {
            return Err(Error::InvalidArgument(format!(
                "exhaustive_threshold must be <= {MAX_EXHAUSTIVE}"
            )));
        }
        Ok(())
    }
}

/// An accepted move: a single node, or a whole phase component named by its
/// smallest node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flip {
    pub node: usize,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub field: ScalarField,
    pub mask: ThinMask,
    pub energy: EnergyBreakdown,
    /// Outer sweeps, or masks enumerated on the exhaustive path.
    pub iterations: usize,
    pub converged: bool,
    pub flips_log: Vec<Flip>,
}

#[derive(Debug, Clone)]
struct Candidate {
    field: ScalarField,
    mask: ThinMask,
    energy: EnergyBreakdown,
}

fn check_boundary(grid: &Grid, boundary: &ScalarField) -> Result<()> {
    if !boundary.grid().same_layout(grid) {
        return Err(Error::ShapeMismatch("boundary data on a different grid".into()));
    }
    for (idx, &v) in boundary.values().iter().enumerate() {
        if grid.on_boundary(idx) && v < 0.0 {
            return Err(Error::InvalidArgument(format!("negative boundary value {v} at node {idx}")));
        }
    }
    Ok(())
}

/// Slab nodes whose label is free (not on the box boundary).
fn free_slab(grid: &Grid) -> Vec<usize> {
    grid.free_slab_nodes()
}

fn finish(field: ScalarField) -> Result<Candidate> {
    let mask = ThinMask::from_field(&field);
    let energy = eval_j_local(&field, &Region::Domain)?;
    Ok(Candidate { field, mask, energy })
}

/// Solve with the given zero set, warm-started from `warm` when present.
fn evaluate(grid: &Grid, fixed: &[f64], zero: &ThinMask, warm: Option<&[f64]>, cg: &CgConfig) -> Result<(Candidate, bool)> {
    let sys = DirichletSystem::new(grid, zero);
    let mut u = fixed.to_vec();
    if let Some(w) = warm {
        for (i, v) in u.iter_mut().enumerate() {
            if sys.is_free(i) {
                *v = w[i];
            }
        }
    }
    let outcome = sys.solve(&mut u, cg);
    for v in u.iter_mut() {
        // Round-off can leave tiny negatives next to clamped zeros.
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok((finish(ScalarField::new(grid.clone(), u)?)?, outcome.converged))
}

/// ZERO-set order: sorted slab indices compared lexicographically.
fn zero_set_cmp(a: &ThinMask, b: &ThinMask) -> Ordering {
    a.zero_nodes().cmp(&b.zero_nodes())
}

fn better(new: &Candidate, best: &Candidate) -> bool {
    let (e1, e0) = (new.energy.total, best.energy.total);
    let tol = TIE_TOL * e0.abs().max(1.0);
    if e1 < e0 - tol {
        true
    } else if e1 <= e0 + tol {
        zero_set_cmp(&new.mask, &best.mask) == Ordering::Less
    } else {
        false
    }
}

fn mask_from_bits(grid: &Grid, free: &[usize], bits: u64) -> ThinMask {
    let mut mask = ThinMask::empty(grid);
    for (k, &s) in free.iter().enumerate() {
        if bits >> k & 1 == 1 {
            mask.set(s, Phase::Zero);
        }
    }
    mask
}

fn into_result(c: Candidate, iterations: usize, converged: bool, flips_log: Vec<Flip>) -> SolveResult {
    SolveResult { field: c.field, mask: c.mask, energy: c.energy, iterations, converged, flips_log }
}

/// Minimize the discrete functional with the given outer boundary data.
///
/// Only boundary-node entries of `boundary` are read.
pub fn minimize(grid: &Grid, boundary: &ScalarField, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    check_boundary(grid, boundary)?;
    let free = free_slab(grid);
    if free.len() <= cfg.exhaustive_threshold {
        exhaustive(grid, boundary, &free, cfg)
    } else {
        sweep(grid, boundary, &free, cfg)
    }
}

fn exhaustive(grid: &Grid, boundary: &ScalarField, free: &[usize], cfg: &SolveConfig) -> Result<SolveResult> {
    let fixed = clamp_values(grid, &ThinMask::empty(grid), boundary)?;
    let mut best: Option<Candidate> = None;
    let mut converged = true;
    let total = 1u64 << free.len();
    for bits in 0..total {
        let zero = mask_from_bits(grid, free, bits);
        let (cand, ok) = evaluate(grid, &fixed, &zero, None, &cfg.cg)?;
        converged &= ok;
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    Ok(into_result(best.expect("at least one mask"), total as usize, converged, Vec::new()))
}

/// Initial zero set: free slab nodes below the median of the unconstrained trace.
fn median_start(grid: &Grid, free: &[usize], unconstrained: &ScalarField) -> ThinMask {
    let slab = unconstrained.slab_values();
    let mut vals: Vec<f64> = free.iter().map(|&s| slab[s]).collect();
    vals.sort_by(f64::total_cmp);
    let median = vals[vals.len() / 2];
    let mut mask = ThinMask::empty(grid);
    for &s in free {
        if slab[s] < median {
            mask.set(s, Phase::Zero);
        }
    }
    mask
}

/// Slab cells (as lists of corner slab indices) containing `s`.
fn cells_at(grid: &Grid, s: usize) -> Vec<Vec<usize>> {
    let (i0, i1) = grid.slab_unindex(s);
    let nx = grid.nx();
    let mut out = Vec::new();
    let lo = |i: usize| if i > 0 { vec![i - 1, i] } else { vec![i] };
    for a in lo(i0) {
        if a + 1 >= nx[0] {
            continue;
        }
        if grid.n() == 1 {
            out.push(vec![grid.slab_index(a, 0), grid.slab_index(a + 1, 0)]);
            continue;
        }
        for b in lo(i1) {
            if b + 1 >= nx[1] {
                continue;
            }
            out.push(vec![
                grid.slab_index(a, b),
                grid.slab_index(a + 1, b),
                grid.slab_index(a, b + 1),
                grid.slab_index(a + 1, b + 1),
            ]);
        }
    }
    out
}

/// Clamping a positive node can only lower the energy if some cell loses all
/// of its positive corners: the Dirichlet term never decreases under an
/// added constraint and the other nodes stay positive through the bulk.
fn clamp_can_help(grid: &Grid, slab: &[f64], s: usize) -> bool {
    cells_at(grid, s).iter().any(|cell| cell.iter().all(|&t| t == s || slab[t] <= 0.0))
}

/// Upper bound on the energy a released zero node can save, against the
/// area it adds. Releasing `s` lowers the Dirichlet term by
/// `2 h^{n-1} r² (A_F⁻¹)_ss`. The diagonal `(A_F⁻¹)_ss` is the effective
/// resistance from `s` to the grounded nodes, which only grows as nodes are
/// clamped or links removed (Rayleigh monotonicity). The straight paths from
/// `s` to the box boundary give a cheap bound; the all-free Green diagonal,
/// computed on demand, a sharp one.
struct ReleaseBound {
    system: DirichletSystem,
    loose: CgConfig,
    paths: Vec<f64>,
    green: Vec<Option<f64>>,
    scale: f64,
    cell_area: f64,
}

fn path_resistance(grid: &Grid, s: usize) -> f64 {
    let w = grid.weights();
    let up: f64 = w.conductance.iter().map(|c| c.recip()).sum();
    let wt = grid.thin_link_weight(0);
    let (i0, i1) = grid.slab_unindex(s);
    let nx = grid.nx();
    let mut conductance = up.recip();
    let mut add = |links: usize| conductance += wt / links as f64;
    add(i0);
    add(nx[0] - 1 - i0);
    if grid.n() == 2 {
        add(i1);
        add(nx[1] - 1 - i1);
    }
    conductance.recip()
}

impl ReleaseBound {
    fn new(grid: &Grid, cg: &CgConfig) -> Self {
        let paths = (0..grid.slab_count()).map(|s| path_resistance(grid, s)).collect();
        let n = grid.n() as i32;
        Self {
            system: DirichletSystem::new(grid, &ThinMask::empty(grid)),
            // A loose solve suffices: the bound carries a factor 2 of slack.
            loose: CgConfig { rel_tol: cg.rel_tol.max(1e-8), ..*cg },
            paths,
            green: vec![None; grid.slab_count()],
            scale: 2.0 * grid.h().powi(n - 1),
            cell_area: grid.h().powi(n),
        }
    }

    fn can_help(&mut self, grid: &Grid, u: &[f64], slab: &[f64], s: usize, tol: f64) -> Result<bool> {
        let r = node_residual(grid, u, grid.slab_node(s, 0));
        let cells = cells_at(grid, s).iter().filter(|c| c.iter().all(|&t| slab[t] <= 0.0)).count();
        let gained = self.cell_area * cells as f64 - tol;
        if self.scale * r * r * self.paths[s] <= gained {
            return Ok(false);
        }
        let g = match self.green[s] {
            Some(g) => g,
            None => {
                let g = self.system.green_diagonal(&[grid.slab_node(s, 0)], &self.loose)?[0];
                self.green[s] = Some(g);
                g
            }
        };
        Ok(self.scale * r * r * g * 2.0 > gained)
    }
}

/// Connected components (slab neighbours) of equal phase among the free slab nodes.
fn phase_components(grid: &Grid, free: &[usize], mask: &ThinMask) -> Vec<Vec<usize>> {
    let mut is_free = vec![false; grid.slab_count()];
    for &s in free {
        is_free[s] = true;
    }
    let mut seen = vec![false; grid.slab_count()];
    let mut out = Vec::new();
    for &s in free {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let zero = mask.is_zero(s);
        let mut comp = vec![s];
        let mut k = 0;
        while k < comp.len() {
            for t in slab_neighbors(grid, comp[k]) {
                if is_free[t] && !seen[t] && mask.is_zero(t) == zero {
                    seen[t] = true;
                    comp.push(t);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn sweep(grid: &Grid, boundary: &ScalarField, free: &[usize], cfg: &SolveConfig) -> Result<SolveResult> {
    let fixed = clamp_values(grid, &ThinMask::empty(grid), boundary)?;
    let (start, ok0) = evaluate(grid, &fixed, &ThinMask::empty(grid), None, &cfg.cg)?;
    let init = median_start(grid, free, &start.field);
    let (mut cur, mut ok) = evaluate(grid, &fixed, &init, Some(start.field.values()), &cfg.cg)?;
    ok &= ok0;
    let mut bound = ReleaseBound::new(grid, &cfg.cg);
    let mut log = Vec::new();
    let mut iterations = 0;
    let mut settled = false;
    while iterations < cfg.max_outer_iters {
        iterations += 1;
        let mut flips = 0;
        for &s in free {
            let slab = cur.field.slab_values();
            let mut trial = cur.mask.clone();
            match cur.mask.get(s) {
                Phase::Positive => {
                    if !clamp_can_help(grid, &slab, s) {
                        continue;
                    }
                    trial.set(s, Phase::Zero);
                }
                Phase::Zero => {
                    if !bound.can_help(grid, cur.field.values(), &slab, s, cfg.flip_tolerance)? {
                        continue;
                    }
                    trial.set(s, Phase::Positive);
                }
            }
            let (cand, good) = evaluate(grid, &fixed, &trial, Some(cur.field.values()), &cfg.cg)?;
            let delta = cand.energy.total - cur.energy.total;
            if good && delta < -cfg.flip_tolerance {
                log.push(Flip { node: s, delta });
                cur = cand;
                flips += 1;
            }
            ok &= good;
        }
        if flips > 0 {
            continue;
        }
        // Single flips are stuck; try flipping whole phase components.
        let mut moved = false;
        for comp in phase_components(grid, free, &cur.mask) {
            let mut trial = cur.mask.clone();
            let to = if cur.mask.is_zero(comp[0]) { Phase::Positive } else { Phase::Zero };
            for &s in &comp {
                trial.set(s, to);
            }
            let (cand, good) = evaluate(grid, &fixed, &trial, Some(cur.field.values()), &cfg.cg)?;
            let delta = cand.energy.total - cur.energy.total;
            ok &= good;
            if good && delta < -cfg.flip_tolerance {
                log.push(Flip { node: comp[0], delta });
                cur = cand;
                moved = true;
                break;
            }
        }
        if !moved {
            settled = true;
            break;
        }
    }
    Ok(into_result(cur, iterations, settled && ok, log))
}

/// Dense free-node system for the all-free labeling: matrix, right-hand side
/// contribution of the fixed values, and the free node list.
struct DenseSystem {
    nodes: Vec<usize>,
    slab_pos: Vec<Option<usize>>,
    a: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl DenseSystem {
    fn new(grid: &Grid, fixed: &[f64]) -> Self {
        let sys = DirichletSystem::new(grid, &ThinMask::empty(grid));
        let nodes: Vec<usize> = (0..grid.node_count()).filter(|&i| sys.is_free(i)).collect();
        let m = nodes.len();
        let total = grid.node_count();
        let mut a = DMatrix::zeros(m, m);
        let mut e = vec![0.0; total];
        let mut col = vec![0.0; total];
        for (c, &i) in nodes.iter().enumerate() {
            e[i] = 1.0;
            sys.apply(&e, &mut col);
            e[i] = 0.0;
            for (r, &k) in nodes.iter().enumerate() {
                a[(r, c)] = col[k];
            }
        }
        let mut shifted = fixed.to_vec();
        for &i in &nodes {
            shifted[i] = 0.0;
        }
        sys.apply(&shifted, &mut col);
        let rhs = DVector::from_iterator(m, nodes.iter().map(|&k| -col[k]));
        let mut slab_pos = vec![None; total];
        for (r, &k) in nodes.iter().enumerate() {
            slab_pos[k] = Some(r);
        }
        Self { nodes, slab_pos, a, rhs }
    }

    fn solve(&self, grid: &Grid, fixed: &[f64], zero: &ThinMask) -> Result<Vec<f64>> {
        let clamped: Vec<usize> = zero
            .zero_nodes()
            .into_iter()
            .filter_map(|s| self.slab_pos[grid.slab_node(s, 0)])
            .collect();
        let keep: Vec<usize> = (0..self.nodes.len()).filter(|r| !clamped.contains(r)).collect();
        let m = keep.len();
        let sub = DMatrix::from_fn(m, m, |r, c| self.a[(keep[r], keep[c])]);
        let rhs = DVector::from_fn(m, |r, _| self.rhs[keep[r]]);
        let chol = sub
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("free-node matrix is not positive definite".into()))?;
        let x = chol.solve(&rhs);
        let mut u = fixed.to_vec();
        for &r in &clamped {
            u[self.nodes[r]] = 0.0;
        }
        for (p, &r) in keep.iter().enumerate() {
            u[self.nodes[r]] = x[p].max(0.0);
        }
        Ok(u)
    }
}

/// Global discrete minimizer by enumeration of every thin mask, with dense
/// Cholesky solves. Independent of the iterative path.
pub fn brute_force_minimize(grid: &Grid, boundary: &ScalarField) -> Result<SolveResult> {
    check_boundary(grid, boundary)?;
    let free = free_slab(grid);
    if free.len() > MAX_BRUTE_FORCE {
        return Err(Error::TooManyFreeNodes(free.len()));
    }
    let fixed = clamp_values(grid, &ThinMask::empty(grid), boundary)?;
    let dense = DenseSystem::new(grid, &fixed);
    let mut best: Option<Candidate> = None;
    let total = 1u64 << free.len();
    for bits in 0..total {
        let zero = mask_from_bits(grid, &free, bits);
        let u = dense.solve(grid, &fixed, &zero)?;
        let cand = finish(ScalarField::new(grid.clone(), u)?)?;
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    Ok(into_result(best.expect("at least one mask"), total as usize, true, Vec::new()))
}

/// Energy change of every admissible single-node flip of a result, by exact re-solve.
pub fn flip_deltas(result: &SolveResult, boundary: &ScalarField, cg: &CgConfig) -> Result<Vec<Flip>> {
    let grid = result.field.grid();
    let fixed = clamp_values(grid, &ThinMask::empty(grid), boundary)?;
    let mut out = Vec::new();
    for s in free_slab(grid) {
        let mut trial = result.mask.clone();
        trial.set(s, if result.mask.is_zero(s) { Phase::Positive } else { Phase::Zero });
        let (cand, _) = evaluate(grid, &fixed, &trial, Some(result.field.values()), cg)?;
        out.push(Flip { node: s, delta: cand.energy.total - result.energy.total });
    }
    Ok(out)
}

/// Boundary data generators.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    /// The minimizing multiple `c U` of the trivial solution along the last thin axis.
    TrivialTrace,
    Constant(f64),
    /// A seeded perturbation of `c U`: shifted front, amplitude, a multiple of
    /// the next homogeneous solution and small angular modes. In 2D the front
    /// is also tilted and bent.
    Random(u64),
    /// Independent uniform values in `[0, scale)` at every boundary node.
    Uniform { seed: u64, scale: f64 },
}

impl BoundaryData {
    pub fn build(&self, grid: &Grid) -> Result<ScalarField> {
        let alpha = grid.alpha();
        let n = grid.n();
        let axis = n - 1;
        let c = minimizing_amplitude(alpha);
        let field = match *self {
            BoundaryData::TrivialTrace => ScalarField::from_fn(grid, |p| c * trivial_value(alpha, p.x[axis], p.y)),
            BoundaryData::Constant(v) => {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("constant boundary value {v} must be >= 0")));
                }
                ScalarField::constant(grid, v)
            }
            BoundaryData::Random(seed) => {
                let mut rng = SplitMix64::new(seed);
                let r = grid.spec().half_extent;
                let theta = if n == 2 { rng.uniform(-0.6, 0.6) } else { 0.0 };
                let d = [theta.cos(), theta.sin()];
                let shift = rng.uniform(-0.1, 0.1) * r;
                let amp = rng.uniform(0.9, 1.1);
                // a negative multiple destabilizes the front
                let kappa = rng.uniform(0.4, 0.8) / r;
                let (bend, phase) = (rng.uniform(-0.1, 0.1) * r, rng.uniform(0.0, TAU));
                let modes: Vec<(f64, f64)> = (1..=3).map(|_| (rng.uniform(-0.05, 0.05), rng.uniform(0.0, TAU))).collect();
                ScalarField::from_fn(grid, |p| {
                    let (t, q) = if n == 2 {
                        (p.x[0] * d[1] + p.x[1] * d[0], p.x[1] * d[1] - p.x[0] * d[0])
                    } else {
                        (p.x[0], 0.0)
                    };
                    let t = t - shift - if n == 2 { bend * (PI * q / r + phase).sin() } else { 0.0 };
                    let rho = t.hypot(p.y);
                    // U + κW with W = U (t - αρ) the next homogeneous solution
                    let base = trivial_value(alpha, t, p.y) * (1.0 + kappa * (t - alpha * rho));
                    let phi = p.y.atan2(t);
                    let m: f64 = modes.iter().enumerate().map(|(k, (a, ph))| a * ((k + 1) as f64 * phi + ph).cos()).sum();
                    (c * amp * base * (1.0 + m)).max(0.0)
                })
            }
            BoundaryData::Uniform { seed, scale } => {
                let mut rng = SplitMix64::new(seed);
                let vals = (0..grid.node_count())
                    .map(|i| if grid.on_boundary(i) { scale * rng.next_f64() } else { 0.0 })
                    .collect();
                ScalarField::new(grid.clone(), vals)?
            }
        };
        Ok(field)
    }
}
