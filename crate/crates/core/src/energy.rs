//! The local functional, its nonlocal trace form, the Weiss density and the
//! flux identity.
//!
//! The Dirichlet term is a sum over grid cells. A cell between node rows
//! `j` and `j+1` owns its thin edges at the bottom level with weight
//! `lower_half[j]`, those at the top level with `upper_half[j]` (split among
//! the `2^{n-1}` cells sharing an edge), and its vertical edges with the
//! row conductance split among `2^n` cells. Summing the cells reproduces the
//! quadratic form of the operator; doubling accounts for the mirror half.
//!
//! The thin area is the measure of the set where the piecewise-linear
//! interpolant of the trace is positive: every slab cell with a positive
//! corner counts in full.

use crate::error::{Error, Result};
use crate::extension::ThinFunction;
use crate::grid::{thin_point, Grid, ScalarField};
use crate::interp::Interpolant;
use crate::quadrature::{box_distance2, composite_gauss, thin_cell_fraction, weighted_quantiles, SphereRule};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Subsamples per axis for cells cut by a sphere.
fn cut_samples(n: usize) -> usize {
    if n == 1 {
        32
    } else {
        10
    }
}

/// Angular panels per mesh width of arc in sphere integrals.
const SPHERE_PANELS_PER_H: f64 = 4.0;
const DEFICIT_PANELS_PER_H: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    pub thin_area: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(dirichlet: f64, thin_area: f64) -> Self {
        Self { dirichlet, thin_area, total: dirichlet + thin_area }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// The whole stored box.
    Domain,
    /// Ball about a slab point.
    Ball { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn ball(n: usize, center: &[f64], radius: f64) -> Result<Self> {
        Ok(Region::Ball { center: thin_point(n, center)?, radius })
    }
}

/// Upper-half cell energy `h^{n-1} Σ w (Δu)²` of the cell with lower corner `(i0, i1, j)`.
#[inline]
fn cell_energy(field: &ScalarField, i0: usize, i1: usize, j: usize) -> f64 {
    let g = field.grid();
    let w = g.weights();
    let (lo, hi, cv) = (w.lower_half[j], w.upper_half[j], w.conductance[j]);
    let u = |a: usize, b: usize, k: usize| field.at(i0 + a, i1 + b, j + k);
    if g.n() == 1 {
        let d = |a: f64, b: f64| (a - b) * (a - b);
        lo * d(u(0, 0, 0), u(1, 0, 0))
            + hi * d(u(0, 0, 1), u(1, 0, 1))
            + 0.5 * cv * (d(u(0, 0, 0), u(0, 0, 1)) + d(u(1, 0, 0), u(1, 0, 1)))
    } else {
        let d = |a: f64, b: f64| (a - b) * (a - b);
        let mut thin = [0.0; 2];
        for (k, t) in thin.iter_mut().enumerate() {
            *t = d(u(0, 0, k), u(1, 0, k)) + d(u(0, 1, k), u(1, 1, k)) + d(u(0, 0, k), u(0, 1, k)) + d(u(1, 0, k), u(1, 1, k));
        }
        let vert = d(u(0, 0, 0), u(0, 0, 1)) + d(u(1, 0, 0), u(1, 0, 1)) + d(u(0, 1, 0), u(0, 1, 1)) + d(u(1, 1, 0), u(1, 1, 1));
        g.h() * (0.5 * lo * thin[0] + 0.5 * hi * thin[1] + 0.25 * cv * vert)
    }
}

fn cell_ranges(g: &Grid) -> [usize; 2] {
    [g.nx()[0] - 1, if g.n() == 2 { g.nx()[1] - 1 } else { 1 }]
}

/// Index range of cells along a thin axis that meet `[c - r, c + r]`.
fn axis_cells(g: &Grid, a: usize, c: f64, r: f64) -> (usize, usize) {
    let h = g.h();
    let cells = g.nx()[a] - 1;
    let lo = ((c - r - g.origin()[a]) / h).floor().max(0.0) as usize;
    let hi = ((((c + r - g.origin()[a]) / h).ceil()).max(0.0) as usize).min(cells);
    (lo.min(cells), hi)
}

/// Share of a cell's energy inside the ball of radius `r` about `(c, 0)`, with
/// the multilinear gradient density sampled at weight-quantile points.
fn cell_ball_fraction(field: &ScalarField, c: [f64; 2], r: f64, i0: usize, i1: usize, j: usize, yq: &[f64]) -> f64 {
    let g = field.grid();
    let h = g.h();
    let n = g.n();
    let lo = [g.thin_coord(0, i0), if n == 2 { g.thin_coord(1, i1) } else { 0.0 }, g.y_coord(j)];
    let hi = [lo[0] + h, if n == 2 { lo[1] + h } else { 0.0 }, lo[2] + h];
    let cc = [c[0], if n == 2 { c[1] } else { 0.0 }, 0.0];
    let (near, far) = box_distance2(&cc, &lo, &hi);
    let r2 = r * r;
    if far <= r2 {
        return 1.0;
    }
    if near >= r2 {
        return 0.0;
    }
    let u = |a: usize, b: usize, k: usize| field.at(i0 + a, i1 + b, j + k);
    let m = cut_samples(n);
    let mb = if n == 2 { m } else { 1 };
    let (mut inside, mut total) = (0.0, 0.0);
    for a in 0..m {
        let s = (a as f64 + 0.5) / m as f64;
        let dx = lo[0] + s * h - cc[0];
        for b in 0..mb {
            let t = if n == 2 { (b as f64 + 0.5) / m as f64 } else { 0.0 };
            let dy = if n == 2 { lo[1] + t * h - cc[1] } else { 0.0 };
            for &y in yq {
                let q = ((y - lo[2]) / h).clamp(0.0, 1.0);
                // differences of the multilinear interpolant along each axis
                let lerp2 = |f: &dyn Fn(usize, usize) -> f64, p: f64, w: f64| {
                    (1.0 - p) * (1.0 - w) * f(0, 0) + p * (1.0 - w) * f(1, 0) + (1.0 - p) * w * f(0, 1) + p * w * f(1, 1)
                };
                let dens = if n == 1 {
                    let ux = (1.0 - q) * (u(1, 0, 0) - u(0, 0, 0)) + q * (u(1, 0, 1) - u(0, 0, 1));
                    let uy = (1.0 - s) * (u(0, 0, 1) - u(0, 0, 0)) + s * (u(1, 0, 1) - u(1, 0, 0));
                    ux * ux + uy * uy
                } else {
                    let ux = lerp2(&|b1, k| u(1, b1, k) - u(0, b1, k), t, q);
                    let uz = lerp2(&|a1, k| u(a1, 1, k) - u(a1, 0, k), s, q);
                    let uy = lerp2(&|a1, b1| u(a1, b1, 1) - u(a1, b1, 0), s, t);
                    ux * ux + uy * uy + uz * uz
                };
                let dens = dens + 1e-300;
                total += dens;
                if dx * dx + dy * dy + y * y <= r2 {
                    inside += dens;
                }
            }
        }
    }
    inside / total
}

/// `∫_{B_r(c)} |y|^β |∇u|²` over both half-balls.
pub fn ball_dirichlet(field: &ScalarField, c: [f64; 2], r: f64) -> f64 {
    let g = field.grid();
    let h = g.h();
    let (a0, b0) = axis_cells(g, 0, c[0], r);
    let (a1, b1) = if g.n() == 2 { axis_cells(g, 1, c[1], r) } else { (0, 1) };
    let rows = (((r / h).ceil()) as usize).min(g.ny() - 1);
    let yq: Vec<Vec<f64>> =
        (0..rows).map(|j| weighted_quantiles(j as f64 * h, (j + 1) as f64 * h, g.beta(), cut_samples(g.n()))).collect();
    let mut acc = 0.0;
    for i0 in a0..b0 {
        for i1 in a1..b1 {
            for (j, q) in yq.iter().enumerate() {
                let frac = cell_ball_fraction(field, c, r, i0, i1, j, q);
                if frac > 0.0 {
                    acc += frac * cell_energy(field, i0, i1, j);
                }
            }
        }
    }
    2.0 * acc
}

/// Dirichlet energy of the whole stored box, both halves.
pub fn domain_dirichlet(field: &ScalarField) -> f64 {
    let g = field.grid();
    let cr = cell_ranges(g);
    let mut acc = 0.0;
    for i0 in 0..cr[0] {
        for i1 in 0..cr[1] {
            for j in 0..g.ny() - 1 {
                acc += cell_energy(field, i0, i1, j);
            }
        }
    }
    2.0 * acc
}

/// Measure of `{trace > 0}` inside the region (interpolant positivity).
pub fn thin_area(grid: &Grid, trace: &[f64], region: &Region) -> f64 {
    let h = grid.h();
    let n = grid.n();
    let cell_area = h.powi(n as i32);
    let cr = cell_ranges(grid);
    let positive = |i0: usize, i1: usize| {
        let mut any = trace[grid.slab_index(i0, i1)] > 0.0 || trace[grid.slab_index(i0 + 1, i1)] > 0.0;
        if n == 2 {
            any |= trace[grid.slab_index(i0, i1 + 1)] > 0.0 || trace[grid.slab_index(i0 + 1, i1 + 1)] > 0.0;
        }
        any
    };
    let mut acc = 0.0;
    match *region {
        Region::Domain => {
            for i0 in 0..cr[0] {
                for i1 in 0..cr[1] {
                    if positive(i0, i1) {
                        acc += cell_area;
                    }
                }
            }
        }
        Region::Ball { center, radius } => {
            let (a0, b0) = axis_cells(grid, 0, center[0], radius);
            let (a1, b1) = if n == 2 { axis_cells(grid, 1, center[1], radius) } else { (0, 1) };
            for i0 in a0..b0 {
                for i1 in a1..b1 {
                    if positive(i0, i1) {
                        let lo = [grid.thin_coord(0, i0), if n == 2 { grid.thin_coord(1, i1) } else { 0.0 }];
                        acc += cell_area * thin_cell_fraction(n, center, lo, h, radius, 16);
                    }
                }
            }
        }
    }
    acc
}

fn check_region(g: &Grid, region: &Region) -> Result<()> {
    if let Region::Ball { center, radius } = *region {
        g.check_ball(center, radius)?;
    }
    Ok(())
}

/// Local functional `𝒥(v, Ω) = ∫_Ω |y|^β |∇v|² + m({v > 0} ∩ Ω ∩ ℝⁿ)`.
pub fn eval_j_local(field: &ScalarField, region: &Region) -> Result<EnergyBreakdown> {
    let g = field.grid();
    check_region(g, region)?;
    let dirichlet = match *region {
        Region::Domain => domain_dirichlet(field),
        Region::Ball { center, radius } => ball_dirichlet(field, center, radius),
    };
    let area = thin_area(g, &field.slab_values(), region);
    Ok(EnergyBreakdown::new(dirichlet, area))
}

/// Constant `c` with `∫_{ℝ^{n+1}} |y|^β |∇u|² = c ∬ |f(x)-f(ξ)|² / |x-ξ|^{n+2α}` for the
/// extension `u` of `f` by the unit-mass kernel.
pub fn gagliardo_constant(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let d = 2f64.powf(1.0 - 2.0 * alpha) * gamma(1.0 - alpha) / gamma(alpha);
    let c = 4f64.powf(alpha) * gamma(0.5 * nf + alpha) / (PI.powf(0.5 * nf) * gamma(-alpha).abs());
    d * c
}

/// Nonlocal functional on the thin ball `Ω`: the Gagliardo double sum over
/// pairs not both outside `Ω` plus the positive measure inside `Ω`.
///
/// Self-pairs are dropped. In one dimension the data are continued as
/// constants beyond the slab and the far pairs are added in closed form; in
/// two dimensions the sum stops at the slab.
pub fn eval_j_nonlocal(f: &ThinFunction, center: &[f64], radius: f64) -> Result<f64> {
    let g = f.grid();
    let c = thin_point(g.n(), center)?;
    if !(radius > 0.0) || !g.contains_thin_ball(c, radius) {
        return Err(Error::OutOfGrid(format!("thin ball of radius {radius} exits the slab")));
    }
    let n = g.n();
    let alpha = g.alpha();
    let h = g.h();
    let fv = f.values();
    let pts: Vec<[f64; 2]> = (0..g.slab_count()).map(|s| g.slab_point(s)).collect();
    let r2 = radius * radius * (1.0 + 1e-12);
    let inside: Vec<bool> =
        pts.iter().map(|p| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= r2).collect();
    let expo = 0.5 * (n as f64 + 2.0 * alpha);
    let vol = h.powi(n as i32);
    let mut sum = 0.0;
    for p in 0..pts.len() {
        if !inside[p] {
            continue;
        }
        for q in 0..pts.len() {
            if q == p {
                continue;
            }
            let df = fv[p] - fv[q];
            if df == 0.0 {
                continue;
            }
            let d2 = (pts[p][0] - pts[q][0]).powi(2) + (pts[p][1] - pts[q][1]).powi(2);
            // Pairs with both ends in Ω appear twice over the loop, mixed pairs once.
            let mult = if inside[q] { 1.0 } else { 2.0 };
            sum += mult * df * df / d2.powf(expo) * vol * vol;
        }
        if n == 1 {
            let nx = g.nx()[0];
            let left = pts[p][0] - g.origin()[0] + 0.5 * h;
            let right = g.thin_max(0) + 0.5 * h - pts[p][0];
            let tail = |fr: f64, d: f64| (fv[p] - fr).powi(2) * d.powf(-2.0 * alpha) / (2.0 * alpha);
            sum += 2.0 * vol * (tail(fv[0], left) + tail(fv[nx - 1], right));
        }
    }
    let area = thin_area(g, fv, &Region::Ball { center: c, radius });
    Ok(gagliardo_constant(n, alpha) * sum + area)
}

/// `∫_{∂B_r(c)} |y|^β u²`.
pub fn sphere_l2(field: &ScalarField, c: [f64; 2], r: f64) -> Result<f64> {
    let g = field.grid();
    let rule = SphereRule::for_mesh(g.n(), g.beta(), c, r, g.h(), SPHERE_PANELS_PER_H);
    let it = Interpolant::new(field);
    let mut acc = 0.0;
    for q in &rule.points {
        let v = it.value(q.p).ok_or_else(|| Error::OutOfGrid(format!("sphere of radius {r} exits the grid")))?;
        acc += q.weight * v * v;
    }
    Ok(acc)
}

/// `∫_{∂B_r(c)} |y|^β u ∇u·ν`.
pub fn sphere_flux(field: &ScalarField, c: [f64; 2], r: f64) -> Result<f64> {
    let g = field.grid();
    let rule = SphereRule::for_mesh(g.n(), g.beta(), c, r, g.h(), SPHERE_PANELS_PER_H);
    let it = Interpolant::new(field);
    let mut acc = 0.0;
    for q in &rule.points {
        let (v, gr) =
            it.value_grad(q.p).ok_or_else(|| Error::OutOfGrid(format!("sphere of radius {r} exits the grid")))?;
        let dn = gr[0] * q.normal[0] + gr[1] * q.normal[1] + gr[2] * q.normal[2];
        acc += q.weight * v * dn;
    }
    Ok(acc)
}

/// Weiss density on the mesh of `field`, without extrapolation.
pub fn weiss_density_raw(field: &ScalarField, c: [f64; 2], r: f64) -> Result<f64> {
    let g = field.grid();
    g.check_ball(c, r)?;
    let n = g.n() as f64;
    let j = eval_j_local(field, &Region::Ball { center: c, radius: r })?;
    let s = sphere_l2(field, c, r)?;
    Ok(j.total / r.powf(n) - g.alpha() * s / r.powf(n + 1.0))
}

/// Sub-lattice of spacing `2h` through the node nearest to `c`.
pub fn aligned_coarse(field: &ScalarField, c: [f64; 2]) -> Result<ScalarField> {
    let g = field.grid();
    let mut parity = [0usize; 2];
    for (a, p) in parity.iter_mut().enumerate().take(g.n()) {
        let k = ((c[a] - g.origin()[a]) / g.h()).round().max(0.0) as usize;
        *p = k % 2;
    }
    let coarse = g.coarsen(parity)?;
    field.restrict(&coarse)
}

/// `Ψ(r) = 𝒥(B_r)/rⁿ - (α/r^{n+1}) ∫_{∂B_r} |y|^β u²`.
///
/// The mesh value carries an error linear in `h`; the returned value is the
/// extrapolation `2 Ψ_h - Ψ_{2h}` against the sub-lattice through the center.
pub fn weiss_density(field: &ScalarField, center: &[f64], r: f64) -> Result<f64> {
    let c = thin_point(field.grid().n(), center)?;
    weiss_density_at(field, c, r)
}

pub fn weiss_density_at(field: &ScalarField, c: [f64; 2], r: f64) -> Result<f64> {
    let fine = weiss_density_raw(field, c, r)?;
    let coarse_field = aligned_coarse(field, c)?;
    let coarse = weiss_density_raw(&coarse_field, c, r)?;
    Ok(2.0 * fine - coarse)
}

/// `∫_{B_σ∖B_ρ} |y|^β 2 (αu - (x-x₀)·∇u)² / |x-x₀|^{n+2}` by polar quadrature.
pub fn weiss_deficit(field: &ScalarField, c: [f64; 2], rho: f64, sigma: f64) -> Result<f64> {
    let g = field.grid();
    if !(sigma > rho && rho > 0.0) {
        return Err(Error::InvalidArgument(format!("annulus needs 0 < ρ < σ, got {rho}, {sigma}")));
    }
    g.check_ball(c, sigma)?;
    let alpha = g.alpha();
    let n = g.n() as f64;
    let it = Interpolant::new(field);
    let pieces = (((sigma - rho) / g.h()).ceil() as usize).max(1);
    let mut acc = 0.0;
    for (s, ws) in composite_gauss(rho, sigma, pieces, 2) {
        let rule = SphereRule::for_mesh(g.n(), g.beta(), c, s, g.h(), DEFICIT_PANELS_PER_H);
        let mut shell = 0.0;
        for q in &rule.points {
            let (v, gr) = it.value_grad(q.p).ok_or_else(|| Error::OutOfGrid("annulus exits the grid".into()))?;
            let ds = gr[0] * q.normal[0] + gr[1] * q.normal[1] + gr[2] * q.normal[2];
            let e = alpha * v - s * ds;
            shell += q.weight * 2.0 * e * e;
        }
        acc += ws * shell / s.powf(n + 2.0);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeissProfile {
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub psi: Vec<f64>,
    /// Deficit over `B_{r_k} ∖ B_{r_{k-1}}`, one entry per consecutive pair.
    pub deficit: Vec<f64>,
    /// `|Ψ(r_k) - Ψ(r_{k-1}) - deficit_k|`.
    pub identity_gap: Vec<f64>,
    pub max_monotonicity_violation: f64,
    pub max_identity_mismatch: f64,
}

impl WeissProfile {
    pub fn span(&self) -> f64 {
        let max = self.psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.psi.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Rows `(r, psi, deficit_from_prev, identity_gap)`; the first row has no predecessor.
    pub fn rows(&self) -> Vec<(f64, f64, Option<f64>, Option<f64>)> {
        (0..self.radii.len())
            .map(|k| {
                let prev = if k == 0 { None } else { Some(k - 1) };
                (self.radii[k], self.psi[k], prev.map(|p| self.deficit[p]), prev.map(|p| self.identity_gap[p]))
            })
            .collect()
    }
}

pub fn weiss_profile(field: &ScalarField, center: &[f64], radii: &[f64]) -> Result<WeissProfile> {
    let g = field.grid();
    let c = thin_point(g.n(), center)?;
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be nonempty and increasing".into()));
    }
    let psi = radii.iter().map(|&r| weiss_density_at(field, c, r)).collect::<Result<Vec<_>>>()?;
    let mut deficit = Vec::new();
    let mut gap = Vec::new();
    let mut mono: f64 = 0.0;
    for k in 1..radii.len() {
        let d = weiss_deficit(field, c, radii[k - 1], radii[k])?;
        let dpsi = psi[k] - psi[k - 1];
        mono = mono.max(-dpsi);
        gap.push((dpsi - d).abs());
        deficit.push(d);
    }
    let max_gap = gap.iter().cloned().fold(0.0, f64::max);
    Ok(WeissProfile {
        center: c[..g.n()].to_vec(),
        radii: radii.to_vec(),
        psi,
        deficit,
        identity_gap: gap,
        max_monotonicity_violation: mono,
        max_identity_mismatch: max_gap,
    })
}

/// `(∫_{B} |y|^β |∇u|², ∫_{∂B} |y|^β u ∇u·ν)`.
pub fn flux_identity_check(field: &ScalarField, center: &[f64], r: f64) -> Result<(f64, f64)> {
    let g = field.grid();
    let c = thin_point(g.n(), center)?;
    g.check_ball(c, r)?;
    Ok((ball_dirichlet(field, c, r), sphere_flux(field, c, r)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::trivial_solution;
    use crate::grid::{build_grid, GridSpec};
    use crate::grid::ThinMask;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn grid(n: usize, alpha: f64, r: f64, h: f64) -> Grid {
        build_grid(GridSpec::new(n, alpha, r, h).unwrap()).unwrap()
    }

    #[test]
    fn zero_and_constant_fields() {
        let g = grid(1, 0.5, 1.5, 1.0 / 32.0);
        let ball = Region::ball(1, &[0.0], 1.0).unwrap();
        let z = eval_j_local(&ScalarField::zeros(&g), &ball).unwrap();
        assert_eq!(z, EnergyBreakdown::new(0.0, 0.0));
        let one = eval_j_local(&ScalarField::constant(&g, 1.0), &ball).unwrap();
        assert_eq!(one.dirichlet, 0.0);
        assert_relative_eq!(one.thin_area, 2.0, epsilon = 1e-12);
        assert_eq!(weiss_density(&ScalarField::zeros(&g), &[0.0], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn domain_energy_matches_operator_form() {
        // E(u) = Σ_i u_i (A u)_i / 2 summed over a field vanishing on the boundary.
        let g = grid(2, 0.3, 1.0, 0.125);
        let f = ScalarField::from_fn(&g, |p| {
            let b = (1.0 - p.x[0] * p.x[0]) * (1.0 - p.x[1] * p.x[1]) * (1.0 - p.y);
            b * (1.0 + p.x[0] + p.y * p.y)
        });
        let sys = crate::operator::DirichletSystem::new(&g, &ThinMask::empty(&g));
        let mut au = vec![0.0; g.node_count()];
        sys.apply(f.values(), &mut au);
        let quad: f64 = f.values().iter().zip(&au).map(|(u, a)| u * a).sum();
        let e = domain_dirichlet(&f);
        assert_relative_eq!(e, 2.0 * g.h().powi(1) * quad, max_relative = 1e-12);
    }

    #[test]
    fn trivial_energy_on_unit_ball() {
        let g = grid(1, 0.5, 1.5, 1.0 / 64.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let e = eval_j_local(&u, &Region::ball(1, &[0.0], 1.0).unwrap()).unwrap();
        assert!((e.dirichlet - FRAC_PI_2).abs() / FRAC_PI_2 < 0.02, "{e:?}");
        assert!((e.thin_area - 1.0).abs() <= g.h());
    }

    #[test]
    fn additivity_over_disjoint_regions() {
        let g = grid(1, 0.4, 1.0, 1.0 / 16.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let total = eval_j_local(&u, &Region::Domain).unwrap();
        let cells: f64 = {
            let mut acc = 0.0;
            for i0 in 0..g.nx()[0] - 1 {
                for j in 0..g.ny() - 1 {
                    acc += cell_energy(&u, i0, 0, j);
                }
            }
            2.0 * acc
        };
        assert_eq!(total.dirichlet, cells);
    }

    #[test]
    fn weiss_density_of_trivial_solution_one_dimension() {
        for alpha in [0.25, 0.5, 0.75] {
            let g = grid(1, alpha, 1.0, 1.0 / 128.0);
            let u = trivial_solution(&g, &[1.0]).unwrap();
            for r in [0.1, 0.3, 0.6] {
                let psi = weiss_density(&u, &[0.0], r).unwrap();
                assert!((psi - 1.0).abs() < 0.02, "alpha={alpha} r={r} psi={psi}");
            }
        }
    }

    #[test]
    fn deficit_vanishes_for_homogeneous_field() {
        let g = grid(1, 0.5, 1.0, 1.0 / 64.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let d = weiss_deficit(&u, [0.0, 0.0], 0.2, 0.6).unwrap();
        assert!(d >= 0.0 && d < 2e-3, "{d}");
        let off = weiss_deficit(&u, [0.3, 0.0], 0.1, 0.4).unwrap();
        assert!(off > 10.0 * d);
    }

    #[test]
    fn flux_identity_for_trivial_solution() {
        let g = grid(1, 0.5, 1.5, 1.0 / 64.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let (lhs, rhs) = flux_identity_check(&u, &[0.0], 1.0).unwrap();
        assert!((lhs - rhs).abs() / lhs < 0.05, "{lhs} {rhs}");
        assert!((rhs - FRAC_PI_2).abs() / FRAC_PI_2 < 0.05);
        let c = ScalarField::constant(&g, 2.0);
        let (a, b) = flux_identity_check(&c, &[0.0], 0.5).unwrap();
        assert_eq!(a, 0.0);
        assert!(b.abs() < 1e-12);
    }

    #[test]
    fn gagliardo_constant_half_plane() {
        assert_relative_eq!(gagliardo_constant(1, 0.5), 1.0 / PI, max_relative = 1e-12);
    }

    #[test]
    fn nonlocal_energy_of_constants() {
        let g = grid(1, 0.4, 1.0, 1.0 / 32.0);
        let zero = ThinFunction::from_fn(&g, |_| 0.0).unwrap();
        assert_eq!(eval_j_nonlocal(&zero, &[0.0], 0.5).unwrap(), 0.0);
        let c = ThinFunction::from_fn(&g, |_| 2.0).unwrap();
        assert_relative_eq!(eval_j_nonlocal(&c, &[0.1], 0.5).unwrap(), 1.0, epsilon = 1e-12);
        assert!(eval_j_nonlocal(&c, &[0.8], 0.5).is_err());
    }
}
