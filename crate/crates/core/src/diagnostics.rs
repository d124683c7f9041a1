//! Instrumentation of minimizers: blow-ups, the flux measure λ, free
//! boundary extraction, flatness, density classification, growth constants
//! and the logarithmic-cutoff competitor.

use crate::energy::{eval_j_local, weiss_deficit, weiss_density_at, Region};
use crate::error::{Error, Result};
use crate::extension::flux_from_rows;
use crate::grid::{slab_neighbors, thin_point, Grid, Point, ScalarField, ThinMask};
use crate::interp::Interpolant;
use crate::quadrature::{composite_gauss, SphereRule};
use crate::rng::SplitMix64;
use crate::solver::SolveResult;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Random directions sampled by [`flatness`] in two thin dimensions.
pub const FLATNESS_DIRECTIONS: usize = 64;
const FLATNESS_SEED: u64 = 0x5eed_f1a7;

/// `ω_n / 2`, the density of a half-space: 1 for n = 1 and π/2 for n = 2.
pub fn half_ball_density(n: usize) -> f64 {
    if n == 1 {
        1.0
    } else {
        FRAC_PI_2
    }
}

/// `u(x₀ + ρ x) / ρ^α` sampled on a grid with the layout of the input.
pub fn rescale_blowup(field: &ScalarField, center: &[f64], rho: f64) -> Result<ScalarField> {
    let g = field.grid();
    let c = thin_point(g.n(), center)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {rho}")));
    }
    let tol = 1e-9 * g.h();
    for a in 0..g.n() {
        let lo = c[a] + rho * g.origin()[a];
        let hi = c[a] + rho * g.thin_max(a);
        if lo < g.origin()[a] - tol || hi > g.thin_max(a) + tol {
            return Err(Error::OutOfGrid(format!("blow-up window at scale {rho} exits the grid")));
        }
    }
    if rho * g.y_max() > g.y_max() + tol {
        return Err(Error::OutOfGrid(format!("blow-up window at scale {rho} exits the grid")));
    }
    let it = Interpolant::new(field);
    let scale = rho.powf(-g.alpha());
    let clamp = |a: usize, x: f64| x.clamp(g.origin()[a], g.thin_max(a));
    let vals = (0..g.node_count())
        .map(|i| {
            let p = g.point(i);
            let x = [clamp(0, c[0] + rho * p.x[0]), if g.n() == 2 { clamp(1, c[1] + rho * p.x[1]) } else { 0.0 }];
            let y = (rho * p.y).min(g.y_max());
            scale * it.value(Point::new(x, y)).expect("window checked")
        })
        .collect();
    ScalarField::new(g.clone(), vals)
}

/// Deficit integral over `B_{0.8} ∖ B_{0.2}` about `center`.
pub fn homogeneity_deviation(field: &ScalarField, center: &[f64]) -> Result<f64> {
    let c = thin_point(field.grid().n(), center)?;
    weiss_deficit(field, c, 0.2, 0.8)
}

/// Slab map of `dλ/dm = 2 lim_{y→0} |y|^β u_y`, undefined on the boundary ring.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaDensity {
    pub h: f64,
    pub n: usize,
    pub density: Vec<Option<f64>>,
}

impl LambdaDensity {
    pub fn min(&self) -> f64 {
        self.density.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest `|density|` over the given slab nodes.
    pub fn max_abs_on(&self, nodes: &[usize]) -> f64 {
        nodes.iter().filter_map(|&s| self.density[s]).map(f64::abs).fold(0.0, f64::max)
    }

    /// Nodal quadrature `hⁿ Σ density` over the given slab nodes.
    pub fn mass_on(&self, nodes: &[usize]) -> f64 {
        self.h.powi(self.n as i32) * nodes.iter().filter_map(|&s| self.density[s]).sum::<f64>()
    }
}

pub fn lambda_density(field: &ScalarField) -> Result<LambdaDensity> {
    let g = field.grid();
    if g.ny() < 3 {
        return Err(Error::InvalidGrid("trace extraction needs three rows".into()));
    }
    let density = (0..g.slab_count())
        .map(|s| {
            if g.slab_on_boundary(s) {
                return None;
            }
            let (i0, i1) = g.slab_unindex(s);
            let u = |j| field.at(i0, i1, j);
            Some(2.0 * flux_from_rows(g.beta(), g.h(), u(0), u(1), u(2)))
        })
        .collect();
    Ok(LambdaDensity { h: g.h(), n: g.n(), density })
}

/// `λ(B_r)` as the weighted flux `∫_{∂B_r} |y|^β ∂_ν u` through the full
/// sphere, which equals the measure of the thin ball since `u` is ℒ-harmonic
/// off the slab.
pub fn lambda_ball(field: &ScalarField, center: &[f64], r: f64) -> Result<f64> {
    let g = field.grid();
    let c = thin_point(g.n(), center)?;
    g.check_ball(c, r)?;
    let rule = SphereRule::for_mesh(g.n(), g.beta(), c, r, g.h(), 4.0);
    let it = Interpolant::new(field);
    let mut acc = 0.0;
    for q in &rule.points {
        let (_, gr) = it.value_grad(q.p).ok_or_else(|| Error::OutOfGrid(format!("sphere of radius {r} exits the grid")))?;
        acc += q.weight * (gr[0] * q.normal[0] + gr[1] * q.normal[1] + gr[2] * q.normal[2]);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaGrowth {
    /// Rows `(r, λ(B_r), λ(B_r) / r^{n-α})`.
    pub rows: Vec<(f64, f64, f64)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

pub fn lambda_growth(field: &ScalarField, center: &[f64], radii: &[f64]) -> Result<LambdaGrowth> {
    let g = field.grid();
    let p = g.n() as f64 - g.alpha();
    let rows = radii
        .iter()
        .map(|&r| lambda_ball(field, center, r).map(|l| (r, l, l / r.powf(p))))
        .collect::<Result<Vec<_>>>()?;
    let min_ratio = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let max_ratio = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    Ok(LambdaGrowth { rows, min_ratio, max_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PointClass {
    Regular,
    Singular,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub density_gap: f64,
    pub blowup_radii: Vec<f64>,
}

impl ClassifierConfig {
    pub fn for_dim(n: usize) -> Self {
        Self { density_gap: 0.1 * half_ball_density(n), blowup_radii: vec![0.0625, 0.125, 0.25] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density_gap > 0.0 && self.density_gap.is_finite()) {
            return Err(Error::InvalidArgument(format!("density_gap must be positive, got {}", self.density_gap)));
        }
        if self.blowup_radii.is_empty() || self.blowup_radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("blowup_radii must be nonempty and increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: PointClass,
    pub psi0: f64,
    /// Radius the estimate was read at.
    pub radius: f64,
    /// `(r, Ψ_r)` over the configured radii.
    pub profile: Vec<(f64, f64)>,
}

/// Estimates `Ψ₀` by `Ψ` at the smallest configured radius of at least `4h`.
/// By monotonicity this overestimates the limit.
pub fn classify_point(field: &ScalarField, point: &[f64], cfg: &ClassifierConfig) -> Result<Classification> {
    cfg.validate()?;
    let g = field.grid();
    let c = thin_point(g.n(), point)?;
    let profile = cfg
        .blowup_radii
        .iter()
        .map(|&r| weiss_density_at(field, c, r).map(|p| (r, p)))
        .collect::<Result<Vec<_>>>()?;
    let &(radius, psi0) = profile
        .iter()
        .find(|(r, _)| *r >= 4.0 * g.h() * (1.0 - 1e-12))
        .ok_or_else(|| Error::InvalidArgument(format!("no blow-up radius is at least 4h = {}", 4.0 * g.h())))?;
    let base = half_ball_density(g.n());
    let class = if psi0 < base + 0.5 * cfg.density_gap {
        PointClass::Regular
    } else if psi0 > base + cfg.density_gap {
        PointClass::Singular
    } else {
        PointClass::Unresolved
    };
    Ok(Classification { class, psi0, radius, profile })
}

/// Slab nodes with both a positive and a zero neighbour.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeBoundary {
    pub nodes: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    /// Zero-phase members, the ones lying in the closed zero set.
    pub zero_side: Vec<usize>,
    pub flatness: Vec<Option<f64>>,
    pub psi0: Vec<Option<f64>>,
    pub class: Vec<Option<PointClass>>,
}

impl FreeBoundary {
    pub fn from_mask(mask: &ThinMask) -> Self {
        let g = mask.grid();
        let mut nodes = Vec::new();
        for s in 0..g.slab_count() {
            let nb = slab_neighbors(g, s);
            if nb.iter().any(|&t| mask.is_zero(t)) && nb.iter().any(|&t| !mask.is_zero(t)) {
                nodes.push(s);
            }
        }
        let points = nodes.iter().map(|&s| g.slab_point(s)[..g.n()].to_vec()).collect();
        let zero_side = nodes.iter().cloned().filter(|&s| mask.is_zero(s)).collect();
        let k = nodes.len();
        Self { nodes, points, zero_side, flatness: vec![None; k], psi0: vec![None; k], class: vec![None; k] }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Fills flatness at radius `r` and the classification for every member
    /// whose balls fit in the grid.
    pub fn annotate(&mut self, field: &ScalarField, mask: &ThinMask, r: f64, cfg: &ClassifierConfig) -> Result<()> {
        for k in 0..self.nodes.len() {
            self.flatness[k] = flatness(mask, &self.points[k], r).ok().map(|f| f.epsilon);
            match classify_point(field, &self.points[k], cfg) {
                Ok(c) => {
                    self.psi0[k] = Some(c.psi0);
                    self.class[k] = Some(c.class);
                }
                Err(Error::OutOfGrid(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Gaps between consecutive boundary points in one thin dimension.
    pub fn spacings(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.points.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        xs.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

pub fn extract_free_boundary(result: &SolveResult) -> FreeBoundary {
    FreeBoundary::from_mask(&result.mask)
}

fn thin_ball_nodes(g: &Grid, c: [f64; 2], r: f64) -> Vec<usize> {
    let r2 = r * r * (1.0 + 1e-12);
    (0..g.slab_count())
        .filter(|&s| {
            let p = g.slab_point(s);
            (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= r2
        })
        .collect()
}

fn check_thin_ball(g: &Grid, c: [f64; 2], r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    if !g.contains_thin_ball(c, r) {
        return Err(Error::OutOfGrid(format!("thin ball of radius {r} exits the slab")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    /// Smallest sampled `ε` such that `{x·ν ≤ -εr} ⊂ zero set ⊂ {x·ν ≤ εr}` in the ball.
    pub epsilon: f64,
    /// The direction `ν` attaining it, pointing into the positive phase.
    pub direction: [f64; 2],
}

fn flatness_for(g: &Grid, mask: &ThinMask, nodes: &[usize], c: [f64; 2], r: f64, nu: [f64; 2]) -> f64 {
    let mut eps: f64 = 0.0;
    for &s in nodes {
        let p = g.slab_point(s);
        let d = ((p[0] - c[0]) * nu[0] + (p[1] - c[1]) * nu[1]) / r;
        eps = eps.max(if mask.is_zero(s) { d } else { -d });
    }
    eps
}

/// Sampled over the axis directions and [`FLATNESS_DIRECTIONS`] seeded
/// random ones, then refined by a short angular search around the best.
pub fn flatness(mask: &ThinMask, center: &[f64], r: f64) -> Result<Flatness> {
    let g = mask.grid();
    let c = thin_point(g.n(), center)?;
    check_thin_ball(g, c, r)?;
    let nodes = thin_ball_nodes(g, c, r);
    let eval = |nu: [f64; 2]| flatness_for(g, mask, &nodes, c, r, nu);
    if g.n() == 1 {
        let (a, b) = (eval([1.0, 0.0]), eval([-1.0, 0.0]));
        return Ok(if a <= b {
            Flatness { epsilon: a, direction: [1.0, 0.0] }
        } else {
            Flatness { epsilon: b, direction: [-1.0, 0.0] }
        });
    }
    let mut angles = vec![0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
    let mut rng = SplitMix64::new(FLATNESS_SEED);
    angles.extend((0..FLATNESS_DIRECTIONS).map(|_| rng.uniform(0.0, TAU)));
    let dir = |t: f64| [t.cos(), t.sin()];
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for &t in &angles {
        let e = eval(dir(t));
        if e < best {
            best = e;
            best_t = t;
        }
    }
    let mut step = TAU / (2.0 * angles.len() as f64);
    while step > 1e-4 {
        for t in [best_t - step, best_t + step] {
            let e = eval(dir(t));
            if e < best {
                best = e;
                best_t = t;
            }
        }
        step *= 0.5;
    }
    Ok(Flatness { epsilon: best + 0.0, direction: dir(best_t) })
}

/// Length (n = 2) or count (n = 1) of phase-changing slab faces whose
/// midpoints lie in the thin ball.
pub fn perimeter_estimate(mask: &ThinMask, center: &[f64], r: f64) -> Result<f64> {
    let g = mask.grid();
    let c = thin_point(g.n(), center)?;
    check_thin_ball(g, c, r)?;
    let r2 = r * r;
    let mut faces = 0usize;
    for s in 0..g.slab_count() {
        for t in slab_neighbors(g, s) {
            if t <= s || mask.is_zero(s) == mask.is_zero(t) {
                continue;
            }
            let (a, b) = (g.slab_point(s), g.slab_point(t));
            let m = [0.5 * (a[0] + b[0]) - c[0], 0.5 * (a[1] + b[1]) - c[1]];
            if m[0] * m[0] + m[1] * m[1] <= r2 {
                faces += 1;
            }
        }
    }
    Ok(faces as f64 * g.h().powi(g.n() as i32 - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `radius / r`.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corkscrew {
    pub interior: Option<Witness>,
    pub exterior: Option<Witness>,
}

/// Largest single-phase thin balls inside `B_r(point)`. A ball about a node
/// counts when it stays inside `B_r` and one mesh width clear of every node
/// of the other phase.
pub fn corkscrew_check(mask: &ThinMask, point: &[f64], r: f64) -> Result<Corkscrew> {
    let g = mask.grid();
    let c = thin_point(g.n(), point)?;
    check_thin_ball(g, c, r)?;
    let nodes = thin_ball_nodes(g, c, r);
    let h = g.h();
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let search = |zero: bool| -> Option<Witness> {
        let (mine, other): (Vec<usize>, Vec<usize>) = nodes.iter().partition(|&&s| mask.is_zero(s) == zero);
        let mut best: Option<Witness> = None;
        for &s in &mine {
            let z = g.slab_point(s);
            let room = r - dist(z, c);
            let clear = other.iter().map(|&t| dist(z, g.slab_point(t)) - h).fold(f64::INFINITY, f64::min);
            let rad = room.min(clear);
            if rad > 0.0 && best.as_ref().is_none_or(|b| rad > b.radius) {
                best = Some(Witness { center: z[..g.n()].to_vec(), radius: rad, c: rad / r });
            }
        }
        best
    };
    Ok(Corkscrew { interior: search(false), exterior: search(true) })
}

/// Maximum of the interpolant over `∂B_r(c)`, sampled on the upper half
/// including the slab circle.
fn sphere_sup(it: &Interpolant, n: usize, c: [f64; 2], r: f64, h: f64) -> Option<f64> {
    let m = ((8.0 * PI * r / h).ceil() as usize).max(64);
    let mut best = f64::NEG_INFINITY;
    if n == 1 {
        for k in 0..=m {
            let t = PI * k as f64 / m as f64;
            let (s, co) = t.sin_cos();
            best = best.max(it.value(Point::new([c[0] + r * co, 0.0], (r * s).max(0.0)))?);
        }
    } else {
        let mp = m / 4 + 1;
        for k in 0..=mp {
            let psi = FRAC_PI_2 * k as f64 / mp as f64;
            let (sp, cp) = psi.sin_cos();
            for q in 0..m {
                let phi = TAU * q as f64 / m as f64;
                let x = [c[0] + r * sp * phi.cos(), c[1] + r * sp * phi.sin()];
                best = best.max(it.value(Point::new(x, (r * cp).max(0.0)))?);
            }
        }
    }
    Some(best)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthConstants {
    /// `max sup_{∂B_r(x₀)} u / r^α` over points and radii.
    pub holder: f64,
    /// `min sup_{∂B_r(x₀)} u / r^α` over the same set.
    pub nondegeneracy: f64,
    /// Rows `(point index, r, sup / r^α)`.
    pub rows: Vec<(usize, f64, f64)>,
}

/// Dyadic radii `2^{-k}` between `4h` and `1/2` that fit about every point.
pub fn growth_constants(field: &ScalarField, points: &[Vec<f64>]) -> Result<Option<GrowthConstants>> {
    let g = field.grid();
    let it = Interpolant::new(field);
    let mut rows = Vec::new();
    for (k, p) in points.iter().enumerate() {
        let c = thin_point(g.n(), p)?;
        let mut r = 0.5;
        while r >= 4.0 * g.h() * (1.0 - 1e-12) {
            if g.contains_ball(c, r) {
                if let Some(s) = sphere_sup(&it, g.n(), c, r, g.h()) {
                    rows.push((k, r, s / r.powf(g.alpha())));
                }
            }
            r *= 0.5;
        }
    }
    if rows.is_empty() {
        return Ok(None);
    }
    let holder = rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let nondegeneracy = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(Some(GrowthConstants { holder, nondegeneracy, rows }))
}

/// Growth constants about the zero-phase free boundary nodes of a solve.
pub fn holder_report(result: &SolveResult) -> Result<Option<GrowthConstants>> {
    let fb = extract_free_boundary(result);
    let g = result.field.grid();
    let points: Vec<Vec<f64>> = fb.zero_side.iter().map(|&s| g.slab_point(s)[..g.n()].to_vec()).collect();
    growth_constants(&result.field, &points)
}

/// `ψ_R(t)`: 1 up to `R`, `2 - ln t / ln R` up to `R²`, then 0.
pub fn log_cutoff(big_r: f64, t: f64) -> f64 {
    if t <= big_r {
        1.0
    } else if t >= big_r * big_r {
        0.0
    } else {
        2.0 - t.ln() / big_r.ln()
    }
}

fn log_cutoff_slope(big_r: f64, t: f64) -> f64 {
    if t <= big_r || t >= big_r * big_r {
        0.0
    } else {
        -1.0 / (t * big_r.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetitorReport {
    pub big_r: f64,
    pub energy: f64,
    pub energy_plus: f64,
    pub energy_minus: f64,
    /// `𝒥(V⁺) + 𝒥(V⁻) - 2𝒥(V)` on `B_{R²}`.
    pub delta_energy: f64,
    /// `∫_{B_{R²}} |y|^β |∇V|² |ψ_R'|²`.
    pub bound: f64,
}

/// `V^±(z) = V(X)` with `z = X ± ψ_R(|X|) e₁`, solved for `X` by fixed point.
fn shifted(field: &ScalarField, big_r: f64, sign: f64) -> ScalarField {
    let g = field.grid();
    let it = Interpolant::new(field);
    let lim = [g.origin()[0], g.thin_max(0)];
    ScalarField::from_fn(g, |p| {
        let z = [p.x[0], p.x[1], p.y];
        let mut x0 = z[0];
        for _ in 0..100 {
            let t = (x0 * x0 + z[1] * z[1] + z[2] * z[2]).sqrt();
            let next = z[0] - sign * log_cutoff(big_r, t);
            let done = (next - x0).abs() < 1e-14;
            x0 = next;
            if done {
                break;
            }
        }
        it.value(Point::new([x0.clamp(lim[0], lim[1]), p.x[1]], p.y)).expect("inside")
    })
}

/// The two-sided shift test of an α-homogeneous cone in two thin dimensions.
pub fn competitor_log_cutoff(cone: &ScalarField, big_r: f64) -> Result<CompetitorReport> {
    let g = cone.grid();
    if g.n() != 2 {
        return Err(Error::Unsupported("the log-cutoff competitor is two dimensional".into()));
    }
    if !(big_r > 1.0 && big_r.is_finite()) {
        return Err(Error::InvalidArgument(format!("R must exceed 1, got {big_r}")));
    }
    let outer = big_r * big_r;
    let c = [0.0, 0.0];
    if !g.contains_ball(c, outer) {
        return Err(Error::OutOfGrid(format!("grid extent is below R² = {outer}")));
    }
    let ball = Region::Ball { center: c, radius: outer };
    let energy = eval_j_local(cone, &ball)?.total;
    let energy_plus = eval_j_local(&shifted(cone, big_r, 1.0), &ball)?.total;
    let energy_minus = eval_j_local(&shifted(cone, big_r, -1.0), &ball)?.total;
    let it = Interpolant::new(cone);
    // t = e^s over [ln R, 2 ln R]
    let (a, b) = (big_r.ln(), 2.0 * big_r.ln());
    let mut bound = 0.0;
    for (s, ws) in composite_gauss(a, b, 24, 4) {
        let t = s.exp();
        let rule = SphereRule::for_mesh(2, g.beta(), c, t, g.h(), 2.0);
        let mut shell = 0.0;
        for q in &rule.points {
            let (_, gr) = it.value_grad(q.p).ok_or_else(|| Error::OutOfGrid("sphere exits the grid".into()))?;
            shell += q.weight * (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]);
        }
        bound += ws * t * log_cutoff_slope(big_r, t).powi(2) * shell;
    }
    Ok(CompetitorReport {
        big_r,
        energy,
        energy_plus,
        energy_minus,
        delta_energy: energy_plus + energy_minus - 2.0 * energy,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::trivial_solution;
    use crate::grid::{build_grid, GridSpec};

    fn grid(n: usize, alpha: f64, r: f64, h: f64) -> Grid {
        build_grid(GridSpec::new(n, alpha, r, h).unwrap()).unwrap()
    }

    #[test]
    fn blowup_of_trivial_solution_is_itself() {
        let g = grid(1, 0.5, 1.0, 1.0 / 32.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let h = g.h();
        let v = rescale_blowup(&u, &[0.0], 0.5).unwrap();
        // t^α is only Hölder at the front
        assert!(v.max_abs_diff(&u) < h.sqrt());
        let far = (0..g.node_count())
            .filter(|&i| g.point(i).x[0].hypot(g.point(i).y) > 8.0 * h)
            .map(|i| (v.values()[i] - u.values()[i]).abs())
            .fold(0.0, f64::max);
        assert!(far < 2e-3, "{far}");
        let w = rescale_blowup(&v, &[0.0], 0.5).unwrap();
        let direct = rescale_blowup(&u, &[0.0], 0.25).unwrap();
        assert!(w.max_abs_diff(&direct) < h.sqrt());
        assert!(rescale_blowup(&u, &[0.6], 0.5).is_err());
    }

    #[test]
    fn homogeneity_at_and_off_the_vertex() {
        let g = grid(1, 0.5, 2.0, 1.0 / 32.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let at = homogeneity_deviation(&u, &[0.0]).unwrap();
        let off = homogeneity_deviation(&u, &[0.5]).unwrap();
        assert!(at < 1e-3 && off > 0.05, "{at} {off}");
    }

    #[test]
    fn lambda_of_trivial_solution() {
        let g = grid(1, 0.5, 1.0, 1.0 / 64.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let l = lambda_ball(&u, &[0.0], 0.25).unwrap();
        assert!((l - 1.0).abs() < 0.05, "{l}");
        let d = lambda_density(&u).unwrap();
        assert!(d.min() > -1e-9);
        let s = g.slab_index(16, 0);
        let expect = (-g.slab_point(s)[0]).powf(-0.5);
        assert!((d.density[s].unwrap() - expect).abs() < 0.02 * expect);
    }

    #[test]
    fn free_boundary_of_half_line() {
        let g = grid(1, 0.5, 1.0, 0.125);
        let mask = ThinMask::from_fn(&g, |x| x[0] <= 0.0);
        let fb = FreeBoundary::from_mask(&mask);
        let pts: Vec<f64> = fb.points.iter().map(|p| p[0]).collect();
        assert_eq!(pts, vec![0.0, 0.125]);
        assert_eq!(fb.zero_side.len(), 1);
        assert!(FreeBoundary::from_mask(&ThinMask::empty(&g)).is_empty());
    }

    #[test]
    fn flatness_cases() {
        let g = grid(2, 0.5, 1.0, 1.0 / 32.0);
        let h = g.h();
        let half = ThinMask::from_fn(&g, |x| x[1] <= 0.0);
        let f = flatness(&half, &[0.0, 0.0], 0.5).unwrap();
        assert!(f.epsilon <= h / 0.5 + 1e-12);
        let diag = ThinMask::from_fn(&g, |x| x[0] + x[1] <= 0.0);
        let f = flatness(&diag, &[0.0, 0.0], 0.5).unwrap();
        assert!(f.epsilon <= 2.0 * h / 0.5, "{f:?}");
        assert!((f.direction[0] - f.direction[1]).abs() < 0.1);
        let quadrant = ThinMask::from_fn(&g, |x| x[0] <= 0.0 && x[1] <= 0.0);
        assert!(flatness(&quadrant, &[0.0, 0.0], 0.5).unwrap().epsilon >= 0.2);
    }

    #[test]
    fn perimeter_and_corkscrew_of_half_plane() {
        let g = grid(2, 0.5, 1.0, 1.0 / 32.0);
        let h = g.h();
        let half = ThinMask::from_fn(&g, |x| x[1] <= 0.0);
        let p = perimeter_estimate(&half, &[0.0, 0.0], 1.0).unwrap();
        assert!((p - 2.0).abs() <= 2.0 * h, "{p}");
        assert_eq!(perimeter_estimate(&ThinMask::empty(&g), &[0.0, 0.0], 1.0).unwrap(), 0.0);
        let ck = corkscrew_check(&half, &[0.0, 0.0], 0.5).unwrap();
        // the zero phase owns the line itself
        assert!((ck.interior.unwrap().c - (0.5 - h / 0.5)).abs() < 1e-9);
        assert!((ck.exterior.unwrap().c - 0.5).abs() < 1e-9);
        let ck = corkscrew_check(&ThinMask::empty(&g), &[0.0, 0.0], 0.5).unwrap();
        assert!(ck.exterior.is_none());
    }

    #[test]
    fn growth_constants_of_trivial_solution() {
        let g = grid(1, 0.3, 1.0, 1.0 / 64.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let gc = growth_constants(&u, &[vec![0.0]]).unwrap().unwrap();
        // interpolation blends in nodes just outside the sphere
        assert!((gc.holder - 1.0).abs() < 5e-3 && (gc.nondegeneracy - 1.0).abs() < 5e-3, "{gc:?}");
        assert!(growth_constants(&u, &[]).unwrap().is_none());
    }

    #[test]
    fn classification_of_trivial_solution() {
        let g = grid(1, 0.5, 1.0, 1.0 / 64.0);
        let u = trivial_solution(&g, &[1.0]).unwrap();
        let c = classify_point(&u, &[0.0], &ClassifierConfig::for_dim(1)).unwrap();
        assert_eq!(c.class, PointClass::Regular);
        let bad = ClassifierConfig { density_gap: 0.0, ..ClassifierConfig::for_dim(1) };
        assert!(classify_point(&u, &[0.0], &bad).is_err());
    }

    #[test]
    fn log_cutoff_profile() {
        assert_eq!(log_cutoff(2.0, 2.0), 1.0);
        assert!(log_cutoff(2.0, 4.0).abs() < 1e-15);
        assert!((log_cutoff(4.0, 8.0) - 0.5).abs() < 1e-15);
        assert_eq!(log_cutoff(2.0, 0.5), 1.0);
        assert_eq!(log_cutoff(2.0, 10.0), 0.0);
    }
}
