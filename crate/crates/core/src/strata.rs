//! β-numbers of point measures, symmetry distances, strata membership,
//! packing sums and the comparison of β against the Weiss drop.

use crate::energy::weiss_deficit;
use crate::error::{Error, Result};
use crate::grid::{thin_point, Point, ScalarField};
use crate::interp::Interpolant;
use crate::quadrature::{composite_gauss, SphereRule};
use crate::rng::SplitMix64;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Finite sum of weighted atoms in ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMeasure {
    atoms: Vec<(Vec<f64>, f64)>,
    dim: usize,
}

impl PointMeasure {
    pub fn new(atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let dim = atoms.first().map_or(0, |a| a.0.len());
        for (x, m) in &atoms {
            if x.len() != dim {
                return Err(Error::ShapeMismatch(format!("atom of dimension {} in a measure of dimension {dim}", x.len())));
            }
            if !(*m >= 0.0 && m.is_finite()) || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("atom {x:?} has mass {m}")));
            }
        }
        Ok(Self { atoms, dim })
    }

    pub fn unit_masses(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(points.into_iter().map(|p| (p, 1.0)).collect())
    }

    pub fn atoms(&self) -> &[(Vec<f64>, f64)] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    fn in_ball<'a>(&'a self, ball: &'a Ball) -> impl Iterator<Item = &'a (Vec<f64>, f64)> + 'a {
        let r2 = ball.radius * ball.radius * (1.0 + 1e-12);
        self.atoms.iter().filter(move |(x, _)| dist2(x, &ball.center) <= r2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distance from `z` to the affine plane `p + span(basis)`, basis orthonormal.
pub fn plane_dist2(z: &[f64], p: &[f64], basis: &[Vec<f64>]) -> f64 {
    let d: Vec<f64> = z.iter().zip(p).map(|(a, b)| a - b).collect();
    let along: f64 = basis.iter().map(|v| v.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().powi(2)).sum();
    (d.iter().map(|x| x * x).sum::<f64>() - along).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaReport {
    pub ball: Ball,
    pub k: usize,
    pub beta_sq: f64,
    pub mass: f64,
    /// Eigenvalues of the centred second-moment form, decreasing.
    pub eigenvalues: Vec<f64>,
    pub plane_point: Vec<f64>,
    pub plane_basis: Vec<Vec<f64>>,
}

/// `r^{-k-2} ∫_B dist(z, L)² dμ` for the plane `p + span(basis)`.
pub fn plane_objective(mu: &PointMeasure, ball: &Ball, k: usize, p: &[f64], basis: &[Vec<f64>]) -> f64 {
    let r = ball.radius;
    mu.in_ball(ball).map(|(x, m)| m * plane_dist2(x, p, basis)).sum::<f64>() / r.powi(k as i32 + 2)
}

fn check_k(mu: &PointMeasure, ball: &Ball, k: usize) -> Result<()> {
    if ball.center.len() != mu.dim() && !mu.atoms.is_empty() {
        return Err(Error::ShapeMismatch(format!("ball in dimension {}, measure in {}", ball.center.len(), mu.dim())));
    }
    if k > ball.center.len() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the dimension {}", ball.center.len())));
    }
    Ok(())
}

/// β² through the eigenvalues of the centred second-moment form.
pub fn beta2(mu: &PointMeasure, ball: &Ball, k: usize) -> Result<BetaReport> {
    check_k(mu, ball, k)?;
    let d = ball.center.len();
    let inside: Vec<&(Vec<f64>, f64)> = mu.in_ball(ball).collect();
    let mass: f64 = inside.iter().map(|a| a.1).sum();
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let mut x = vec![0.0; d];
    for (z, m) in &inside {
        for i in 0..d {
            x[i] += m * z[i] / mass;
        }
    }
    let mut q = DMatrix::<f64>::zeros(d, d);
    for (z, m) in &inside {
        for i in 0..d {
            for j in 0..d {
                q[(i, j)] += m * (z[i] - x[i]) * (z[j] - x[j]) / mass;
            }
        }
    }
    let eig = SymmetricEigen::new(q);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let plane_basis: Vec<Vec<f64>> =
        order[..k].iter().map(|&i| eig.eigenvectors.column(i).iter().cloned().collect()).collect();
    let r = ball.radius;
    let beta_sq = mass / r.powi(k as i32) * eigenvalues[k..].iter().sum::<f64>() / (r * r);
    Ok(BetaReport { ball: ball.clone(), k, beta_sq, mass, eigenvalues, plane_point: x, plane_basis })
}

fn random_frame(rng: &mut SplitMix64, d: usize, k: usize) -> Vec<Vec<f64>> {
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    while frame.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        for u in &frame {
            let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            frame.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    frame
}

/// Minimum of the β objective over the eigen-plane and `samples` seeded
/// random affine planes through points of the ball.
pub fn beta2_bruteforce(mu: &PointMeasure, ball: &Ball, k: usize, samples: usize, seed: u64) -> Result<f64> {
    let report = beta2(mu, ball, k)?;
    let d = ball.center.len();
    let mut best = plane_objective(mu, ball, k, &report.plane_point, &report.plane_basis);
    let mut rng = SplitMix64::new(seed);
    for _ in 0..samples {
        let dir = rng.unit_vector(d);
        let s = ball.radius * rng.next_f64().powf(1.0 / d as f64);
        let p: Vec<f64> = ball.center.iter().zip(&dir).map(|(c, u)| c + s * u).collect();
        let basis = random_frame(&mut rng, d, k);
        best = best.min(plane_objective(mu, ball, k, &p, &basis));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDistance {
    /// `r^{-2-n} ∫_B |y|^β |u - ũ|²` for the best candidate.
    pub distance: f64,
    /// Orthonormal basis of the invariant subspace of the best candidate.
    pub subspace: Vec<Vec<f64>>,
}

/// Angular rule on the upper half of the unit sphere in `(complement, y)`,
/// as `(direction, weight)` with `|θ_y|^β` and the mirrored half included.
fn angular_rule(m: usize, beta: f64, panels: usize) -> Vec<(Vec<f64>, f64)> {
    match m {
        0 => vec![(vec![1.0], 2.0)],
        1 => SphereRule::new(1, beta, [0.0, 0.0], 1.0, panels)
            .points
            .iter()
            .map(|q| (vec![q.normal[0], q.normal[2]], q.weight))
            .collect(),
        _ => SphereRule::new(2, beta, [0.0, 0.0], 1.0, panels)
            .points
            .iter()
            .map(|q| (q.normal.to_vec(), q.weight))
            .collect(),
    }
}

/// Quadrature for the `k`-ball of radius `r`, as `(t, weight)`.
fn flat_rule(k: usize, r: f64, pieces: usize) -> Vec<(Vec<f64>, f64)> {
    match k {
        0 => vec![(vec![], 1.0)],
        1 => composite_gauss(-r, r, 2 * pieces, 2).into_iter().map(|(t, w)| (vec![t], w)).collect(),
        _ => {
            let m = 8 * pieces;
            let mut out = Vec::new();
            for (tau, w) in composite_gauss(0.0, r, pieces, 2) {
                for q in 0..m {
                    let phi = TAU * (q as f64 + 0.5) / m as f64;
                    out.push((vec![tau * phi.cos(), tau * phi.sin()], w * tau * TAU / m as f64));
                }
            }
            out
        }
    }
}

/// Distance to the best α-homogeneous function about the centre that is
/// invariant along `subspace`, projected ray by ray.
fn candidate_distance(it: &Interpolant, c: [f64; 2], r: f64, subspace: &[Vec<f64>]) -> Result<f64> {
    let g = it.field().grid();
    let (n, alpha, beta, h) = (g.n(), g.alpha(), g.beta(), g.h());
    let k = subspace.len();
    let comp = complement(n, subspace);
    let m = n - k;
    let e = m as f64 + beta;
    let pieces = ((r / h).ceil() as usize).max(8);
    let panels = ((std::f64::consts::FRAC_PI_2 * r / h).ceil() as usize).clamp(16, 64);
    let ang = angular_rule(m, beta, panels);
    let flat = flat_rule(k, r, pieces);
    let radial = composite_gauss(0.0, 1.0, pieces, 2);
    let mut total = 0.0;
    for (theta, aw) in &ang {
        let mut samples = Vec::with_capacity(flat.len() * radial.len());
        let (mut num, mut den) = (0.0, 0.0);
        for (t, tw) in &flat {
            let t2: f64 = t.iter().map(|x| x * x).sum();
            let big_s = (r * r - t2).max(0.0).sqrt();
            if big_s <= 0.0 {
                continue;
            }
            let jac = big_s.powf(e + 1.0) / (e + 1.0);
            for &(w, ww) in &radial {
                let s = big_s * w.powf(1.0 / (e + 1.0));
                let mut x = [c[0], c[1]];
                for (ti, li) in t.iter().zip(subspace) {
                    for a in 0..n {
                        x[a] += ti * li[a];
                    }
                }
                for (th, ci) in theta.iter().zip(&comp) {
                    for a in 0..n {
                        x[a] += s * th * ci[a];
                    }
                }
                let y = s * theta[m];
                let u = it.value(Point::new(x, y)).ok_or_else(|| Error::OutOfGrid("symmetry ball exits the grid".into()))?;
                let wt = tw * jac * ww;
                let sa = s.powf(alpha);
                num += wt * u * sa;
                den += wt * sa * sa;
                samples.push((u, sa, wt));
            }
        }
        let gval = if den > 0.0 { num / den } else { 0.0 };
        total += aw * samples.iter().map(|(u, sa, wt)| wt * (u - gval * sa).powi(2)).sum::<f64>();
    }
    Ok(total / r.powf(n as f64 + 2.0))
}

/// Orthonormal complement of `subspace` in ℝⁿ.
fn complement(n: usize, subspace: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for a in 0..n {
        let mut v = vec![0.0; n];
        v[a] = 1.0;
        for u in subspace.iter().chain(out.iter()) {
            let dot: f64 = u.iter().zip(&v).map(|(p, q)| p * q).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
        if out.len() + subspace.len() == n {
            break;
        }
    }
    out
}

/// Candidate `k`-subspaces of ℝⁿ: the coordinate ones, then seeded random
/// ones, `budget` in all (at least the coordinate ones).
fn candidate_subspaces(n: usize, k: usize, budget: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let unit = |a: usize| (0..n).map(|b| if a == b { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    match k {
        0 => vec![vec![]],
        k if k == n => vec![(0..n).map(unit).collect()],
        _ => {
            // n = 2, k = 1: lines through the origin
            let mut out: Vec<Vec<Vec<f64>>> = (0..n).map(|a| vec![unit(a)]).collect();
            let mut rng = SplitMix64::new(seed);
            while out.len() < budget {
                let t = rng.uniform(0.0, PI);
                out.push(vec![vec![t.cos(), t.sin()]]);
            }
            out
        }
    }
}

pub const SYMMETRY_SEED: u64 = 0x51de_cafe;

/// Upper bound for the scaled distance from `u` to the `k`-symmetric
/// functions on `B_r(center)`.
pub fn ksym_distance(field: &ScalarField, center: &[f64], r: f64, k: usize, direction_budget: usize) -> Result<SymmetryDistance> {
    let g = field.grid();
    let c = thin_point(g.n(), center)?;
    if k > g.n() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {}", g.n())));
    }
    g.check_ball(c, r)?;
    let it = Interpolant::new(field);
    let mut best = SymmetryDistance { distance: f64::INFINITY, subspace: vec![] };
    for sub in candidate_subspaces(g.n(), k, direction_budget, SYMMETRY_SEED) {
        let d = candidate_distance(&it, c, r, &sub)?;
        if d < best.distance {
            best = SymmetryDistance { distance: d, subspace: sub };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataQuery {
    pub k: usize,
    pub epsilon: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub point: Vec<f64>,
    pub direction_budget: usize,
}

impl StrataQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.r_min > 0.0 && self.r_min <= self.r_max && self.r_max <= 1.0) {
            return Err(Error::InvalidArgument(format!("need 0 < r_min ≤ r_max ≤ 1, got {} and {}", self.r_min, self.r_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrataMembership {
    pub member: bool,
    /// `(scale, distance to (k+1)-symmetric functions)`.
    pub log: Vec<(f64, f64)>,
}

/// `x ∈ S^k_{ε,r}`: at every scale from `r_max` halving down to `r_min`,
/// `u` stays at least `ε` away from the `(k+1)`-symmetric functions.
pub fn strata_membership(field: &ScalarField, query: &StrataQuery) -> Result<StrataMembership> {
    query.validate()?;
    let n = field.grid().n();
    if query.k + 1 > n {
        // nothing is (n+1)-symmetric
        return Ok(StrataMembership { member: true, log: vec![] });
    }
    let mut scales = Vec::new();
    let mut s = query.r_max;
    while s > query.r_min * (1.0 + 1e-12) {
        scales.push(s);
        s *= 0.5;
    }
    scales.push(query.r_min);
    let mut log = Vec::new();
    for s in scales {
        let d = ksym_distance(field, &query.point, s, query.k + 1, query.direction_budget)?;
        log.push((s, d.distance));
    }
    let member = log.iter().all(|(_, d)| *d >= query.epsilon);
    Ok(StrataMembership { member, log })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    /// `Σ r_q^k`.
    pub sum: f64,
    /// `∫_0^2 ∫_{B_1} β^k(z, s)² dμ(z) ds/s` on dyadic scales.
    pub reifenberg_integral: f64,
    /// `(s, ∫_{B_1} β^k(z, s)² dμ(z))`.
    pub integrand: Vec<(f64, f64)>,
    /// Pairs of balls that overlap.
    pub overlaps: usize,
}

/// Packing measure `Σ r_q^k δ_q` of disjoint balls and its Reifenberg
/// integral, trapezoidal in `ln s` over `s = 2^{1-j}` down to a quarter of
/// the smallest radius.
pub fn packing_sum(balls: &[(Vec<f64>, f64)], k: usize) -> Result<PackingReport> {
    if balls.is_empty() {
        return Err(Error::InvalidArgument("no balls".into()));
    }
    for (c, r) in balls {
        if !(*r > 0.0 && *r <= 1.0) {
            return Err(Error::InvalidArgument(format!("radius {r} outside (0, 1]")));
        }
        if c.iter().map(|x| x * x).sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!("center {c:?} outside the unit ball")));
        }
    }
    let mut overlaps = 0;
    for a in 0..balls.len() {
        for b in a + 1..balls.len() {
            let d = dist2(&balls[a].0, &balls[b].0).sqrt();
            if d < (balls[a].1 + balls[b].1) * (1.0 - 1e-12) {
                overlaps += 1;
            }
        }
    }
    let mu = PointMeasure::new(balls.iter().map(|(c, r)| (c.clone(), r.powi(k as i32))).collect())?;
    let sum = mu.total_mass();
    let rmin = balls.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
    let mut integrand = Vec::new();
    let mut s = 2.0;
    while s >= 0.25 * rmin * (1.0 - 1e-12) {
        let mut v = 0.0;
        for (z, m) in mu.atoms() {
            if z.iter().map(|x| x * x).sum::<f64>() > 1.0 + 1e-12 {
                continue;
            }
            v += m * beta2(&mu, &Ball::new(z.clone(), s)?, k)?.beta_sq;
        }
        integrand.push((s, v));
        s *= 0.5;
    }
    let dl = 2f64.ln();
    let last = integrand.len() - 1;
    let reifenberg_integral = integrand
        .iter()
        .enumerate()
        .map(|(i, (_, v))| if i == 0 || i == last { 0.5 * dl * v } else { dl * v })
        .sum();
    Ok(PackingReport { sum, reifenberg_integral, integrand, overlaps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeissDrop {
    pub lhs: f64,
    pub rhs: f64,
    pub atoms: usize,
}

/// `β^k_μ(B_r)²` against `r^{-k} ∫_{B_r} (Ψ_{4r} - Ψ_r) dμ`, each drop taken
/// in deficit form so that it is a sum of squares.
pub fn beta_vs_weiss_drop(field: &ScalarField, center: &[f64], r: f64, mu: &PointMeasure, k: usize) -> Result<WeissDrop> {
    let n = field.grid().n();
    let ball = Ball::new(center[..n].to_vec(), r)?;
    let report = beta2(mu, &ball, k)?;
    let mut rhs = 0.0;
    let mut atoms = 0;
    for (z, m) in mu.in_ball(&ball) {
        let c = thin_point(n, z)?;
        let drop = weiss_deficit(field, c, r, 4.0 * r)?;
        rhs += m * drop;
        atoms += 1;
    }
    Ok(WeissDrop { lhs: report.beta_sq, rhs: rhs / r.powi(k as i32), atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::trivial_solution;
    use crate::grid::{build_grid, GridSpec};

    fn triangle() -> (PointMeasure, Ball) {
        let mu = PointMeasure::unit_masses(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        (mu, Ball::new(vec![1.0, 1.0 / 3.0], 2.0).unwrap())
    }

    #[test]
    fn three_atom_example() {
        let (mu, ball) = triangle();
        let b = beta2(&mu, &ball, 1).unwrap();
        assert!((b.beta_sq - 1.0 / 12.0).abs() < 1e-12);
        assert!((b.eigenvalues[0] - 2.0 / 3.0).abs() < 1e-12 && (b.eigenvalues[1] - 2.0 / 9.0).abs() < 1e-12);
        assert!(b.plane_basis[0][1].abs() < 1e-12);
        let direct = plane_objective(&mu, &ball, 1, &b.plane_point, &b.plane_basis);
        assert!((direct - b.beta_sq).abs() < 1e-12);
        let brute = beta2_bruteforce(&mu, &ball, 1, 10_000, 7).unwrap();
        assert!((brute - 1.0 / 12.0).abs() < 1e-10);
    }

    #[test]
    fn flat_and_degenerate_measures() {
        let line = PointMeasure::unit_masses((0..5).map(|i| vec![i as f64 * 0.1, 0.2 + i as f64 * 0.05]).collect()).unwrap();
        let ball = Ball::new(vec![0.2, 0.3], 1.0).unwrap();
        assert!(beta2(&line, &ball, 1).unwrap().beta_sq < 1e-12);
        let single = PointMeasure::unit_masses(vec![vec![0.3, 0.1]]).unwrap();
        assert_eq!(beta2(&single, &ball, 0).unwrap().beta_sq, 0.0);
        let far = Ball::new(vec![5.0, 5.0], 1.0).unwrap();
        assert_eq!(beta2(&single, &far, 1), Err(Error::ZeroMass));
        assert!(beta2(&single, &ball, 3).is_err());
    }

    #[test]
    fn single_ball_and_collinear_packings() {
        let one = packing_sum(&[(vec![0.0, 0.0], 1.0)], 1).unwrap();
        assert_eq!(one.sum, 1.0);
        assert_eq!(one.reifenberg_integral, 0.0);
        let m = 4;
        let r = 0.5f64.powi(m);
        let balls: Vec<(Vec<f64>, f64)> =
            (0..1 << m).map(|i| (vec![-1.0 + r + 2.0 * r * i as f64, 0.0], r)).collect();
        let line = packing_sum(&balls, 1).unwrap();
        assert!((line.sum - 1.0).abs() < 1e-12 && line.reifenberg_integral < 1e-20 && line.overlaps == 0);
    }

    #[test]
    fn symmetry_distances_of_trivial_solution() {
        let g = build_grid(GridSpec::new(1, 0.5, 1.0, 1.0 / 32.0).unwrap()).unwrap();
        let u = trivial_solution(&g, &[1.0]).unwrap();
        assert!(ksym_distance(&u, &[0.0], 0.5, 0, 4).unwrap().distance < 1e-3);
        assert!(ksym_distance(&u, &[0.0], 0.5, 1, 4).unwrap().distance > 1e-2);
        assert!(ksym_distance(&u, &[0.0], 2.0, 0, 4).is_err());
    }
}
