//! Quadrature rules: Gauss-Legendre, weighted spheres, and cell/ball overlap.

use crate::grid::{power_integral, Point};
use statrs::function::beta::{beta, beta_reg};
use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on the Legendre recurrence).
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    for i in 0..k {
        let mut z = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for m in 2..=k {
                let p2 = ((2 * m - 1) as f64 * z * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            let pk = if k == 0 { 1.0 } else { p1 };
            let pkm1 = p0;
            dp = k as f64 * (z * pk - pkm1) / (z * z - 1.0);
            let dz = pk / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Nodes and weights of a composite Gauss-Legendre rule on `[a, b]`.
pub fn composite_gauss(a: f64, b: f64, pieces: usize, order: usize) -> Vec<(f64, f64)> {
    let (gx, gw) = gauss_legendre(order);
    let len = (b - a) / pieces as f64;
    let mut out = Vec::with_capacity(pieces * order);
    for p in 0..pieces {
        let lo = a + p as f64 * len;
        for (x, w) in gx.iter().zip(&gw) {
            out.push((lo + 0.5 * len * (x + 1.0), 0.5 * len * w));
        }
    }
    out
}

/// `∫_0^θ sin^β t dt` for `θ ∈ [0, π]`, through the regularized incomplete beta.
pub fn sin_power_integral(theta: f64, beta_exp: f64) -> f64 {
    let a = 0.5 * (1.0 + beta_exp);
    let half = 0.5 * beta(a, 0.5);
    let lower = |t: f64| {
        let s = t.sin();
        half * beta_reg(a, 0.5, (s * s).min(1.0))
    };
    if theta <= FRAC_PI_2 {
        lower(theta.max(0.0))
    } else {
        2.0 * half - lower((PI - theta).max(0.0))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpherePoint {
    pub p: Point,
    /// Outward unit normal `[ν0, ν1, νy]`.
    pub normal: [f64; 3],
    /// Includes `|y|^β dℋ^n` and the factor 2 for the mirrored half.
    pub weight: f64,
}

/// Quadrature for `∫_{∂B_r} |y|^β g dℋ^n` over the full sphere about `(c, 0)`,
/// for integrands even in `y`; nodes are placed on the upper half only.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub points: Vec<SpherePoint>,
}

impl SphereRule {
    /// `panels` angular panels per quarter turn.
    pub fn new(n: usize, beta_exp: f64, c: [f64; 2], r: f64, panels: usize) -> Self {
        if n == 1 {
            Self::circle(beta_exp, c, r, 2 * panels)
        } else {
            Self::sphere(beta_exp, c, r, panels, 4 * panels)
        }
    }

    /// Resolution tied to the mesh: roughly `per_h` panels per mesh width of arc.
    pub fn for_mesh(n: usize, beta_exp: f64, c: [f64; 2], r: f64, h: f64, per_h: f64) -> Self {
        let arc = FRAC_PI_2 * r / h;
        let panels = ((per_h * arc).ceil() as usize).max(32);
        Self::new(n, beta_exp, c, r, panels)
    }

    fn circle(b: f64, c: [f64; 2], r: f64, m: usize) -> Self {
        let scale = 2.0 * r.powf(1.0 + b);
        let mut points = Vec::with_capacity(m);
        let mut prev = 0.0;
        for k in 0..m {
            let ta = PI * k as f64 / m as f64;
            let tb = PI * (k + 1) as f64 / m as f64;
            let cum = sin_power_integral(tb, b);
            let w = cum - prev;
            prev = cum;
            let theta = weighted_centroid(ta, tb, b);
            let (s, co) = theta.sin_cos();
            points.push(SpherePoint {
                p: Point::new([c[0] + r * co, c[1]], r * s),
                normal: [co, 0.0, s],
                weight: scale * w,
            });
        }
        Self { points }
    }

    fn sphere(b: f64, c: [f64; 2], r: f64, mpsi: usize, mphi: usize) -> Self {
        let scale = 2.0 * r.powf(2.0 + b);
        let dphi = 2.0 * PI / mphi as f64;
        let mut points = Vec::with_capacity(mpsi * mphi);
        for k in 0..mpsi {
            let pa = FRAC_PI_2 * k as f64 / mpsi as f64;
            let pb = FRAC_PI_2 * (k + 1) as f64 / mpsi as f64;
            let (sa, sb) = (pa.sin(), pb.sin());
            // ∫ sin^β ψ cos ψ dψ = ∫ s^β ds, with its centroid in s.
            let w = power_integral(sa, sb, b);
            let s = power_integral(sa, sb, b + 1.0) / w;
            let psi = s.clamp(0.0, 1.0).asin();
            let cp = psi.cos();
            for q in 0..mphi {
                let phi = (q as f64 + 0.5) * dphi;
                let (sf, cf) = phi.sin_cos();
                let nrm = [cp * cf, cp * sf, s];
                points.push(SpherePoint {
                    p: Point::new([c[0] + r * nrm[0], c[1] + r * nrm[1]], r * s),
                    normal: nrm,
                    weight: scale * w * dphi,
                });
            }
        }
        Self { points }
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|q| q.weight).sum()
    }
}

/// Centroid of `[a, b] ⊂ [0, π]` under the weight `sin^β`, with the weight
/// replaced by its power-law profile at the nearer pole.
fn weighted_centroid(a: f64, b: f64, beta_exp: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let (lo, hi, flip) = if mid <= FRAC_PI_2 { (a, b, false) } else { (PI - b, PI - a, true) };
    let lo = lo.max(0.0);
    let t = power_integral(lo, hi, beta_exp + 1.0) / power_integral(lo, hi, beta_exp);
    if flip {
        PI - t
    } else {
        t
    }
}

/// Nodes of `[lo, hi]` at the quantiles of the weight `t^β`, one per equal-mass slice.
pub fn weighted_quantiles(lo: f64, hi: f64, beta_exp: f64, m: usize) -> Vec<f64> {
    let p = 1.0 + beta_exp;
    let (a, b) = (lo.powf(p), hi.powf(p));
    (0..m).map(|k| (a + (k as f64 + 0.5) / m as f64 * (b - a)).powf(1.0 / p)).collect()
}

/// Squared distance range `(min, max)` from `c` to an axis-aligned box.
pub fn box_distance2(c: &[f64], lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for k in 0..c.len() {
        let d = if c[k] < lo[k] {
            lo[k] - c[k]
        } else if c[k] > hi[k] {
            c[k] - hi[k]
        } else {
            0.0
        };
        near += d * d;
        let f = (c[k] - lo[k]).abs().max((c[k] - hi[k]).abs());
        far += f * f;
    }
    (near, far)
}

/// Fraction of the square `[x0, x0+h]²` (or segment in 1D) inside the disc of
/// radius `r` about `c`; subsampled on `m` points per axis when cut.
pub fn thin_cell_fraction(n: usize, c: [f64; 2], lo: [f64; 2], h: f64, r: f64, m: usize) -> f64 {
    if n == 1 {
        let a = lo[0].max(c[0] - r);
        let b = (lo[0] + h).min(c[0] + r);
        return ((b - a) / h).clamp(0.0, 1.0);
    }
    let hi = [lo[0] + h, lo[1] + h];
    let (near, far) = box_distance2(&c, &lo, &hi);
    let r2 = r * r;
    if far <= r2 {
        return 1.0;
    }
    if near >= r2 {
        return 0.0;
    }
    let mut inside = 0usize;
    for a in 0..m {
        let dx = lo[0] + (a as f64 + 0.5) / m as f64 * h - c[0];
        for b in 0..m {
            let dy = lo[1] + (b as f64 + 0.5) / m as f64 * h - c[1];
            if dx * dx + dy * dy <= r2 {
                inside += 1;
            }
        }
    }
    inside as f64 / (m * m) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for k in 1..8 {
            let (x, w) = gauss_legendre(k);
            for deg in 0..(2 * k) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "k={k} deg={deg}");
            }
        }
    }

    #[test]
    fn sin_power_closed_forms() {
        assert!((sin_power_integral(PI, 0.0) - PI).abs() < 1e-12);
        assert!((sin_power_integral(PI, 1.0) - 2.0).abs() < 1e-12);
        assert!((sin_power_integral(FRAC_PI_2, 1.0) - 1.0).abs() < 1e-12);
        assert!((sin_power_integral(2.0, 1.0) - (1.0 - 2f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn sphere_weight_totals() {
        // n=1: 2 r^{1+β} ∫_0^π sin^β; n=2 with β=0: area 4π r².
        let b = 0.3;
        let rule = SphereRule::new(1, b, [0.1, 0.0], 0.7, 64);
        let exact = 2.0 * 0.7f64.powf(1.0 + b) * sin_power_integral(PI, b);
        assert!((rule.total_weight() - exact).abs() < 1e-12);
        let rule = SphereRule::new(2, 0.0, [0.0, 0.0], 0.5, 32);
        assert!((rule.total_weight() - 4.0 * PI * 0.25).abs() < 1e-12);
    }

    #[test]
    fn sphere_integrates_smooth_functions() {
        // ∫_{S²} x0² dℋ² = 4π/3 on the unit sphere.
        let rule = SphereRule::new(2, 0.0, [0.0, 0.0], 1.0, 64);
        let q: f64 = rule.points.iter().map(|s| s.weight * s.p.x[0] * s.p.x[0]).sum();
        assert!((q - 4.0 * PI / 3.0).abs() < 1e-3);
    }

    #[test]
    fn circle_nodes_are_finite() {
        for b in [-0.5, 0.0, 0.5] {
            for panels in [32, 51, 52, 64, 97] {
                let rule = SphereRule::new(1, b, [0.0, 0.0], 0.129, panels);
                assert!(rule.points.iter().all(|q| q.p.x[0].is_finite() && q.p.y.is_finite() && q.weight.is_finite()));
            }
        }
    }

    #[test]
    fn quantiles_split_mass() {
        let q = weighted_quantiles(0.0, 1.0, 0.0, 4);
        assert_eq!(q, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn cell_fraction_limits() {
        assert_eq!(thin_cell_fraction(2, [0.0, 0.0], [0.0, 0.0], 0.1, 1.0, 8), 1.0);
        assert_eq!(thin_cell_fraction(2, [0.0, 0.0], [2.0, 0.0], 0.1, 1.0, 8), 0.0);
        assert!((thin_cell_fraction(1, [0.0, 0.0], [0.95, 0.0], 0.1, 1.0, 8) - 0.5).abs() < 1e-12);
    }
}
