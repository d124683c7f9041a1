//! Poisson kernel, extension of slab data, the trivial solution and the
//! boundary flux `lim y^β u_y`.

use crate::error::{Error, Result};
use crate::grid::{thin_point, Grid, Point, ScalarField};
use crate::interp::Interpolant;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionConfig {
    pub n: usize,
    pub alpha: f64,
    /// Unit-mass constant `c_{n,α} = Γ((n+2α)/2) / (π^{n/2} Γ(α))`.
    pub normalization: f64,
    /// Support radius of the kernel in the two-dimensional convolution.
    pub truncation_radius: f64,
}

impl ExtensionConfig {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidArgument(format!("unsupported thin dimension {n}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let nf = n as f64;
        let normalization = gamma(0.5 * nf + alpha) / (PI.powf(0.5 * nf) * gamma(alpha));
        Ok(Self { n, alpha, normalization, truncation_radius: 2.0 })
    }

    pub fn for_grid(grid: &Grid) -> Result<Self> {
        let mut cfg = Self::new(grid.n(), grid.alpha())?;
        cfg.truncation_radius = 2.0 * grid.spec().half_extent;
        Ok(cfg)
    }

    /// Mass of `P_y` inside the thin ball of radius `radius`.
    pub fn kernel_mass_within(&self, y: f64, radius: f64) -> f64 {
        let x = radius * radius / (radius * radius + y * y);
        beta_reg(0.5 * self.n as f64, self.alpha, x)
    }
}

/// `P(ξ, y) = c |y|^{2α} / |(ξ, y)|^{n+2α}`.
pub fn poisson_kernel(cfg: &ExtensionConfig, xi: &[f64], y: f64) -> Result<f64> {
    if y == 0.0 {
        return Err(Error::InvalidArgument("Poisson kernel is singular at y = 0".into()));
    }
    if xi.len() != cfg.n {
        return Err(Error::ShapeMismatch(format!("offset has {} coordinates, expected {}", xi.len(), cfg.n)));
    }
    let r2: f64 = xi.iter().map(|v| v * v).sum::<f64>() + y * y;
    Ok(kernel_value(cfg, r2, y.abs()))
}

#[inline]
fn kernel_value(cfg: &ExtensionConfig, r2: f64, y: f64) -> f64 {
    cfg.normalization * y.powf(2.0 * cfg.alpha) / r2.powf(0.5 * (cfg.n as f64 + 2.0 * cfg.alpha))
}

/// Nonnegative data on the `y = 0` slab of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl ThinFunction {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.slab_count() {
            return Err(Error::ShapeMismatch(format!(
                "thin function has {} values, slab has {} nodes",
                values.len(),
                grid.slab_count()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("thin data must be finite and nonnegative, got {v}")));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.slab_count()).map(|s| f(grid.slab_point(s))).collect();
        Self::new(grid, values)
    }

    pub fn trace(field: &ScalarField) -> Result<Self> {
        Self::new(field.grid(), field.slab_values())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One-sided kernel mass beyond `|ζ| > z` in one dimension.
fn tail_1d(alpha: f64, z: f64, y: f64) -> f64 {
    0.5 * beta_reg(alpha, 0.5, y * y / (z * z + y * y))
}

/// `(e^{γ lb} - e^{γ la}) / (2γ)`, stable as `γ → 0`.
fn power_difference(gamma_exp: f64, la: f64, lb: f64) -> f64 {
    if gamma_exp == 0.0 {
        0.5 * (lb - la)
    } else {
        (gamma_exp * la).exp() * (gamma_exp * (lb - la)).exp_m1() / (2.0 * gamma_exp)
    }
}

/// Convolution `u(·, y) = f * P_y`; the trace row is set to `f` exactly.
///
/// In one dimension `f` is piecewise linear between slab nodes and
/// constant beyond the box, and every segment is integrated exactly against
/// the kernel. In two dimensions `f` is cellwise constant, extended by the
/// nearest slab value, and the kernel is truncated and renormalised.
pub fn poisson_extend(cfg: &ExtensionConfig, f: &ThinFunction, grid: &Grid) -> Result<ScalarField> {
    if !f.grid().same_layout(grid) {
        return Err(Error::ShapeMismatch("thin function lives on a different grid".into()));
    }
    if cfg.n != grid.n() || (cfg.alpha - grid.alpha()).abs() > 1e-15 {
        return Err(Error::InvalidArgument("extension config does not match the grid".into()));
    }
    let mut values = vec![0.0; grid.node_count()];
    for s in 0..grid.slab_count() {
        values[grid.slab_node(s, 0)] = f.values()[s];
    }
    if grid.n() == 1 {
        extend_1d(cfg, f, grid, &mut values);
    } else {
        extend_2d(cfg, f, grid, &mut values);
    }
    ScalarField::new(grid.clone(), values)
}

fn extend_1d(cfg: &ExtensionConfig, f: &ThinFunction, grid: &Grid, values: &mut [f64]) {
    let h = grid.h();
    let nx = grid.nx()[0];
    let fv = f.values();
    let alpha = cfg.alpha;
    let gamma_exp = 0.5 - alpha;
    for j in 1..grid.ny() {
        let y = grid.y_coord(j);
        let pref = cfg.normalization * y.powf(2.0 * alpha);
        // tail[m]: mass beyond |ζ| > m h; lnq[m] = ln(m²h² + y²).
        let tail: Vec<f64> = (0..nx).map(|m| tail_1d(alpha, m as f64 * h, y)).collect();
        let lnq: Vec<f64> = (0..nx).map(|m| ((m as f64 * h).powi(2) + y * y).ln()).collect();
        // Mass and first moment of the segment [m h, (m+1) h] for signed m.
        let seg = |m: isize| -> (f64, f64) {
            if m >= 0 {
                let (a, b) = (m as usize, m as usize + 1);
                (tail[a] - tail[b], pref * power_difference(gamma_exp, lnq[a], lnq[b]))
            } else {
                let (a, b) = ((-m) as usize, (-m - 1) as usize);
                (tail[b] - tail[a], -pref * power_difference(gamma_exp, lnq[b], lnq[a]))
            }
        };
        for i in 0..nx {
            let mut acc = fv[0] * tail[i] + fv[nx - 1] * tail[nx - 1 - i];
            for k in 0..nx - 1 {
                let m = k as isize - i as isize;
                let slope = (fv[k + 1] - fv[k]) / h;
                let (m0, m1) = seg(m);
                acc += (fv[k] - slope * m as f64 * h) * m0 + slope * m1;
            }
            values[grid.index(i, 0, j)] = acc;
        }
    }
}

fn extend_2d(cfg: &ExtensionConfig, f: &ThinFunction, grid: &Grid, values: &mut [f64]) {
    let h = grid.h();
    let nx = grid.nx();
    let reach = ((cfg.truncation_radius / h).floor() as isize).max(1);
    let fv = f.values();
    for j in 1..grid.ny() {
        let y = grid.y_coord(j);
        let sub = ((4.0 * h / y).ceil() as usize).clamp(1, 16);
        let side = (2 * reach + 1) as usize;
        let mut w = vec![0.0; side * side];
        for a in -reach..=reach {
            for b in -reach..=reach {
                if ((a * a + b * b) as f64).sqrt() * h > cfg.truncation_radius + 0.5 * h {
                    continue;
                }
                let mut acc = 0.0;
                for p in 0..sub {
                    let xa = (a as f64 - 0.5 + (p as f64 + 0.5) / sub as f64) * h;
                    for q in 0..sub {
                        let xb = (b as f64 - 0.5 + (q as f64 + 0.5) / sub as f64) * h;
                        acc += kernel_value(cfg, xa * xa + xb * xb + y * y, y);
                    }
                }
                w[((a + reach) as usize) * side + (b + reach) as usize] = acc * h * h / (sub * sub) as f64;
            }
        }
        let total: f64 = w.iter().sum();
        for i0 in 0..nx[0] {
            for i1 in 0..nx[1] {
                let mut acc = 0.0;
                for a in -reach..=reach {
                    let k0 = (i0 as isize + a).clamp(0, nx[0] as isize - 1) as usize;
                    for b in -reach..=reach {
                        let wk = w[((a + reach) as usize) * side + (b + reach) as usize];
                        if wk == 0.0 {
                            continue;
                        }
                        let k1 = (i1 as isize + b).clamp(0, nx[1] as isize - 1) as usize;
                        acc += wk * fv[grid.slab_index(k0, k1)];
                    }
                }
                values[grid.index(i0, i1, j)] = acc / total;
            }
        }
    }
}

/// `U(t, y) = ((ρ + t)/2)^α` with `ρ = √(t² + y²)`, i.e. `ρ^α cos^{2α}(θ/2)`.
#[inline]
pub fn trivial_value(alpha: f64, t: f64, y: f64) -> f64 {
    let rho = (t * t + y * y).sqrt();
    let w = if t >= 0.0 { 0.5 * (rho + t) } else { 0.5 * y * y / (rho - t) };
    if w <= 0.0 {
        0.0
    } else {
        w.powf(alpha)
    }
}

/// `∫_{B₁} |y|^β |∇U|² = α ∫_{∂B₁} |y|^β U² = α² 4^{1-α} π / sin(πα)` for the
/// unit-trace `U` (per unit length along the free boundary when `n = 2`).
pub fn trivial_energy(alpha: f64) -> f64 {
    alpha * alpha * 4f64.powf(1.0 - alpha) * PI / (PI * alpha).sin()
}

/// Amplitude `c` for which `c U` is a minimizer of the unit-area functional:
/// moving the free boundary by `ds` changes the Dirichlet energy by
/// `c² trivial_energy(α) ds` and the thin area by `ds`.
pub fn minimizing_amplitude(alpha: f64) -> f64 {
    trivial_energy(alpha).sqrt().recip()
}

/// `(U, ∂_t U, ∂_y U)` of the trivial solution; undefined at the origin.
#[inline]
pub fn trivial_value_grad(alpha: f64, t: f64, y: f64) -> (f64, f64, f64) {
    let rho = (t * t + y * y).sqrt();
    if rho == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let w = if t >= 0.0 { 0.5 * (rho + t) } else { 0.5 * y * y / (rho - t) };
    if w <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let u = w.powf(alpha);
    (u, alpha * u / rho, alpha * u / w * y / (2.0 * rho))
}

fn check_direction(n: usize, direction: &[f64]) -> Result<[f64; 2]> {
    let d = thin_point(n, direction)?;
    let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction must be a unit vector, norm {norm}")));
    }
    Ok(d)
}

/// The trivial solution `U` with positivity set `{x·e > 0}` sampled on the grid.
pub fn trivial_solution(grid: &Grid, direction: &[f64]) -> Result<ScalarField> {
    let d = check_direction(grid.n(), direction)?;
    let alpha = grid.alpha();
    Ok(ScalarField::from_fn(grid, |p| trivial_value(alpha, p.x[0] * d[0] + p.x[1] * d[1], p.y)))
}

/// Closed-form flux `lim y^β U_y = 2α 4^{-α} |t|^{-α}` for `t < 0`, zero for `t > 0`.
pub fn trivial_flux(alpha: f64, t: f64) -> f64 {
    if t >= 0.0 {
        0.0
    } else {
        2.0 * alpha * 4f64.powf(-alpha) * (-t).powf(-alpha)
    }
}

/// Richardson combination of the flux quotients at heights `h` and `2h`.
#[inline]
pub fn flux_from_rows(beta: f64, h: f64, u0: f64, u1: f64, u2: f64) -> f64 {
    let p = 1.0 - beta;
    let q1 = p * (u1 - u0) / h.powf(p);
    let q2 = p * (u2 - u0) / (2.0 * h).powf(p);
    let ratio = 2f64.powf(1.0 + beta);
    (ratio * q1 - q2) / (ratio - 1.0)
}

/// Estimate of `lim_{y→0} y^β u_y(x, y)` from the three lowest rows.
pub fn frac_laplacian_trace(field: &ScalarField, x: &[f64]) -> Result<f64> {
    let g = field.grid();
    let c = thin_point(g.n(), x)?;
    if g.ny() < 3 {
        return Err(Error::InvalidGrid("trace extraction needs three rows".into()));
    }
    let h = g.h();
    for a in 0..g.n() {
        if c[a] < g.origin()[a] + h - 1e-12 || c[a] > g.thin_max(a) - h + 1e-12 {
            return Err(Error::OutOfGrid(format!("point {:?} lies on the boundary ring", &c[..g.n()])));
        }
    }
    let it = Interpolant::new(field);
    let row = |j: usize| it.value(Point::new(c, j as f64 * h)).expect("inside");
    Ok(flux_from_rows(g.beta(), h, row(0), row(1), row(2)))
}

#[cfg(test)]
mod tests {

    #[test]
    fn trivial_energy_matches_sphere_quadrature() {
        for alpha in [0.25, 0.5, 0.75] {
            let b = 1.0 - 2.0 * alpha;
            let m = 200_000;
            let q: f64 = (0..m)
                .map(|k| {
                    // θ = π v² removes the endpoint singularity of sin^β.
                    let v = (k as f64 + 0.5) / m as f64;
                    let th = PI * v * v;
                    2.0 * PI * v * th.sin().powf(b) * (0.5 * th).cos().powf(4.0 * alpha)
                })
                .sum::<f64>()
                / m as f64;
            let expect = 2.0 * alpha * q;
            assert!((trivial_energy(alpha) - expect).abs() < 1e-3 * expect, "{alpha}");
        }
        assert!((minimizing_amplitude(0.5) - (2.0 / PI).sqrt()).abs() < 1e-14);
    }

    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use approx::assert_relative_eq;

    #[test]
    fn normalization_half_plane() {
        let cfg = ExtensionConfig::new(1, 0.5).unwrap();
        assert_relative_eq!(cfg.normalization, 1.0 / PI, max_relative = 1e-13);
        assert_relative_eq!(poisson_kernel(&cfg, &[0.0], 1.0).unwrap(), 1.0 / PI, max_relative = 1e-13);
        let p = poisson_kernel(&cfg, &[0.3], 0.7).unwrap();
        assert_relative_eq!(p, 0.7 / (PI * (0.09 + 0.49)), max_relative = 1e-13);
    }

    #[test]
    fn kernel_symmetry_and_singularity() {
        let cfg = ExtensionConfig::new(2, 0.3).unwrap();
        let a = poisson_kernel(&cfg, &[0.2, -0.4], 0.3).unwrap();
        assert_eq!(a, poisson_kernel(&cfg, &[-0.2, 0.4], 0.3).unwrap());
        assert_eq!(a, poisson_kernel(&cfg, &[0.2, -0.4], -0.3).unwrap());
        assert!(poisson_kernel(&cfg, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn kernel_has_unit_mass() {
        for (n, alpha) in [(1, 0.25), (1, 0.5), (1, 0.8), (2, 0.3), (2, 0.5), (2, 0.75)] {
            let cfg = ExtensionConfig::new(n, alpha).unwrap();
            for y in [0.1, 0.5] {
                // Radial quadrature with ρ + y = y (1-s)^{-1/α}, which tames the tail.
                let p = 1.0 / alpha;
                let nodes = crate::quadrature::composite_gauss(0.0, 1.0, 400, 8);
                let surface = if n == 1 { 2.0 } else { 2.0 * PI };
                let m: f64 = nodes
                    .iter()
                    .map(|&(s, w)| {
                        let rho = y * ((1.0 - s).powf(-p) - 1.0);
                        let jac = p * y * (1.0 - s).powf(-p - 1.0);
                        let k = kernel_value(&cfg, rho * rho + y * y, y);
                        w * jac * k * surface * rho.powi(n as i32 - 1)
                    })
                    .sum();
                assert!((m - 1.0).abs() < 1e-3, "n={n} alpha={alpha} y={y} mass={m}");
                assert_relative_eq!(cfg.kernel_mass_within(y, 1e9), 1.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn extension_of_constants() {
        let g = build_grid(GridSpec::new(1, 0.3, 1.0, 1.0 / 16.0).unwrap()).unwrap();
        let cfg = ExtensionConfig::for_grid(&g).unwrap();
        let one = ThinFunction::from_fn(&g, |_| 1.0).unwrap();
        let u = poisson_extend(&cfg, &one, &g).unwrap();
        assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
        let zero = ThinFunction::from_fn(&g, |_| 0.0).unwrap();
        assert!(poisson_extend(&cfg, &zero, &g).unwrap().values().iter().all(|&v| v == 0.0));

        let g2 = build_grid(GridSpec::new(2, 0.6, 0.5, 0.125).unwrap()).unwrap();
        let cfg2 = ExtensionConfig::for_grid(&g2).unwrap();
        let one = ThinFunction::from_fn(&g2, |_| 1.0).unwrap();
        let u = poisson_extend(&cfg2, &one, &g2).unwrap();
        assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-3));
    }

    /// `U` minus the part of its extension lost by freezing the trace at
    /// `√R` beyond `x = R`, by independent quadrature of the tail.
    fn continued_trivial(x: f64, y: f64, r: f64) -> f64 {
        let nodes = crate::quadrature::composite_gauss(0.0, 1.0, 200, 8);
        let lost: f64 = nodes
            .iter()
            .map(|&(s, w)| {
                let xi = r / (1.0 - s).powi(2);
                let jac = 2.0 * r / (1.0 - s).powi(3);
                let p = y / (PI * ((xi - x).powi(2) + y * y));
                w * jac * (xi.sqrt() - r.sqrt()) * p
            })
            .sum();
        trivial_value(0.5, x, y) - lost
    }

    fn max_error_on_half_ball(r: f64, h: f64, oracle: impl Fn(f64, f64) -> f64) -> f64 {
        let g = build_grid(GridSpec::new(1, 0.5, r, h).unwrap()).unwrap();
        let cfg = ExtensionConfig::for_grid(&g).unwrap();
        let f = ThinFunction::from_fn(&g, |x| x[0].max(0.0).sqrt()).unwrap();
        let u = poisson_extend(&cfg, &f, &g).unwrap();
        let mut err: f64 = 0.0;
        for idx in 0..g.node_count() {
            let p = g.point(idx);
            if p.x[0] * p.x[0] + p.y * p.y <= 0.25 {
                err = err.max((u.values()[idx] - oracle(p.x[0], p.y)).abs());
            }
        }
        err / 0.5f64.sqrt()
    }

    #[test]
    fn extension_reproduces_trivial_solution() {
        // Against the exact extension of the continued data: quadrature error only.
        let err = max_error_on_half_ball(2.0, 1.0 / 32.0, |x, y| continued_trivial(x, y, 2.0));
        assert!(err < 0.02, "relative max error {err}");
        // Against U itself the frozen far field costs about y/(π√R).
        let e2 = max_error_on_half_ball(2.0, 1.0 / 16.0, |x, y| trivial_value(0.5, x, y));
        let e8 = max_error_on_half_ball(8.0, 1.0 / 16.0, |x, y| trivial_value(0.5, x, y));
        assert!(e8 < e2 && e8 > 0.3 * e2, "{e2} {e8}");
    }

    #[test]
    fn trivial_solution_values() {
        assert_eq!(trivial_value(0.3, 1.0, 0.0), 1.0);
        assert_eq!(trivial_value(0.3, -1.0, 0.0), 0.0);
        for alpha in [0.25, 0.5, 0.75] {
            assert_relative_eq!(trivial_value(alpha, 0.0, 1.0), 2f64.powf(-alpha), max_relative = 1e-14);
            // Polar form ρ^α cos^{2α}(θ/2).
            let (t, y) = (-0.4f64, 0.3f64);
            let theta = y.atan2(t);
            let polar = (t * t + y * y).sqrt().powf(alpha) * (theta / 2.0).cos().powf(2.0 * alpha);
            assert_relative_eq!(trivial_value(alpha, t, y), polar, max_relative = 1e-12);
        }
    }

    #[test]
    fn trivial_gradient_matches_differences() {
        let (a, t, y, e) = (0.35, -0.3, 0.2, 1e-6);
        let (_, ut, uy) = trivial_value_grad(a, t, y);
        let dt = (trivial_value(a, t + e, y) - trivial_value(a, t - e, y)) / (2.0 * e);
        let dy = (trivial_value(a, t, y + e) - trivial_value(a, t, y - e)) / (2.0 * e);
        assert_relative_eq!(ut, dt, max_relative = 1e-6);
        assert_relative_eq!(uy, dy, max_relative = 1e-6);
    }

    #[test]
    fn direction_must_be_unit() {
        let g = build_grid(GridSpec::new(2, 0.5, 1.0, 0.25).unwrap()).unwrap();
        assert!(trivial_solution(&g, &[1.0, 1.0]).is_err());
        assert!(trivial_solution(&g, &[0.6, 0.8]).is_ok());
    }

    #[test]
    fn trace_flux_of_trivial_solution() {
        let g = build_grid(GridSpec::new(1, 0.5, 1.0, 1.0 / 64.0).unwrap()).unwrap();
        let u = trivial_solution(&g, &[1.0]).unwrap();
        assert!(frac_laplacian_trace(&u, &[0.5]).unwrap().abs() < 1e-2);
        let v = frac_laplacian_trace(&u, &[-1.0 + 1.0 / 64.0]).unwrap();
        assert!((v - trivial_flux(0.5, -1.0 + 1.0 / 64.0)).abs() < 0.02);
        assert!(frac_laplacian_trace(&u, &[-1.0]).is_err());
        let c = ScalarField::constant(&g, 2.0);
        assert_eq!(frac_laplacian_trace(&c, &[0.1]).unwrap(), 0.0);
    }

    #[test]
    fn trace_flux_within_five_percent() {
        for alpha in [0.25, 0.5, 0.75] {
            let g = build_grid(GridSpec::new(1, alpha, 1.0, 1.0 / 64.0).unwrap()).unwrap();
            let u = trivial_solution(&g, &[1.0]).unwrap();
            for t in [-0.2, -0.4, -0.6, -0.8] {
                let v = frac_laplacian_trace(&u, &[t]).unwrap();
                let e = trivial_flux(alpha, t);
                assert!((v - e).abs() / e < 0.05, "alpha={alpha} t={t} {v} vs {e}");
            }
        }
    }
}
