//! Weighted ball means, weighted volume integrals and the Caccioppoli check.

use crate::energy::ball_dirichlet;
use crate::error::{Error, Result};
use crate::grid::{ball_nodes, thin_point, Point, ScalarField, WeightedMeasure};
use crate::interp::Interpolant;
use crate::quadrature::{box_distance2, weighted_quantiles};

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `Σ ω_i u_i / Σ ω_i` over the nodes of the closed ball about `(center, 0)`,
/// with `ω` the dual-cell weights of both half-spaces.
pub fn weighted_ball_mean(field: &ScalarField, center: &[f64], r: f64) -> Result<f64> {
    let g = field.grid();
    let c = thin_point(g.n(), center)?;
    g.check_ball(c, r)?;
    let w = WeightedMeasure::new(g);
    let (mut num, mut den) = (NeumaierSum::default(), NeumaierSum::default());
    for i in ball_nodes(g, c, r) {
        num.add(w.cell_weights()[i] * field.values()[i]);
        den.add(w.cell_weights()[i]);
    }
    let (num, den) = (num.value(), den.value());
    if den <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(num / den)
}

/// `∫_{B_{r_out} ∖ B_{r_in}} |y|^β F(u)` over both halves, with `u` read from
/// the interpolant at weight-quantile sample points of each cell.
pub fn annulus_integral(field: &ScalarField, c: [f64; 2], r_in: f64, r_out: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let g = field.grid();
    g.check_ball(c, r_out)?;
    let h = g.h();
    let n = g.n();
    let it = Interpolant::new(field);
    let (ri2, ro2) = (r_in * r_in, r_out * r_out);
    let span = |a: usize| -> (usize, usize) {
        let cells = g.nx()[a] - 1;
        let lo = ((c[a] - r_out - g.origin()[a]) / h).floor().max(0.0) as usize;
        let hi = (((c[a] + r_out - g.origin()[a]) / h).ceil().max(0.0) as usize).min(cells);
        (lo.min(cells), hi)
    };
    let (a0, b0) = span(0);
    let (a1, b1) = if n == 2 { span(1) } else { (0, 1) };
    let rows = ((r_out / h).ceil() as usize).min(g.ny() - 1);
    let coarse: Vec<Vec<f64>> = (0..rows).map(|j| weighted_quantiles(j as f64 * h, (j + 1) as f64 * h, g.beta(), 2)).collect();
    let fine: Vec<Vec<f64>> = (0..rows).map(|j| weighted_quantiles(j as f64 * h, (j + 1) as f64 * h, g.beta(), 6)).collect();
    let mut acc = 0.0;
    for i0 in a0..b0 {
        for i1 in a1..b1 {
            for j in 0..rows {
                let lo = [g.thin_coord(0, i0), if n == 2 { g.thin_coord(1, i1) } else { 0.0 }, g.y_coord(j)];
                let hi = [lo[0] + h, if n == 2 { lo[1] + h } else { 0.0 }, lo[2] + h];
                let cc = [c[0], if n == 2 { c[1] } else { 0.0 }, 0.0];
                let (near, far) = box_distance2(&cc, &lo, &hi);
                if near >= ro2 || far <= ri2 {
                    continue;
                }
                let whole = far <= ro2 && near >= ri2;
                let (m, yq) = if whole { (2, &coarse[j]) } else { (6, &fine[j]) };
                let volume = h.powi(n as i32) * h * g.mean_face_weight(j);
                let count = m * (if n == 2 { m } else { 1 }) * yq.len();
                let mut sum = 0.0;
                for a in 0..m {
                    let x0 = lo[0] + (a as f64 + 0.5) / m as f64 * h;
                    for b in 0..(if n == 2 { m } else { 1 }) {
                        let x1 = if n == 2 { lo[1] + (b as f64 + 0.5) / m as f64 * h } else { 0.0 };
                        for &y in yq.iter() {
                            let d2 = (x0 - cc[0]).powi(2) + (x1 - cc[1]).powi(2) + y * y;
                            if whole || (d2 <= ro2 && d2 >= ri2) {
                                let v = it.value(Point::new([x0, x1], y)).expect("inside grid");
                                sum += f(v);
                            }
                        }
                    }
                }
                acc += volume * sum / count as f64;
            }
        }
    }
    Ok(2.0 * acc)
}

/// `(∫_{B_{r/2}} |y|^β |∇u|², (4/r²) ∫_{B_r ∖ B_{r/2}} |y|^β u²)`.
pub fn caccioppoli_check(field: &ScalarField, center: &[f64], r: f64) -> Result<(f64, f64)> {
    let g = field.grid();
    let c = thin_point(g.n(), center)?;
    g.check_ball(c, r)?;
    let lhs = ball_dirichlet(field, c, 0.5 * r);
    let rhs = 4.0 / (r * r) * annulus_integral(field, c, 0.5 * r, r, |v| v * v)?;
    Ok((lhs, rhs))
}
