//! Off-grid evaluation of fields.
//!
//! Multilinear in the thin directions and in `y`, except in the lowest cell
//! row where the vertical basis is `(y/h)^{1-β}`, the leading behaviour of an
//! even ℒ-harmonic function near the slab. Negative `y` reflects.

use crate::grid::{Point, ScalarField};

const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Interpolant<'a> {
    field: &'a ScalarField,
    one_minus_beta: f64,
}

#[derive(Debug, Clone, Copy)]
struct Locus {
    i: [usize; 2],
    s: [f64; 2],
    j: usize,
    tau: f64,
    dtau: f64,
}

impl<'a> Interpolant<'a> {
    pub fn new(field: &'a ScalarField) -> Self {
        Self { field, one_minus_beta: 1.0 - field.grid().beta() }
    }

    pub fn field(&self) -> &ScalarField {
        self.field
    }

    fn locate(&self, p: Point) -> Option<Locus> {
        let g = self.field.grid();
        let h = g.h();
        let mut i = [0usize; 2];
        let mut s = [0.0f64; 2];
        for a in 0..g.n() {
            let t = (p.x[a] - g.origin()[a]) / h;
            let last = (g.nx()[a] - 1) as f64;
            if t < -EDGE_TOL || t > last + EDGE_TOL {
                return None;
            }
            let k = t.floor().clamp(0.0, last - 1.0);
            i[a] = k as usize;
            s[a] = (t - k).clamp(0.0, 1.0);
        }
        let ty = p.y.abs() / h;
        let last = (g.ny() - 1) as f64;
        if ty > last + EDGE_TOL {
            return None;
        }
        let k = ty.floor().clamp(0.0, last - 1.0);
        let j = k as usize;
        let (tau, dtau) = if j == 0 {
            let t = ty.min(1.0);
            let tt = t.max(1e-300);
            (t.powf(self.one_minus_beta), self.one_minus_beta * tt.powf(-1.0 + self.one_minus_beta) / h)
        } else {
            ((ty - k).clamp(0.0, 1.0), 1.0 / h)
        };
        Some(Locus { i, s, j, tau, dtau })
    }

    pub fn value(&self, p: Point) -> Option<f64> {
        let l = self.locate(p)?;
        let g = self.field.grid();
        let v = |a: usize, b: usize, c: usize| self.field.at(l.i[0] + a, l.i[1] + b, l.j + c);
        let lerp_y = |a: usize, b: usize| v(a, b, 0) * (1.0 - l.tau) + v(a, b, 1) * l.tau;
        let val = if g.n() == 1 {
            lerp_y(0, 0) * (1.0 - l.s[0]) + lerp_y(1, 0) * l.s[0]
        } else {
            let a0 = lerp_y(0, 0) * (1.0 - l.s[1]) + lerp_y(0, 1) * l.s[1];
            let a1 = lerp_y(1, 0) * (1.0 - l.s[1]) + lerp_y(1, 1) * l.s[1];
            a0 * (1.0 - l.s[0]) + a1 * l.s[0]
        };
        Some(val)
    }

    /// Value and gradient `[∂x0, ∂x1, ∂y]`; the `y` component is odd under reflection.
    pub fn value_grad(&self, p: Point) -> Option<(f64, [f64; 3])> {
        let l = self.locate(p)?;
        let g = self.field.grid();
        let h = g.h();
        let v = |a: usize, b: usize, c: usize| self.field.at(l.i[0] + a, l.i[1] + b, l.j + c);
        let sign = if p.y < 0.0 { -1.0 } else { 1.0 };
        let (s0, s1, t) = (l.s[0], l.s[1], l.tau);
        if g.n() == 1 {
            let (v00, v01, v10, v11) = (v(0, 0, 0), v(0, 0, 1), v(1, 0, 0), v(1, 0, 1));
            let left = v00 * (1.0 - t) + v01 * t;
            let right = v10 * (1.0 - t) + v11 * t;
            let val = left * (1.0 - s0) + right * s0;
            let dx = (right - left) / h;
            let dt = (v01 - v00) * (1.0 - s0) + (v11 - v10) * s0;
            Some((val, [dx, 0.0, sign * dt * l.dtau]))
        } else {
            let mut c = [[[0.0; 2]; 2]; 2];
            for (a, ca) in c.iter_mut().enumerate() {
                for (b, cb) in ca.iter_mut().enumerate() {
                    for (k, ck) in cb.iter_mut().enumerate() {
                        *ck = v(a, b, k);
                    }
                }
            }
            let w = |x: f64, i: usize| if i == 0 { 1.0 - x } else { x };
            let dw = |i: usize| if i == 0 { -1.0 } else { 1.0 };
            let (mut val, mut d0, mut d1, mut dt) = (0.0, 0.0, 0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    for k in 0..2 {
                        let cv = c[a][b][k];
                        val += cv * w(s0, a) * w(s1, b) * w(t, k);
                        d0 += cv * dw(a) * w(s1, b) * w(t, k);
                        d1 += cv * w(s0, a) * dw(b) * w(t, k);
                        dt += cv * w(s0, a) * w(s1, b) * dw(k);
                    }
                }
            }
            Some((val, [d0 / h, d1 / h, sign * dt * l.dtau]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};

    #[test]
    fn reproduces_nodes_and_linear_thin_data() {
        let g = build_grid(GridSpec::new(2, 0.4, 1.0, 0.125).unwrap()).unwrap();
        let f = ScalarField::from_fn(&g, |p| 1.0 + 2.0 * p.x[0] - p.x[1] + 0.5 * p.y);
        let it = Interpolant::new(&f);
        for idx in [0, 17, 301, g.node_count() - 1] {
            let p = g.point(idx);
            assert!((it.value(p).unwrap() - f.values()[idx]).abs() < 1e-12);
        }
        let (v, gr) = it.value_grad(Point::new([0.31, -0.27], 0.6)).unwrap();
        assert!((v - (1.0 + 0.62 + 0.27 + 0.3)).abs() < 1e-12);
        assert!((gr[0] - 2.0).abs() < 1e-12 && (gr[1] + 1.0).abs() < 1e-12 && (gr[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn even_reflection() {
        let g = build_grid(GridSpec::new(1, 0.3, 1.0, 0.125).unwrap()).unwrap();
        let f = ScalarField::from_fn(&g, |p| p.y * p.y + p.x[0]);
        let it = Interpolant::new(&f);
        let a = it.value_grad(Point::new([0.2, 0.0], 0.05)).unwrap();
        let b = it.value_grad(Point::new([0.2, 0.0], -0.05)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1[2], -b.1[2]);
    }

    #[test]
    fn outside_is_none() {
        let g = build_grid(GridSpec::new(1, 0.3, 1.0, 0.125).unwrap()).unwrap();
        let f = ScalarField::zeros(&g);
        let it = Interpolant::new(&f);
        assert!(it.value(Point::new([1.2, 0.0], 0.1)).is_none());
        assert!(it.value(Point::new([0.2, 0.0], 1.1)).is_none());
    }
}
