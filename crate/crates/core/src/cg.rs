//! Jacobi-preconditioned conjugate gradients on a matrix-free SPD operator.

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self { rel_tol: DEFAULT_REL_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final residual norm divided by the reference norm.
    pub residual: f64,
    pub converged: bool,
}

impl CgOutcome {
    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { iterations: self.iterations, residual: self.residual })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` starting from the contents of `x`.
///
/// Convergence is declared when `‖b - A x‖ <= rel_tol * reference`. Entries
/// with a zero diagonal are treated as inactive and left untouched.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    reference: f64,
    cfg: &CgConfig,
) -> CgOutcome {
    let len = b.len();
    let mut r = vec![0.0; len];
    let mut ap = vec![0.0; len];
    apply(x, &mut ap);
    for i in 0..len {
        r[i] = if diag[i] > 0.0 { b[i] - ap[i] } else { 0.0 };
    }
    let reference = if reference > 0.0 { reference } else { 1.0 };
    let target = cfg.rel_tol * reference;
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= target {
        return CgOutcome { iterations: 0, residual: rnorm / reference, converged: true };
    }
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=cfg.max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return CgOutcome { iterations: it, residual: rnorm / reference, converged: false };
        }
        let a = rz / pap;
        for i in 0..len {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= target {
            return CgOutcome { iterations: it, residual: rnorm / reference, converged: true };
        }
        for i in 0..len {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let bcoef = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = z[i] + bcoef * p[i];
        }
    }
    CgOutcome { iterations: cfg.max_iter, residual: rnorm / reference, converged: false }
}
