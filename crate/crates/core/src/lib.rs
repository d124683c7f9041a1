//! Numerical laboratory for the thin one-phase free boundary problem.
//!
//! Minimizes `∫ |y|^β |∇u|² + m({u > 0} ∩ ℝⁿ)` on half-space tensor grids and
//! measures the regularity structures of the minimizers: Weiss densities,
//! the flux measure λ, flatness, β-numbers and symmetry distances.

pub mod calculus;
pub mod diagnostics;
pub mod cg;
pub mod error;
pub mod energy;
pub mod extension;
pub mod grid;
pub mod interp;
pub mod io;
pub mod operator;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod strata;
pub mod validation;

pub use error::{Error, Result};
pub use grid::{build_grid, Grid, GridSpec, Phase, Point, ScalarField, ThinMask, WeightedMeasure};
