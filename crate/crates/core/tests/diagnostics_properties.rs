use thinfb_core::diagnostics::{extract_free_boundary, flatness, half_ball_density, lambda_ball, lambda_density, lambda_growth, FreeBoundary};
use thinfb_core::energy::weiss_density;
use thinfb_core::extension::trivial_solution;
use thinfb_core::solver::{minimize, BoundaryData, SolveConfig, SolveResult};
use thinfb_core::{build_grid, Grid, GridSpec, ThinMask};

fn grid(n: usize, alpha: f64, spacing: f64) -> Grid {
    build_grid(GridSpec::new(n, alpha, 1.0, spacing).unwrap()).unwrap()
}

fn solve(g: &Grid, seed: u64) -> SolveResult {
    let res = minimize(g, &BoundaryData::Random(seed).build(g).unwrap(), &SolveConfig::default()).unwrap();
    assert!(res.converged);
    res
}

/// Zero-side free boundary node closest to the origin.
fn front_point(res: &SolveResult) -> Vec<f64> {
    let g = res.field.grid();
    let fb = extract_free_boundary(res);
    let norm = |s: usize| g.slab_point(s)[0].hypot(g.slab_point(s)[1]);
    let s = fb.zero_side.iter().cloned().min_by(|a, b| norm(*a).total_cmp(&norm(*b))).expect("front");
    g.slab_point(s)[..g.n()].to_vec()
}

#[test]
fn lambda_is_nonnegative_away_from_fronts() {
    for alpha in [0.25, 0.5, 0.75] {
        let g = grid(1, alpha, 1.0 / 64.0);
        // extraction error of the closed-form solution on its positive side
        let u = lambda_density(&trivial_solution(&g, &[1.0]).unwrap()).unwrap();
        let tol = (0..g.slab_count())
            .filter(|&s| (0.25..=0.75).contains(&g.slab_point(s)[0]))
            .filter_map(|s| u.density[s])
            .map(f64::abs)
            .fold(0.0, f64::max);
        for seed in 0..6 {
            let res = solve(&g, seed);
            let dens = lambda_density(&res.field).unwrap();
            let fb = extract_free_boundary(&res);
            for s in 0..g.slab_count() {
                let x = g.slab_point(s)[0];
                let far = fb.points.iter().all(|p| (p[0] - x).abs() >= 0.25) && 1.0 - x.abs() >= 0.25;
                if let (true, Some(d)) = (far, dens.density[s]) {
                    assert!(d >= -10.0 * tol, "alpha {alpha} seed {seed} x {x}: {d} < -10 * {tol:e}");
                }
            }
            for p in &fb.points {
                for r in [0.1, 0.2, 0.4] {
                    if let Ok(l) = lambda_ball(&res.field, p, r) {
                        assert!(l > 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn lambda_growth_stays_in_a_positive_band() {
    for alpha in [0.25, 0.5, 0.75] {
        let g = grid(1, alpha, 1.0 / 64.0);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for seed in 0..6 {
            let res = solve(&g, seed);
            let radii: Vec<f64> = (0..6).map(|k| 4.0 * g.h() * (0.5 / (4.0 * g.h())).powf(k as f64 / 5.0)).collect();
            let growth = lambda_growth(&res.field, &front_point(&res), &radii).unwrap();
            lo = lo.min(growth.min_ratio);
            hi = hi.max(growth.max_ratio);
        }
        eprintln!("alpha {alpha}: lambda(B_r) / r^(1-alpha) in [{lo:.4}, {hi:.4}]");
        assert!(lo > 0.0 && hi.is_finite() && hi / lo < 2.0);
    }
}

#[test]
fn weiss_density_at_fronts_is_at_least_half_a_ball() {
    for (n, h, r_min) in [(1, 1.0 / 64.0, 4.0), (2, 1.0 / 16.0, 6.0)] {
        let floor = 0.95 * half_ball_density(n);
        for alpha in [0.25, 0.5, 0.75] {
            let g = grid(n, alpha, h);
            for seed in 0..if n == 1 { 6 } else { 2 } {
                let res = solve(&g, seed);
                let p = front_point(&res);
                let mut r = r_min * h;
                while r <= 0.5 {
                    if let Ok(psi) = weiss_density(&res.field, &p, r) {
                        assert!(psi >= floor, "n {n} alpha {alpha} seed {seed} r {r}: {psi} < {floor}");
                    }
                    r *= 1.5;
                }
            }
        }
    }
}

#[test]
fn trivial_masks_are_flat() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for dir in [[0.0, 1.0], [1.0, 0.0], [s, s]] {
        let g = grid(2, 0.5, 1.0 / 32.0);
        let mask = ThinMask::from_field(&trivial_solution(&g, &dir).unwrap());
        let fb = FreeBoundary::from_mask(&mask);
        assert!(!fb.is_empty());
        let mut checked = 0;
        for p in fb.points.iter().step_by(7) {
            for r in [0.125, 0.25, 0.5] {
                if let Ok(f) = flatness(&mask, p, r) {
                    assert!(f.epsilon <= 2.0 * g.h() / r, "{dir:?} at {p:?}, r {r}: {}", f.epsilon);
                    checked += 1;
                }
            }
        }
        assert!(checked >= 10, "{checked}");
    }
}
