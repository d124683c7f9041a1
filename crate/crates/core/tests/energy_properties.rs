use proptest::prelude::*;
use thinfb_core::diagnostics::rescale_blowup;
use thinfb_core::energy::{eval_j_local, weiss_deficit, weiss_density, Region};
use thinfb_core::solver::BoundaryData;
use thinfb_core::{build_grid, Grid, GridSpec};

fn grid(n: usize, alpha: f64, spacing: f64) -> Grid {
    build_grid(GridSpec::new(n, alpha, 1.0, spacing).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn weiss_density_commutes_with_blowup(
        alpha in prop::sample::select(vec![0.25, 0.5, 0.75]),
        seed in any::<u64>(),
        node in -8i32..=8,
        r in prop::sample::select(vec![0.25, 0.4]),
    ) {
        // Ψ is first-order in h; the gap measured over many seeds is about 8h
        let g = grid(1, alpha, 1.0 / 256.0);
        let u = BoundaryData::Random(seed).build(&g).unwrap();
        let x0 = node as f64 / 64.0;
        let rho = 0.5;
        let blown = rescale_blowup(&u, &[x0], rho).unwrap();
        let a = weiss_density(&blown, &[0.0], r).unwrap();
        let b = weiss_density(&u, &[x0], rho * r).unwrap();
        prop_assert!((a - b).abs() <= 10.0 * g.h() * b.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn deficit_is_nonnegative(
        n in 1usize..=2,
        alpha in 0.1f64..0.9,
        seed in any::<u64>(),
        rho in 0.1f64..0.3,
        width in 0.05f64..0.3,
    ) {
        let g = grid(n, alpha, if n == 1 { 1.0 / 32.0 } else { 0.125 });
        let u = BoundaryData::Random(seed).build(&g).unwrap();
        let d = weiss_deficit(&u, [0.0, 0.0], rho, rho + width).unwrap();
        prop_assert!(d >= 0.0);
    }

    #[test]
    fn local_energy_adds_over_disjoint_balls(
        n in 1usize..=2,
        seed in any::<u64>(),
        split in -0.05f64..0.05,
    ) {
        let g = grid(n, 0.5, if n == 1 { 1.0 / 32.0 } else { 0.125 });
        let u = BoundaryData::Random(seed).build(&g).unwrap();
        let left = [-0.5 + split, 0.0];
        let right = [0.5 + split, 0.0];
        let r = 0.4;
        let ball = |c: [f64; 2]| Region::Ball { center: c, radius: r };
        let a = eval_j_local(&u, &ball(left)).unwrap();
        let b = eval_j_local(&u, &ball(right)).unwrap();
        let both = eval_j_local(&u, &Region::Domain).unwrap();
        prop_assert!(a.total + b.total <= both.total + 1e-12);
        prop_assert!((a.total - (a.dirichlet + a.thin_area)).abs() == 0.0);
    }
}
