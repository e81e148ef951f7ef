mod common;

use proptest::prelude::*;

use hardy_flow::grid::random_band_limited;
use hardy_flow::logineq::verify_main_inequality;
use hardy_flow::norms::{bmo_seminorm, lp_norm};
use hardy_flow::osgood::{integrate_majorant, OsgoodProblem, Series};
use hardy_flow::splitting::{truncate_split, SplitConfig};
use hardy_flow::{Axis, GridSpec, ScalarField};

fn field(n: usize, range: f64) -> impl Strategy<Value = ScalarField> {
    prop::collection::vec(-range..range, n * n)
        .prop_map(move |v| ScalarField::new(GridSpec::new(n).unwrap(), v).unwrap())
}

fn translated(g: &ScalarField, d1: usize, d2: usize) -> ScalarField {
    let grid = g.grid();
    let n = grid.points_per_axis();
    let v = (0..grid.len()).map(|k| g.at((k / n + d1) % n, (k % n + d2) % n)).collect();
    ScalarField::new(grid, v).unwrap()
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn final_value(f: f64, g: f64, g0: f64, nu: f64, penalty: f64, horizon: f64) -> f64 {
    let p = OsgoodProblem::new(
        Series::constant(f).unwrap(),
        Series::constant(g).unwrap(),
        Series::constant(g0).unwrap(),
        nu,
        penalty,
        horizon,
    )
    .unwrap();
    let tr = integrate_majorant(&p).unwrap();
    assert!(tr.blow_up.is_none());
    tr.final_value()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_reconstructs_exactly(alpha in field(16, 60.0), m in 1.01f64..40.0) {
        let s = truncate_split(&alpha, SplitConfig::new(m, 1.0).unwrap());
        for ((&a, &am), &ar) in alpha.values().iter().zip(s.alpha_m.values()).zip(s.alpha_r.values()) {
            prop_assert_eq!(am + ar, a, "m = {:e}, am = {:e}, ar = {:e}", m, am, ar);
            prop_assert!(am.abs() <= m);
            if a.abs() <= m {
                prop_assert_eq!(ar, 0.0);
                prop_assert_eq!(am, a);
            } else {
                prop_assert!(am * a > 0.0 && ar * a >= 0.0);
            }
        }
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity(seed in any::<u64>(), kmax in 1usize..7) {
        let grid = GridSpec::new(16).unwrap();
        let f = random_band_limited(grid, kmax, seed).unwrap();
        let sum = Axis::ALL
            .iter()
            .map(|&a| f.riesz_transform(a).riesz_transform(a))
            .reduce(|x, y| x.add(&y).unwrap())
            .unwrap();
        let target = f.minus_mean().scaled(-1.0).unwrap();
        prop_assert!(max_diff(&sum, &target) < 1e-12 * (1.0 + f.max_abs()));
        // each transform is an L2 contraction
        for a in Axis::ALL {
            let r = f.riesz_transform(a);
            prop_assert!(lp_norm(&r, 2.0).unwrap() <= lp_norm(&f.minus_mean(), 2.0).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bmo_ignores_constants_translations_and_sign(g in field(16, 5.0), c in -100.0f64..100.0, d1 in 0usize..16, d2 in 0usize..16) {
        let b = bmo_seminorm(&g);
        let tol = 1e-12 * (1.0 + b + c.abs());
        prop_assert!((bmo_seminorm(&g.shifted(c).unwrap()) - b).abs() < tol);
        prop_assert!((bmo_seminorm(&translated(&g, d1, d2)) - b).abs() < tol);
        prop_assert!((bmo_seminorm(&g.scaled(-1.0).unwrap()) - b).abs() < tol);
        prop_assert!(b <= 2.0 * g.max_abs() + tol);
    }

    #[test]
    fn bmo_matches_brute_force(g in field(16, 3.0)) {
        let fast = bmo_seminorm(&g);
        let slow = common::brute_force_bmo(&g);
        prop_assert!((fast - slow).abs() < 1e-12, "fast {} slow {}", fast, slow);
    }

    #[test]
    fn bmo_matches_brute_force_small(g in field(8, 10.0)) {
        prop_assert!((bmo_seminorm(&g) - common::brute_force_bmo(&g)).abs() < 1e-12);
    }

    #[test]
    fn inequality_sides_scale(f in field(8, 2.0), g in field(8, 2.0), lam in 0.01f64..100.0) {
        let base = verify_main_inequality(&f, &g).unwrap();
        let scaled_f = verify_main_inequality(&f.scaled(lam).unwrap(), &g).unwrap();
        let scaled_g = verify_main_inequality(&f, &g.scaled(lam).unwrap()).unwrap();
        prop_assert!((scaled_f.lhs - lam * base.lhs).abs() <= 1e-10 * (1.0 + lam * base.lhs));
        prop_assert!((scaled_f.bmo_f - lam * base.bmo_f).abs() <= 1e-10 * (1.0 + lam * base.bmo_f));
        prop_assert!((scaled_g.l1_g - lam * base.l1_g).abs() <= 1e-10 * (1.0 + lam * base.l1_g));
        // the ratio is invariant under scaling f
        if let (Some(a), Some(b)) = (base.ratio, scaled_f.ratio) {
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300));
        }
    }

    #[test]
    fn ratio_is_continuous_through_unit_l1(f in field(8, 2.0), g in field(8, 2.0)) {
        let l1 = lp_norm(&g, 1.0).unwrap();
        prop_assume!(l1 > 1e-6 && bmo_seminorm(&f) > 1e-6);
        let at = |s: f64| verify_main_inequality(&f, &g.scaled(s / l1).unwrap()).unwrap();
        let (below, unit, above) = (at(1.0 - 1e-7), at(1.0), at(1.0 + 1e-7));
        // at ‖g‖₁ = 1 the bracket reduces to ln(1 + ‖g‖∞) > 0, so nothing degenerates
        prop_assert!(unit.bracket > 0.0);
        prop_assert!((unit.bracket - (1.0 + unit.linf_g).ln()).abs() < 1e-9);
        let r = unit.ratio.unwrap();
        for side in [below, above] {
            let q = side.ratio.unwrap();
            prop_assert!((q - r).abs() <= 1e-5 * r, "ratio jumps from {} to {}", r, q);
        }
    }

    #[test]
    fn majorant_is_monotone_in_data(
        f in 0.0f64..2.0,
        g in 0.0f64..0.5,
        g0 in 0.0f64..2.0,
        nu in 1e-4f64..0.5,
        penalty in 0.0f64..5.0,
        bump in 1.01f64..2.0,
    ) {
        let horizon = 0.25;
        let y = final_value(f, g, g0, nu, penalty, horizon);
        prop_assert!(y >= nu);
        prop_assert!(final_value(f, g, g0, nu * bump, penalty, horizon) >= y);
        prop_assert!(final_value(f * bump + 0.01, g, g0, nu, penalty, horizon) >= y);
        prop_assert!(final_value(f, g * bump + 0.01, g0, nu, penalty, horizon) >= y);
        prop_assert!(final_value(f, g, g0 * bump + 0.01, nu, penalty, horizon) >= y);
        prop_assert!(final_value(f, g, g0, nu, penalty * bump + 0.01, horizon) >= y);
    }
}
