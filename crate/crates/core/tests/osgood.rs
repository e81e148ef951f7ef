mod common;

use hardy_flow::osgood::{
    gronwall_bound, integrate_majorant, integrate_majorant_fixed, rate_exponent, simplified_gronwall_bound,
    OsgoodProblem, Series,
};

#[test]
fn pure_log_growth_matches_separable_solution() {
    for &(m, nu, horizon) in &[(1.0, 0.01, 0.5), (3.0, 1e-3, 0.4), (0.5, 0.2, 2.0), (2.0, 0.05, 1.0)] {
        let p = OsgoodProblem::constant(m, 0.0, 0.0, nu, horizon).unwrap();
        let tr = integrate_majorant(&p).unwrap();
        assert!(tr.converged && tr.blow_up.is_none());
        let exact = common::separable_majorant(m, nu, p.log_penalty, horizon);
        let rel = (tr.final_value() - exact).abs() / exact;
        assert!(rel < 1e-8, "M = {m}, nu = {nu}: {} vs {exact} ({rel:e})", tr.final_value());
    }
}

#[test]
fn intermediate_samples_match_oracle() {
    let p = OsgoodProblem::constant(2.0, 0.0, 0.0, 1e-3, 1.5).unwrap();
    let tr = integrate_majorant(&p).unwrap();
    for t in [0.1, 0.37, 0.8, 1.2, 1.5] {
        let exact = common::separable_majorant(2.0, 1e-3, p.log_penalty, t);
        assert!((tr.eval(t) - exact).abs() / exact < 1e-6, "t = {t}");
    }
}

#[test]
fn rk4_is_fourth_order_below_the_crossing() {
    // y stays below 1 on [0, T], where the right side is smooth
    let p = OsgoodProblem::constant(1.0, 0.05, 0.5, 1e-3, 0.3).unwrap();
    let full = integrate_majorant(&p).unwrap();
    assert!(full.final_value() < 1.0);
    let at = |n| integrate_majorant_fixed(&p, n).unwrap().final_value();
    let (a, b, c) = (at(16), at(32), at(64));
    let order = ((a - b) / (b - c)).abs().log2();
    assert!(order >= 3.5, "observed order {order}");
}

#[test]
fn gronwall_dominates_small_coefficients() {
    let corpus = [
        (0.5, 0.01, 0.1, 1e-3, 0.2),
        (1.0, 0.0, 0.0, 1e-2, 0.25),
        (0.2, 0.1, 1.0, 1e-4, 0.5),
        (2.0, 0.001, 0.0, 1e-6, 0.05),
    ];
    for (f, g, g0, nu, horizon) in corpus {
        let p = OsgoodProblem::constant(f, g, g0, nu, horizon).unwrap();
        let tr = integrate_majorant(&p).unwrap();
        assert!(tr.y.iter().all(|&y| y <= 1.0), "corpus entry leaves the region y <= 1");
        for (&t, &y) in tr.times.iter().zip(&tr.y) {
            let b = gronwall_bound(&p, t, 1.0).unwrap();
            assert!(y <= b * (1.0 + 1e-12), "t = {t}: y = {y} > {b}");
            // the (2/ν²)^∫f form differs from the full exponent by (e(1+ν)/2)^∫f
            let ratio = b / simplified_gronwall_bound(&p, t, 1.0).unwrap();
            let expected = (f * t * (std::f64::consts::E * (1.0 + nu) / 2.0).ln()).exp();
            assert!((ratio - expected).abs() < 1e-10 * expected);
        }
    }
}

#[test]
fn time_dependent_coefficients_respect_breakpoints() {
    // f switches off at t = 0.5, after which y grows only through g
    let f = Series::new(vec![0.0, 0.5, 0.5 + 1e-12, 1.0], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
    let g = Series::constant(0.1).unwrap();
    let g0 = Series::constant(0.0).unwrap();
    let p = OsgoodProblem::new(f, g, g0, 0.01, 0.0, 1.0).unwrap();
    let tr = integrate_majorant(&p).unwrap();
    let y_half = tr.eval(0.5);
    assert!((tr.final_value() - (y_half + 0.05)).abs() < 1e-8);
}

#[test]
fn rate_iterates_stay_within_envelope() {
    for &(m, horizon) in &[(0.5, 1.0), (2.0, 0.5), (10.0, 0.2)] {
        let r = rate_exponent(m, horizon).unwrap();
        assert!((r.exponent - (-2.0 * m * horizon).exp()).abs() < 1e-15);
        let mut prev = 0.0;
        for n in [4u64, 16, 64, 256, 1024, 1 << 16] {
            if (n as f64) <= horizon {
                continue;
            }
            let it = r.iterate(n).unwrap();
            assert!(it <= r.exponent && it >= prev, "iterates increase to the limit");
            assert!(r.exponent - it <= r.envelope(n), "n = {n}");
            prev = it;
        }
        let lim = r.extrapolated_limit(64, 6).unwrap();
        assert!((lim - r.exponent).abs() < 1e-10 * r.exponent.max(1e-300));
        assert!(r.certify_convergence(&[64, 128, 256, 512]).unwrap());
    }
}
