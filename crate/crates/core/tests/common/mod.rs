//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use hardy_flow::grid::{GridSpec, ScalarField};

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `y(T)` for `y' = M y (|ln y| + 1 + P)`, `y(0) = ν`, by inverting the
/// elapsed-time integral `∫_{ln ν}^{s} ds / (M (|s| + 1 + P)) = T` in `s = ln y`.
pub fn separable_majorant(m: f64, nu: f64, penalty: f64, horizon: f64) -> f64 {
    let s0 = nu.ln();
    let rate = |s: f64| 1.0 / (m * (s.abs() + 1.0 + penalty));
    let elapsed = |s: f64| {
        if s <= 0.0 || s0 >= 0.0 {
            simpson(&rate, s0, s, 1e-15)
        } else {
            simpson(&rate, s0, 0.0, 1e-15) + simpson(&rate, 0.0, s, 1e-15)
        }
    };
    let mut hi = s0 + 1.0;
    while elapsed(hi) < horizon {
        hi = s0 + 2.0 * (hi - s0);
    }
    let mut lo = s0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if elapsed(mid) < horizon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// BMO seminorm by direct enumeration of every grid-aligned periodic square
/// of dyadic side, with a separately coded mean and deviation.
pub fn brute_force_bmo(g: &ScalarField) -> f64 {
    let grid: GridSpec = g.grid();
    let n = grid.points_per_axis();
    let mut best: f64 = 0.0;
    let mut side = n;
    while side >= 1 {
        for o1 in 0..n {
            for o2 in 0..n {
                let cells: Vec<f64> = (0..side)
                    .flat_map(|a| (0..side).map(move |b| ((o1 + a) % n, (o2 + b) % n)))
                    .map(|(i, j)| g.at(i, j))
                    .collect();
                let mean = cells.iter().sum::<f64>() / cells.len() as f64;
                let dev = cells.iter().map(|v| (v - mean).abs()).sum::<f64>() / cells.len() as f64;
                best = best.max(dev);
            }
        }
        side /= 2;
    }
    best
}
