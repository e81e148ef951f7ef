//! Logarithmic majorant ODE
//!
//! ```text
//! y' = f(t) y (|ln y| + 1 + P) + g(t) + ν g₀(t)²,   y(0) = ν,
//! ```
//!
//! its closed-form Gronwall bounds, and the limiting rate exponent
//! `e^{−2MT}`. `P` is the log penalty, `ln(1 + 1/ν)` in the inviscid setting.

use crate::error::{invalid, Error, Result};
use crate::io::fmt17;

/// Piecewise-linear time samples; constant beyond the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Series {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(invalid("series needs matching, nonempty times and values"));
        }
        if times[0] != 0.0 {
            return Err(invalid("series must start at t = 0"));
        }
        if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(invalid("series times must be strictly increasing"));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { times, values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![value])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.times.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0];
        }
        if k == self.times.len() {
            return self.values[k - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1] + w * (self.values[k] - self.values[k - 1])
    }

    /// Exact `∫_a^b φ(s(t)) dt` for `φ(v) = v` or `v²` on each linear piece.
    fn integrate_with(&self, a: f64, b: f64, piece: impl Fn(f64, f64, f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut knots = vec![a];
        knots.extend(self.times.iter().copied().filter(|&t| t > a && t < b));
        knots.push(b);
        knots.windows(2).map(|w| piece(w[1] - w[0], self.eval(w[0]), self.eval(w[1]))).sum()
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.integrate_with(a, b, |h, u, v| 0.5 * h * (u + v))
    }

    pub fn integral_of_square(&self, a: f64, b: f64) -> f64 {
        self.integrate_with(a, b, |h, u, v| h * (u * u + u * v + v * v) / 3.0)
    }

    fn covers(&self, horizon: f64) -> bool {
        self.times.len() == 1 || self.end() >= horizon * (1.0 - 1e-12)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsgoodProblem {
    pub f: Series,
    pub g: Series,
    pub g0: Series,
    pub nu: f64,
    pub log_penalty: f64,
    pub horizon: f64,
}

impl OsgoodProblem {
    pub fn new(f: Series, g: Series, g0: Series, nu: f64, log_penalty: f64, horizon: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(invalid(format!("initial value nu must be positive, got {nu}")));
        }
        if !(log_penalty >= 0.0 && log_penalty.is_finite()) {
            return Err(invalid(format!("log penalty must be nonnegative, got {log_penalty}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        for (name, s) in [("f", &f), ("g", &g), ("g0", &g0)] {
            if s.values.iter().any(|&v| v < 0.0) {
                return Err(invalid(format!("coefficient {name} must be nonnegative")));
            }
            if !s.covers(horizon) {
                return Err(invalid(format!("coefficient {name} ends before the horizon")));
            }
        }
        Ok(Self { f, g, g0, nu, log_penalty, horizon })
    }

    /// Constant coefficients with the inviscid penalty `ln(1 + 1/ν)`.
    pub fn constant(f: f64, g: f64, g0: f64, nu: f64, horizon: f64) -> Result<Self> {
        Self::new(Series::constant(f)?, Series::constant(g)?, Series::constant(g0)?, nu, (1.0 / nu).ln_1p(), horizon)
    }

    fn rhs(&self, t: f64, y: f64) -> f64 {
        let g0 = self.g0.eval(t);
        self.f.eval(t) * y * (y.ln().abs() + 1.0 + self.log_penalty) + self.g.eval(t) + self.nu * g0 * g0
    }

    /// Coefficient breakpoints inside `[0, horizon]`, including both ends.
    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = [&self.f, &self.g, &self.g0]
            .iter()
            .flat_map(|s| s.times.iter().copied())
            .filter(|&t| t > 0.0 && t < self.horizon)
            .collect();
        b.push(0.0);
        b.push(self.horizon);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    /// Time at which `y` overflowed; the trajectory stops there.
    pub blow_up: Option<f64>,
    /// Nominal step count on `[0, horizon]` of the accepted resolution.
    pub steps: usize,
    pub converged: bool,
}

impl Trajectory {
    pub fn final_value(&self) -> f64 {
        if self.blow_up.is_some() {
            f64::INFINITY
        } else {
            *self.y.last().expect("trajectory has the initial point")
        }
    }

    /// `y(t)`, interpolating `ln y` linearly; infinite past a blow-up.
    pub fn eval(&self, t: f64) -> f64 {
        let last = *self.times.last().expect("nonempty");
        if t > last {
            return if self.blow_up.is_some() { f64::INFINITY } else { *self.y.last().unwrap() };
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.y[0];
        }
        if k == self.times.len() {
            return self.y[k - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (l0, l1) = (self.y[k - 1].ln(), self.y[k].ln());
        (l0 + (t - t0) / (t1 - t0) * (l1 - l0)).exp()
    }

    /// Rows of `t,y,bound` with the Gronwall bound at unit prefactor.
    pub fn csv_rows(&self, p: &OsgoodProblem) -> Result<Vec<Vec<String>>> {
        self.times
            .iter()
            .zip(&self.y)
            .map(|(&t, &y)| Ok(vec![fmt17(t), fmt17(y), fmt17(gronwall_bound(p, t, 1.0)?)]))
            .collect()
    }
}

pub const TRAJECTORY_CSV_HEADER: [&str; 3] = ["t", "y", "bound"];

const OVERFLOW: f64 = 1e300;
const MAX_STEPS: usize = 1 << 22;

fn rk4(p: &OsgoodProblem, t: f64, y: f64, h: f64) -> f64 {
    let k1 = p.rhs(t, y);
    let k2 = p.rhs(t + 0.5 * h, y + 0.5 * h * k1);
    let k3 = p.rhs(t + 0.5 * h, y + 0.5 * h * k2);
    let k4 = p.rhs(t + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Largest `s ≤ h` with the step landing at or just above `y = 1`.
fn bisect_crossing(p: &OsgoodProblem, t: f64, y: f64, h: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0, h);
    let mut y_hi = rk4(p, t, y, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let ym = rk4(p, t, y, mid);
        if ym >= 1.0 {
            hi = mid;
            y_hi = ym;
        } else {
            lo = mid;
        }
    }
    (hi, y_hi)
}

/// Fixed-step RK4 with `steps` nominal steps on `[0, horizon]`, split at
/// coefficient breakpoints and at the `y = 1` crossing.
pub fn integrate_majorant_fixed(p: &OsgoodProblem, steps: usize) -> Result<Trajectory> {
    if steps == 0 {
        return Err(invalid("step count must be positive"));
    }
    let h_target = p.horizon / steps as f64;
    let mut times = vec![0.0];
    let mut ys = vec![p.nu];
    let (mut t, mut y) = (0.0, p.nu);
    for seg in p.breakpoints().windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let count = ((b - a) / h_target).ceil().max(1.0) as usize;
        for k in 0..count {
            let t_end = if k + 1 == count { b } else { a + (b - a) * (k + 1) as f64 / count as f64 };
            while t < t_end {
                let h = t_end - t;
                let mut next = rk4(p, t, y, h);
                let mut dt = h;
                if y < 1.0 && next > 1.0 {
                    let (s, ys) = bisect_crossing(p, t, y, h);
                    if t + s > t {
                        (dt, next) = (s, ys);
                    }
                }
                t = if dt == h { t_end } else { t + dt };
                y = next;
                if !y.is_finite() || y > OVERFLOW {
                    return Ok(Trajectory { times, y: ys, blow_up: Some(t), steps, converged: false });
                }
                times.push(t);
                ys.push(y);
            }
        }
    }
    Ok(Trajectory { times, y: ys, blow_up: None, steps, converged: false })
}

/// RK4 with step doubling until `y(T)` moves by less than `1e-8` relative.
pub fn integrate_majorant(p: &OsgoodProblem) -> Result<Trajectory> {
    let mut steps = 64;
    let mut coarse = integrate_majorant_fixed(p, steps)?;
    loop {
        steps *= 2;
        let mut fine = integrate_majorant_fixed(p, steps)?;
        let settled = match (coarse.blow_up, fine.blow_up) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-8 * p.horizon,
            (None, None) => {
                let (a, b) = (coarse.final_value(), fine.final_value());
                (a - b).abs() <= 1e-8 * b.abs()
            }
            _ => false,
        };
        if settled || steps >= MAX_STEPS {
            fine.converged = settled;
            return Ok(fine);
        }
        coarse = fine;
    }
}

fn check_bound_args(p: &OsgoodProblem, t: f64, prefactor: f64) -> Result<()> {
    if p.nu >= 1.0 {
        return Err(invalid(format!("closed-form bound needs nu < 1, got {}", p.nu)));
    }
    if !(0.0..=p.horizon * (1.0 + 1e-12)).contains(&t) {
        return Err(invalid(format!("time {t} outside [0, {}]", p.horizon)));
    }
    if !(prefactor >= 0.0 && prefactor.is_finite()) {
        return Err(invalid(format!("prefactor must be nonnegative, got {prefactor}")));
    }
    Ok(())
}

/// `ν + ∫g + ν∫g₀²` on `[0, t]`.
fn forcing(p: &OsgoodProblem, t: f64) -> f64 {
    p.nu + p.g.integral(0.0, t) + p.nu * p.g0.integral_of_square(0.0, t)
}

/// Gronwall bound with `|ln y|` replaced by `ln(1/ν)`:
/// `prefactor · exp((1 + P + ln(1/ν)) ∫f) · (ν + ∫g + ν∫g₀²)`.
pub fn gronwall_bound(p: &OsgoodProblem, t: f64, prefactor: f64) -> Result<f64> {
    check_bound_args(p, t, prefactor)?;
    let rate = 1.0 + p.log_penalty - p.nu.ln();
    Ok(prefactor * (rate * p.f.integral(0.0, t)).exp() * forcing(p, t))
}

/// The further simplified form `prefactor · (2/ν²)^{∫f} · (ν + ∫g + ν∫g₀²)`.
pub fn simplified_gronwall_bound(p: &OsgoodProblem, t: f64, prefactor: f64) -> Result<f64> {
    check_bound_args(p, t, prefactor)?;
    let base = (2.0 / (p.nu * p.nu)).ln();
    Ok(prefactor * (base * p.f.integral(0.0, t)).exp() * forcing(p, t))
}

/// Limiting exponent `e^{−2MT}` of the inviscid rate and its discrete iterates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub m: f64,
    pub horizon: f64,
    pub exponent: f64,
    /// Empirical prefactor `C` in `C ν^{exponent}`.
    pub constant: f64,
}

pub fn rate_exponent(m: f64, horizon: f64) -> Result<RateBound> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(invalid(format!("M must be finite and nonnegative, got {m}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    Ok(RateBound { m, horizon, exponent: (-2.0 * m * horizon).exp(), constant: 1.0 })
}

impl RateBound {
    pub fn with_constant(self, constant: f64) -> Self {
        Self { constant, ..self }
    }

    /// `C ν^{exponent}`.
    pub fn bound(&self, nu: f64) -> f64 {
        self.constant * nu.powf(self.exponent)
    }

    /// `(1 − T/n)^{2Mn}`; undefined once `T/n ≥ 1`.
    pub fn iterate(&self, n: u64) -> Result<f64> {
        let x = self.horizon / n as f64;
        if n == 0 || x >= 1.0 {
            return Err(invalid(format!("iterate undefined for n = {n}: T/n must be < 1")));
        }
        Ok((2.0 * self.m * n as f64 * (-x).ln_1p()).exp())
    }

    /// `2MT²/n · e^{−2MT+1}`, valid for `T/n ≤ 1/2`.
    pub fn envelope(&self, n: u64) -> f64 {
        2.0 * self.m * self.horizon * self.horizon / n as f64 * (1.0 - 2.0 * self.m * self.horizon).exp()
    }

    /// Richardson extrapolation of the iterates at `n0, 2n0, …, 2^levels n0`.
    pub fn extrapolated_limit(&self, n0: u64, levels: u32) -> Result<f64> {
        let mut row: Vec<f64> = (0..=levels).map(|k| self.iterate(n0 << k)).collect::<Result<_>>()?;
        for j in 1..=levels {
            let w = f64::powi(2.0, j as i32);
            row = row.windows(2).map(|p| (w * p[1] - p[0]) / (w - 1.0)).collect();
        }
        Ok(row[0])
    }

    /// True when the iterates at `ns` (increasing) are nondecreasing and each
    /// lies within the explicit envelope of the exponent.
    pub fn certify_convergence(&self, ns: &[u64]) -> Result<bool> {
        let mut prev = f64::NEG_INFINITY;
        for &n in ns {
            let a = self.iterate(n)?;
            let within = 2.0 * self.horizon > n as f64 || (a - self.exponent).abs() <= self.envelope(n);
            if a < prev || !within {
                return Ok(false);
            }
            prev = a;
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationReport {
    pub holds: bool,
    pub tol: f64,
    /// `(t, x, y)` at the first sample with `x > y (1 + tol)`.
    pub first_violation: Option<(f64, f64, f64)>,
    /// Largest `x / y` over the samples.
    pub max_ratio: f64,
    pub trajectory: Trajectory,
}

pub const MAJORIZATION_TOL: f64 = 0.05;

/// Compares measured samples `x(tᵢ)` against the majorant of `p`.
pub fn check_majorization(times: &[f64], x: &[f64], p: &OsgoodProblem, tol: f64) -> Result<MajorizationReport> {
    if times.is_empty() || times.len() != x.len() {
        return Err(invalid("majorization needs matching, nonempty samples"));
    }
    let end = *times.last().unwrap();
    if (end - p.horizon).abs() > 1e-9 * p.horizon {
        return Err(invalid(format!("sample horizon {end} differs from problem horizon {}", p.horizon)));
    }
    let trajectory = integrate_majorant(p)?;
    let mut first_violation = None;
    let mut max_ratio: f64 = 0.0;
    for (&t, &xv) in times.iter().zip(x) {
        let y = trajectory.eval(t);
        max_ratio = max_ratio.max(xv / y);
        if first_violation.is_none() && xv > y * (1.0 + tol) {
            first_violation = Some((t, xv, y));
        }
    }
    Ok(MajorizationReport { holds: first_violation.is_none(), tol, first_violation, max_ratio, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn series_interpolates_and_integrates_exactly() {
        let s = Series::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(2.0), 1.0);
        assert_eq!(s.eval(5.0), 0.0);
        assert_relative_eq!(s.integral(0.0, 3.0), 3.0, max_relative = 1e-15);
        assert_relative_eq!(s.integral(0.5, 2.0), 0.75 + 1.5, max_relative = 1e-15);
        // ∫₀¹ (2t)² dt = 4/3
        assert_relative_eq!(s.integral_of_square(0.0, 1.0), 4.0 / 3.0, max_relative = 1e-15);
        assert!(Series::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Series::new(vec![0.5], vec![1.0]).is_err());
    }

    #[test]
    fn problem_validation() {
        assert!(OsgoodProblem::constant(1.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(OsgoodProblem::constant(-1.0, 0.0, 0.0, 0.1, 1.0).is_err());
        let short = Series::new(vec![0.0, 0.5], vec![1.0, 1.0]).unwrap();
        let c = Series::constant(0.0).unwrap();
        assert!(OsgoodProblem::new(short, c.clone(), c, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn zero_f_is_a_quadrature() {
        let g = Series::new(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        let g0 = Series::constant(2.0).unwrap();
        let p = OsgoodProblem::new(Series::constant(0.0).unwrap(), g, g0, 0.01, 0.0, 1.0).unwrap();
        let tr = integrate_majorant(&p).unwrap();
        // ν + ∫(1 + 2t) + ν·4
        assert_relative_eq!(tr.final_value(), 0.01 + 2.0 + 0.04, max_relative = 1e-12);
        assert_relative_eq!(gronwall_bound(&p, 1.0, 1.0).unwrap(), 2.05, max_relative = 1e-14);
    }

    #[test]
    fn simplified_bound_example() {
        let (m, nu) = (0.5, 1e-3);
        let p = OsgoodProblem::constant(m, 0.0, 0.0, nu, 1.0).unwrap();
        for t in [0.0, 0.25, 1.0] {
            let expect = nu * (2.0 / (nu * nu)).powf(m * t);
            assert_relative_eq!(simplified_gronwall_bound(&p, t, 1.0).unwrap(), expect, max_relative = 1e-12);
        }
        let big = OsgoodProblem::constant(m, 0.0, 0.0, 1.5, 1.0).unwrap();
        assert!(gronwall_bound(&big, 0.5, 1.0).is_err());
        assert!(gronwall_bound(&p, 1.5, 1.0).is_err());
    }

    #[test]
    fn crossing_is_landed_on() {
        let p = OsgoodProblem::constant(2.0, 0.0, 0.0, 1e-2, 1.0).unwrap();
        let tr = integrate_majorant_fixed(&p, 50).unwrap();
        let hit = tr.y.iter().filter(|&&y| (y - 1.0).abs() < 1e-12).count();
        assert_eq!(hit, 1, "exactly one sample sits on y = 1");
        assert!(tr.y.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn overflow_truncates_with_marker() {
        let p = OsgoodProblem::constant(40.0, 0.0, 0.0, 0.5, 1.0).unwrap();
        let tr = integrate_majorant(&p).unwrap();
        let t = tr.blow_up.expect("double-exponential growth overflows");
        assert!(t < 1.0);
        assert_eq!(tr.eval(1.0), f64::INFINITY);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_exponent(0.0, 1.0).unwrap().exponent, 1.0);
        let r = rate_exponent(1.0, 1.0).unwrap();
        assert!((r.exponent - 0.135335).abs() < 1e-6);
        assert!(r.iterate(1).is_err());
        assert!(r.iterate(0).is_err());
        assert!((r.extrapolated_limit(16, 6).unwrap() - r.exponent).abs() < 1e-10);
        assert!(r.certify_convergence(&[2, 4, 8, 100, 1000, 100_000]).unwrap());
        assert_eq!(r.with_constant(2.0).bound(1.0), 2.0);
    }

    #[test]
    fn majorization_controls() {
        let p = OsgoodProblem::constant(1.0, 0.0, 0.0, 1e-2, 1.0).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let zeros = vec![0.0; times.len()];
        let r = check_majorization(&times, &zeros, &p, MAJORIZATION_TOL).unwrap();
        assert!(r.holds);
        let mut x = zeros.clone();
        x[6] = 1e9;
        let r = check_majorization(&times, &x, &p, MAJORIZATION_TOL).unwrap();
        assert_eq!(r.first_violation.map(|v| v.0), Some(0.6));
        assert!(check_majorization(&times[..5], &zeros[..5], &p, MAJORIZATION_TOL).is_err());
    }
}
