//! Truncation splitting `α = α_m + α_r` with `|α_m| = min(|α|, m)`, and the
//! Chebyshev and Hölder estimates that control the remainder `α_r`.

use crate::error::{invalid, Result};
use crate::grid::ScalarField;
use crate::io::fmt17;
use crate::norms::lp_norm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    threshold: f64,
    sigma: f64,
}

impl SplitConfig {
    pub fn new(threshold: f64, sigma: f64) -> Result<Self> {
        if !(threshold > 1.0 && threshold.is_finite()) {
            return Err(invalid(format!("split threshold must be finite and > 1, got {threshold}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { threshold, sigma })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `1 + σ/2`, the integrability exponent of `α`.
    pub fn outer_exponent(&self) -> f64 {
        1.0 + self.sigma / 2.0
    }

    /// `1 + σ/4`, the exponent the remainder is measured in.
    pub fn inner_exponent(&self) -> f64 {
        1.0 + self.sigma / 4.0
    }
}

/// `(σ/(4+2σ), (4+σ)/(4+2σ), 1/(1+σ/4))`: support, norm and outer exponents
/// of the Hölder step.
pub fn holder_exponents(sigma: f64) -> (f64, f64, f64) {
    let d = 4.0 + 2.0 * sigma;
    (sigma / d, (4.0 + sigma) / d, 1.0 / (1.0 + sigma / 4.0))
}

/// Splits one sample as `(a_m, a − a_m)` with `a_m + a_r == a` in floating
/// point. When `clamp(a)` admits no such remainder (a rounding tie), `a_m`
/// steps toward zero one ulp at a time, so `|a_m| ≤ m` still holds.
fn split_value(a: f64, m: f64) -> (f64, f64) {
    let mut am = a.clamp(-m, m);
    if am == a {
        return (a, 0.0);
    }
    for _ in 0..4 {
        let r = a - am;
        if let Some(r) = [r, r.next_up(), r.next_down()].into_iter().find(|&c| am + c == a) {
            return (am, r);
        }
        am = if am > 0.0 { am.next_down() } else { am.next_up() };
    }
    (am, a - am)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub alpha_m: ScalarField,
    pub alpha_r: ScalarField,
    pub cfg: SplitConfig,
}

pub fn truncate_split(alpha: &ScalarField, cfg: SplitConfig) -> Split {
    let m = cfg.threshold;
    let (am, ar): (Vec<f64>, Vec<f64>) = alpha.values().iter().map(|&a| split_value(a, m)).unzip();
    let grid = alpha.grid();
    let alpha_m = ScalarField::new(grid, am).expect("parts of finite values are finite");
    let alpha_r = ScalarField::new(grid, ar).expect("parts of finite values are finite");
    Split { alpha_m, alpha_r, cfg }
}

/// Measured `|{|α| > m}|` against `(‖α‖_{1+σ/2} / m)^{1+σ/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevCheck {
    pub measured: f64,
    pub bound: f64,
}

impl ChebyshevCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.measured <= self.bound * (1.0 + slack)
    }
}

pub fn chebyshev_support_bound(alpha: &ScalarField, cfg: SplitConfig) -> ChebyshevCheck {
    let cell = alpha.grid().cell_volume();
    let m = cfg.threshold;
    let count = alpha.values().iter().filter(|a| a.abs() > m).count();
    let p = cfg.outer_exponent();
    let norm = lp_norm(alpha, p).expect("p > 1");
    ChebyshevCheck { measured: count as f64 * cell, bound: (norm / m).powf(p) }
}

/// Hölder interpolation of the remainder between `L_1` and `L_{1+σ/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCheck {
    /// `‖α_r‖_{1+σ/4}`.
    pub lhs: f64,
    /// `(|S|^{σ/(4+2σ)} (∫|α_r|^{1+σ/2})^{(4+σ)/(4+2σ)})^{1/(1+σ/4)}`, `S = supp α_r`.
    pub rhs: f64,
    pub support: f64,
    /// `‖α_r‖_{1+σ/2}`.
    pub outer_norm: f64,
    /// `m^{−σ/(4+σ)} ‖α_r‖_{1+σ/2}^{1 − 2σ/((σ+2)(σ+4))}`; reported, not asserted.
    pub combined: f64,
}

impl HolderCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + slack)
    }
}

/// Evaluates the Hölder step for `alpha_r`, which must be the exact remainder
/// of `alpha` at `cfg`'s threshold.
pub fn holder_remainder_bound(alpha: &ScalarField, alpha_r: &ScalarField, cfg: SplitConfig) -> Result<HolderCheck> {
    alpha.grid().check_same(&alpha_r.grid())?;
    let m = cfg.threshold;
    let mismatch = alpha.values().iter().zip(alpha_r.values()).position(|(&a, &r)| r != split_value(a, m).1);
    if let Some(i) = mismatch {
        return Err(invalid(format!("alpha_r is not the remainder of alpha at threshold {m} (index {i})")));
    }
    Ok(holder_unchecked(alpha_r, cfg))
}

fn holder_unchecked(alpha_r: &ScalarField, cfg: SplitConfig) -> HolderCheck {
    let sigma = cfg.sigma;
    let (p, q) = (cfg.outer_exponent(), cfg.inner_exponent());
    let cell = alpha_r.grid().cell_volume();
    let support = alpha_r.values().iter().filter(|&&r| r != 0.0).count() as f64 * cell;
    let lhs = lp_norm(alpha_r, q).expect("q > 1");
    let outer_norm = lp_norm(alpha_r, p).expect("p > 1");
    let (s_exp, n_exp, o_exp) = holder_exponents(sigma);
    let outer_integral = outer_norm.powf(p);
    let rhs = (support.powf(s_exp) * outer_integral.powf(n_exp)).powf(o_exp);
    let combined = cfg.threshold.powf(-sigma / (4.0 + sigma))
        * outer_norm.powf(1.0 - 2.0 * sigma / ((sigma + 2.0) * (sigma + 4.0)));
    HolderCheck { lhs, rhs, support, outer_norm, combined }
}

impl Split {
    pub fn holder(&self) -> HolderCheck {
        holder_unchecked(&self.alpha_r, self.cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRecord {
    pub threshold: f64,
    pub chebyshev: ChebyshevCheck,
    pub holder: HolderCheck,
}

impl SplitRecord {
    pub const CSV_HEADER: [&'static str; 5] =
        ["threshold", "measured_support", "cheb_bound", "holder_lhs", "holder_rhs"];

    pub fn evaluate(alpha: &ScalarField, cfg: SplitConfig) -> Self {
        let split = truncate_split(alpha, cfg);
        Self { threshold: cfg.threshold, chebyshev: chebyshev_support_bound(alpha, cfg), holder: split.holder() }
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.chebyshev.holds(slack) && self.holder.holds(slack)
    }

    pub fn csv_row(&self) -> Vec<String> {
        [self.threshold, self.chebyshev.measured, self.chebyshev.bound, self.holder.lhs, self.holder.rhs]
            .map(fmt17)
            .to_vec()
    }
}

/// Default slack for quadrature effects at indicator edges.
pub const GRID_SLACK: f64 = 0.01;

/// `count` thresholds geometric between 1.05 and `max|α|` (or `2·1.05` when
/// the field never exceeds 1.05).
pub fn threshold_sweep(alpha: &ScalarField, count: usize) -> Vec<f64> {
    let lo: f64 = 1.05;
    let hi = alpha.max_abs().max(2.0 * lo);
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).collect(),
    }
}

pub fn sweep(alpha: &ScalarField, sigma: f64, thresholds: &[f64]) -> Result<Vec<SplitRecord>> {
    thresholds.iter().map(|&m| Ok(SplitRecord::evaluate(alpha, SplitConfig::new(m, sigma)?))).collect()
}
