//! Inviscid-limit experiments: paired Euler and Navier–Stokes runs over a
//! decreasing viscosity list, the measured gaps `sup_t ‖u^ν − u^E‖_{L2}`,
//! and their comparison with `C ν^{e^{−2MT}}`, the logarithmic majorant and
//! the interval-by-interval exponents.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fit::linear_fit;
use crate::flow::{gap_series, run, FlowRun, SolverConfig};
use crate::grid::{random_band_limited, GridSpec, ScalarField, VectorField};
use crate::io::fmt17;
use crate::osgood::{check_majorization, rate_exponent, MajorizationReport, OsgoodProblem, Series};
use crate::splitting::{truncate_split, SplitConfig};

/// Energy normalisation shared by the corpus: `‖u‖_{L2} = π√2`.
pub const CORPUS_L2_NORM: f64 = PI * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    TaylorGreen,
    /// Stream function `sin x₁ sin x₂ + ½ cos(x₁ + 2x₂)`.
    TwoMode,
    /// Random stream function on `0 < |k| ≤ 4`, rescaled to the corpus norm.
    RandomBandLimited {
        seed: u64,
    },
    Zero,
}

impl InitialCondition {
    pub const CORPUS: [InitialCondition; 3] =
        [InitialCondition::TaylorGreen, InitialCondition::TwoMode, InitialCondition::RandomBandLimited { seed: 42 }];

    pub fn velocity(&self, grid: GridSpec) -> Result<VectorField> {
        match *self {
            InitialCondition::TaylorGreen => crate::flow::taylor_green(grid),
            InitialCondition::TwoMode => VectorField::from_fn(grid, |x, y| {
                let s = (x + 2.0 * y).sin();
                (x.sin() * y.cos() - s, -x.cos() * y.sin() + 0.5 * s)
            }),
            InitialCondition::RandomBandLimited { seed } => {
                const KMAX: usize = 4;
                let psi = random_band_limited(grid, KMAX, seed)?;
                let r2 = (KMAX * KMAX) as f64;
                let psi = psi.apply_multiplier(|m1, m2| {
                    let (k1, k2) = (grid.wavenumber(m1), grid.wavenumber(m2));
                    if k1 * k1 + k2 * k2 <= r2 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                let [d1, d2] = psi.gradient().components().clone();
                let u = VectorField::new(d2, d1.scaled(-1.0)?)?;
                let norm = u.l2_norm();
                if norm == 0.0 {
                    return Err(Error::Degenerate(format!("seed {seed} produced a zero field")));
                }
                u.scaled(CORPUS_L2_NORM / norm)
            }
            InitialCondition::Zero => Ok(VectorField::zeros(grid)),
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::TaylorGreen => f.write_str("taylor-green"),
            InitialCondition::TwoMode => f.write_str("two-mode"),
            InitialCondition::RandomBandLimited { seed } => write!(f, "random-{seed}"),
            InitialCondition::Zero => f.write_str("zero"),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor-green" => Ok(Self::TaylorGreen),
            "two-mode" => Ok(Self::TwoMode),
            "zero" => Ok(Self::Zero),
            _ => s
                .strip_prefix("random-")
                .and_then(|seed| seed.parse().ok())
                .map(|seed| Self::RandomBandLimited { seed })
                .ok_or_else(|| Error::Parse(format!("unknown initial condition {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Solver settings; its viscosity is replaced per run.
    pub base: SolverConfig,
    pub nu_list: Vec<f64>,
    pub sigma: f64,
    pub initial_condition: InitialCondition,
}

impl ExperimentConfig {
    pub fn new(base: SolverConfig, nu_list: Vec<f64>, sigma: f64, initial_condition: InitialCondition) -> Result<Self> {
        if nu_list.is_empty() {
            return Err(invalid("viscosity list must not be empty"));
        }
        if nu_list.iter().any(|&nu| !(nu > 0.0 && nu < 1.0)) {
            return Err(invalid("every viscosity must lie in (0, 1)"));
        }
        if nu_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("viscosity list must be strictly decreasing"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        let base = base.with_sigma(sigma)?;
        Ok(Self { base, nu_list, sigma, initial_condition })
    }
}

/// Measured gaps of a sweep and the exponent the theory predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub nus: Vec<f64>,
    pub sup_gap: Vec<f64>,
    /// `sup_t (f₀ + g₀²)` of the Euler run.
    pub m: f64,
    pub horizon: f64,
    /// `e^{−2MT}`.
    pub theory_exponent: f64,
    /// Least-squares slope of `ln sup_gap` against `ln ν`, when defined.
    pub fitted_exponent: Option<f64>,
}

impl GapSeries {
    pub const CSV_HEADER: [&'static str; 5] = ["nu", "sup_gap", "M", "theory_exponent", "bound_value"];

    pub fn new(nus: Vec<f64>, sup_gap: Vec<f64>, m: f64, horizon: f64) -> Result<Self> {
        if nus.len() != sup_gap.len() {
            return Err(invalid("gap series needs one gap per viscosity"));
        }
        let theory_exponent = rate_exponent(m, horizon)?.exponent;
        let fitted_exponent = log_fit(&nus, &sup_gap).map(|(_, rho)| rho);
        Ok(Self { nus, sup_gap, m, horizon, theory_exponent, fitted_exponent })
    }

    /// Rows with the bound anchored at the largest viscosity.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let c = anchor_constant(self);
        self.nus
            .iter()
            .zip(&self.sup_gap)
            .map(|(&nu, &gap)| {
                [nu, gap, self.m, self.theory_exponent, c * nu.powf(self.theory_exponent)].map(fmt17).to_vec()
            })
            .collect()
    }

    /// Reads `nu,sup_gap,M,theory_exponent[,bound_value]` rows.
    pub fn from_table(header: &[String], rows: &[Vec<f64>]) -> Result<Self> {
        let col = |name: &str| {
            header.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("missing column {name}")))
        };
        let (inu, igap, im) = (col("nu")?, col("sup_gap")?, col("M")?);
        let ith = col("theory_exponent")?;
        if rows.is_empty() {
            return Err(Error::Parse("gap table has no rows".into()));
        }
        let m = rows[0][im];
        let theta = rows[0][ith];
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::Parse(format!("theory exponent {theta} outside (0, 1]")));
        }
        let nus: Vec<f64> = rows.iter().map(|r| r[inu]).collect();
        let gaps: Vec<f64> = rows.iter().map(|r| r[igap]).collect();
        // the horizon is implied by M and the exponent
        let horizon = if m > 0.0 { -theta.ln() / (2.0 * m) } else { 1.0 };
        let mut s = Self::new(nus, gaps, m, horizon.max(f64::MIN_POSITIVE))?;
        s.theory_exponent = theta;
        Ok(s)
    }
}

fn log_fit(nus: &[f64], gaps: &[f64]) -> Option<(f64, f64)> {
    if gaps.iter().any(|&g| g.is_nan() || g <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = nus.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = gaps.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

fn anchor_constant(s: &GapSeries) -> f64 {
    s.nus
        .iter()
        .zip(&s.sup_gap)
        .max_by(|a, b| a.0.total_cmp(b.0))
        .map(|(&nu, &gap)| gap / nu.powf(s.theory_exponent))
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Least-squares slope; absent when a gap is zero.
    pub rho: Option<f64>,
    pub intercept: Option<f64>,
    /// Prefactor used for the bound.
    pub constant: f64,
    pub theory_exponent: f64,
    pub bound: Vec<f64>,
    /// Viscosities with `sup_gap > C ν^{θ}`.
    pub violations: Vec<f64>,
}

impl RateReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    /// `ρ ≥ θ − tol`, vacuous when the fit is undefined.
    pub fn exponent_ordered(&self, tol: f64) -> bool {
        self.rho.is_none_or(|r| r >= self.theory_exponent - tol)
    }
}

/// Fits `ln sup_gap = ln C + ρ ln ν` and checks `sup_gap ≤ C ν^{e^{−2MT}}`,
/// with `C` anchored at the largest viscosity when `prefactor_fit` is set
/// and `C = 1` otherwise.
pub fn verify_rate(series: &GapSeries, prefactor_fit: bool) -> Result<RateReport> {
    if series.nus.len() < 3 {
        return Err(invalid(format!("rate fit needs at least 3 points, got {}", series.nus.len())));
    }
    let fit = log_fit(&series.nus, &series.sup_gap);
    let theta = series.theory_exponent;
    let constant = if prefactor_fit { anchor_constant(series) } else { 1.0 };
    let bound: Vec<f64> = series.nus.iter().map(|&nu| constant * nu.powf(theta)).collect();
    let violations = series
        .nus
        .iter()
        .zip(&series.sup_gap)
        .zip(&bound)
        .filter(|((_, &gap), &b)| gap > b * (1.0 + 1e-12))
        .map(|((&nu, _), _)| nu)
        .collect();
    Ok(RateReport {
        rho: fit.map(|f| f.1),
        intercept: fit.map(|f| f.0),
        constant,
        theory_exponent: theta,
        bound,
        violations,
    })
}

/// One viscous member of a sweep.
#[derive(Debug, Clone)]
pub struct SweepMember {
    pub nu: f64,
    pub run: FlowRun,
    /// `‖u^ν − u^E‖_{L2}` at the shared sample times.
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub config: ExperimentConfig,
    pub euler: FlowRun,
    /// Completed members in viscosity order.
    pub members: Vec<SweepMember>,
    /// First viscosity whose run blew up, if any; later members are dropped.
    pub aborted_at: Option<f64>,
    pub series: GapSeries,
}

impl Sweep {
    pub fn times(&self) -> Vec<f64> {
        self.euler.samples.iter().map(|s| s.time).collect()
    }
}

/// Euler reference plus one Navier–Stokes run per viscosity, in parallel.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Sweep> {
    let grid = cfg.base.grid;
    let u0 = cfg.initial_condition.velocity(grid)?;
    let euler = run(&u0, cfg.base.with_nu(0.0)?)?;
    if let Some(time) = euler.blow_up {
        return Err(Error::BlowUp { time });
    }
    let runs: Vec<Result<FlowRun>> = cfg.nu_list.par_iter().map(|&nu| run(&u0, cfg.base.with_nu(nu)?)).collect();
    let mut members = Vec::new();
    let mut aborted_at = None;
    for (&nu, r) in cfg.nu_list.iter().zip(runs) {
        let r = r?;
        if r.blow_up.is_some() {
            aborted_at = Some(nu);
            break;
        }
        let gaps = gap_series(&r, &euler)?;
        members.push(SweepMember { nu, run: r, gaps });
    }
    let m = euler.series.f0.iter().zip(&euler.series.g0).map(|(f, g)| f + g * g).fold(0.0, f64::max);
    let series = GapSeries::new(
        members.iter().map(|m| m.nu).collect(),
        members.iter().map(|m| m.gaps.iter().copied().fold(0.0, f64::max)).collect(),
        m,
        cfg.base.horizon,
    )?;
    Ok(Sweep { config: cfg.clone(), euler, members, aborted_at, series })
}

/// Partition `0 = t₀ < t₁ < … = T` with `4 ∫_{tᵢ₋₁}^{tᵢ} f = σ/(4+σ)` on every
/// interval but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub breakpoints: Vec<f64>,
    /// `σ/(8+2σ) / 2^{i}` for interval `i` (0-based).
    pub exponents: Vec<f64>,
    /// Start of the first interval shorter than the minimum length, if any.
    pub stalled_at: Option<f64>,
}

impl Partition {
    pub fn interval_count(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn covers(&self, horizon: f64) -> bool {
        self.stalled_at.is_none()
            && (self.breakpoints.last().copied().unwrap_or(0.0) - horizon).abs() <= 1e-12 * horizon
    }
}

pub fn partition(f: &Series, horizon: f64, sigma: f64, min_interval: f64) -> Result<Partition> {
    if !(sigma > 0.0 && horizon > 0.0) {
        return Err(invalid("partition needs positive sigma and horizon"));
    }
    let budget = sigma / (4.0 + sigma) / 4.0;
    let mut breakpoints = vec![0.0];
    let mut exponents = Vec::new();
    let mut exponent = sigma / (8.0 + 2.0 * sigma);
    let mut stalled_at = None;
    let mut t = 0.0;
    while horizon - t > 1e-12 * horizon {
        let next = if f.integral(t, horizon) <= budget {
            horizon
        } else {
            let (mut lo, mut hi) = (t, horizon);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f.integral(t, mid) <= budget {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if next < horizon && next - t < min_interval {
            stalled_at = Some(t);
            break;
        }
        breakpoints.push(next);
        exponents.push(exponent);
        exponent /= 2.0;
        t = next;
    }
    Ok(Partition { breakpoints, exponents, stalled_at })
}

/// Per-breakpoint comparison of the measured gaps with `Cᵢ ν^{eᵢ}`, where
/// `Cᵢ` is anchored at the largest viscosity.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    pub partition: Partition,
    /// `(tᵢ, ν)` pairs where the gap exceeds the interval bound.
    pub violations: Vec<(f64, f64)>,
}

impl IntervalReport {
    pub fn holds(&self, horizon: f64) -> bool {
        self.violations.is_empty() && self.partition.covers(horizon)
    }
}

pub fn iterate_intervals(sweep: &Sweep, f: &Series, sigma: f64) -> Result<IntervalReport> {
    let horizon = sweep.config.base.horizon;
    let partition = partition(f, horizon, sigma, sweep.euler.dt)?;
    let times = sweep.times();
    let mut violations = Vec::new();
    let nearest =
        |t: f64| (0..times.len()).min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs())).unwrap_or(0);
    let anchor = sweep.members.first();
    for (i, &e) in partition.exponents.iter().enumerate() {
        let t = partition.breakpoints[i + 1];
        let k = nearest(t);
        let Some(a) = anchor else { break };
        let c = a.gaps[k] / a.nu.powf(e);
        for m in &sweep.members {
            if m.gaps[k] > c * m.nu.powf(e) * (1.0 + 1e-12) {
                violations.push((times[k], m.nu));
            }
        }
    }
    Ok(IntervalReport { partition, violations })
}

/// Coefficients of the majorant for one sweep member: `f = 2 C₀ f₀^E`,
/// `g = Σ_{ij} ∫ |α_r^{ij} ∂_j u^E_i|` with `α^{ij} = wᵢwⱼ` split at `1/ν`,
/// and `g₀ = ‖∇u^ν‖ + ‖∇u^E‖`.
pub fn majorant_problem(sweep: &Sweep, member: &SweepMember, c0: f64) -> Result<OsgoodProblem> {
    let times = sweep.times();
    let euler = &sweep.euler;
    let split_cfg = SplitConfig::new(1.0 / member.nu, sweep.config.sigma)?;
    let g: Vec<f64> = member
        .run
        .samples
        .par_iter()
        .zip(&euler.samples)
        .map(|(sv, se)| {
            let w = sv.velocity().sub(&se.velocity()).expect("same grid");
            let grad = se.velocity_gradient();
            let wc = w.components();
            let mut total = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let alpha = wc[i].zip_with(&wc[j], |a, b| a * b).expect("same grid");
                    let r = truncate_split(&alpha, split_cfg).alpha_r;
                    total += r.zip_with(&grad[i][j], |a, b| (a * b).abs()).expect("same grid").integral();
                }
            }
            total
        })
        .collect();
    let f: Vec<f64> = euler.series.f0.iter().map(|v| 2.0 * c0 * v).collect();
    let g0: Vec<f64> = member.run.series.g0.iter().zip(&euler.series.g0).map(|(a, b)| a + b).collect();
    OsgoodProblem::new(
        Series::new(times.clone(), f)?,
        Series::new(times.clone(), g)?,
        Series::new(times, g0)?,
        member.nu,
        (1.0 / member.nu).ln_1p(),
        sweep.config.base.horizon,
    )
}

/// Checks `‖u^ν − u^E‖² ≤ y` for one sweep member.
pub fn member_majorization(sweep: &Sweep, member: &SweepMember, c0: f64, tol: f64) -> Result<MajorizationReport> {
    let p = majorant_problem(sweep, member, c0)?;
    let x: Vec<f64> = member.gaps.iter().map(|g| g * g).collect();
    check_majorization(&sweep.times(), &x, &p, tol)
}

/// `π√2 (1 − e^{−2νt})`, the Taylor–Green gap.
pub fn taylor_green_gap(nu: f64, t: f64) -> f64 {
    CORPUS_L2_NORM * -(-2.0 * nu * t).exp_m1()
}

/// The `f₀` series of a run as a coefficient series.
pub fn f0_series(run: &FlowRun) -> Result<Series> {
    Series::new(run.samples.iter().map(|s| s.time).collect(), run.series.f0.clone())
}

/// Scalar vorticity of an initial condition, for snapshots.
pub fn initial_vorticity(ic: InitialCondition, grid: GridSpec) -> Result<ScalarField> {
    Ok(ic.velocity(grid)?.curl())
}
