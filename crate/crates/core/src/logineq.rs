//! Empirical checks of the BMO–`L1` logarithmic inequality
//!
//! ```text
//! |∫ f g| ≤ C ‖f‖_BMO ‖g‖_L1 ( |ln ‖g‖_L1| + ln(1 + ‖g‖_L∞) )
//! ```
//!
//! and of the Zygmund-space bound `‖R_k h‖_L1 ≤ C + C ∫ h ln⁺h` it rests on.
//! No value of `C` is assumed: trials report the empirical ratio and the
//! corpus scan reports how those ratios behave under grid refinement.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fit::log_log_slope;
use crate::grid::{Axis, GridSpec, ScalarField, DOMAIN_LENGTH};
use crate::io::fmt17;
use crate::norms::{bmo_seminorm, hardy_norm, lp_norm, zygmund_functional};

/// One evaluation of both sides of the inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IneqTrial {
    /// `|∫ f g|`.
    pub lhs: f64,
    /// `|∫ (f − f̄) g|`, the part of the pairing that BMO controls.
    pub lhs_oscillation: f64,
    pub bmo_f: f64,
    pub l1_g: f64,
    pub linf_g: f64,
    pub hardy_g: f64,
    /// `|ln ‖g‖_L1| + ln(1 + ‖g‖_L∞)`; zero when `g ≡ 0`.
    pub bracket: f64,
    /// `‖f‖_BMO · ‖g‖_L1 · bracket`.
    pub rhs_factor: f64,
    /// `lhs / rhs_factor`, absent when the right side vanishes.
    pub ratio: Option<f64>,
}

impl IneqTrial {
    pub fn is_degenerate(&self) -> bool {
        self.ratio.is_none()
    }

    /// `lhs / (‖f‖_BMO ‖g‖_H¹)`, the constant of the duality pairing.
    pub fn duality_ratio(&self) -> Option<f64> {
        let d = self.bmo_f * self.hardy_g;
        (d > 0.0).then(|| self.lhs / d)
    }
}

/// Evaluates one `(f, g)` pair.
pub fn verify_main_inequality(f: &ScalarField, g: &ScalarField) -> Result<IneqTrial> {
    f.grid().check_same(&g.grid())?;
    Ok(trial_with_bmo(f, bmo_seminorm(f), g))
}

fn trial_with_bmo(f: &ScalarField, bmo_f: f64, g: &ScalarField) -> IneqTrial {
    let pairing = f.inner(g).expect("grids checked by caller");
    let mean_f = f.mean();
    let lhs_oscillation = (pairing - mean_f * g.integral()).abs();
    let l1_g = lp_norm(g, 1.0).expect("p = 1");
    let linf_g = g.max_abs();
    let bracket = if l1_g > 0.0 { l1_g.ln().abs() + linf_g.ln_1p() } else { 0.0 };
    let rhs_factor = bmo_f * l1_g * bracket;
    let lhs = pairing.abs();
    IneqTrial {
        lhs,
        lhs_oscillation,
        bmo_f,
        l1_g,
        linf_g,
        hardy_g: hardy_norm(g).value,
        bracket,
        rhs_factor,
        ratio: (rhs_factor > 0.0).then(|| lhs / rhs_factor),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Constant,
    FourierMode,
    Step,
    DyadicIndicator,
    TruncatedLog,
    Gaussian,
    Concentrated,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::Constant => "constant",
            Family::FourierMode => "fourier-mode",
            Family::Step => "step",
            Family::DyadicIndicator => "dyadic-indicator",
            Family::TruncatedLog => "truncated-log",
            Family::Gaussian => "gaussian",
            Family::Concentrated => "concentrated",
        };
        f.write_str(s)
    }
}

type Builder = Arc<dyn Fn(GridSpec) -> Result<ScalarField> + Send + Sync>;

/// A named test function that can be sampled on any grid.
#[derive(Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub family: Family,
    build: Builder,
}

impl fmt::Debug for CorpusEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorpusEntry").field("id", &self.id).field("family", &self.family).finish()
    }
}

impl CorpusEntry {
    pub fn new(
        id: impl Into<String>,
        family: Family,
        build: impl Fn(GridSpec) -> Result<ScalarField> + Send + Sync + 'static,
    ) -> Self {
        Self { id: id.into(), family, build: Arc::new(build) }
    }

    pub fn build(&self, grid: GridSpec) -> Result<ScalarField> {
        (self.build)(grid)
    }
}

/// Periodic distance from the torus centre `(π, π)`.
fn centre_distance(x1: f64, x2: f64) -> f64 {
    GridSpec::periodic_delta(PI, x1).hypot(GridSpec::periodic_delta(PI, x2))
}

/// `height` on a grid-aligned square of about `area`, centred at `(π, π)`.
/// At least one cell is always occupied.
pub fn centred_square(grid: GridSpec, area: f64, height: f64) -> Result<ScalarField> {
    let n = grid.points_per_axis();
    let cells = ((area.sqrt() / grid.spacing()).round() as usize).clamp(1, n);
    let lo = n / 2 - cells / 2;
    let hi = lo + cells;
    let inside = |i: usize| i >= lo && i < hi;
    let mut values = vec![0.0; grid.len()];
    for i1 in (0..n).filter(|&i| inside(i)) {
        for i2 in (0..n).filter(|&i| inside(i)) {
            values[grid.index(i1, i2)] = height;
        }
    }
    ScalarField::new(grid, values)
}

/// Indicator of the dyadic square `[0, 2π·2^{-level})²`.
pub fn dyadic_indicator(grid: GridSpec, level: u32) -> Result<ScalarField> {
    let side = DOMAIN_LENGTH / f64::from(1u32 << level);
    let eps = 1e-9 * grid.spacing();
    ScalarField::from_fn(grid, |x1, x2| if x1 < side - eps && x2 < side - eps { 1.0 } else { 0.0 })
}

/// The fixed verification corpus: constants, single Fourier modes, a sign
/// step, dyadic-square indicators, a truncated logarithm, Gaussians of
/// widths π/2, π/8, π/32, and `N·indicator(area 1/N)` for `N = 4, 16, 64`.
pub fn standard_corpus() -> Vec<CorpusEntry> {
    let mut c = vec![
        CorpusEntry::new("const", Family::Constant, |g| ScalarField::constant(g, 1.7)),
        CorpusEntry::new("mode-c1", Family::FourierMode, |g| ScalarField::from_fn(g, |x, _| x.cos())),
        CorpusEntry::new("mode-s2c1", Family::FourierMode, |g| {
            ScalarField::from_fn(g, |x, y| (2.0 * x).sin() * y.cos())
        }),
        CorpusEntry::new("step-x1", Family::Step, |g| {
            ScalarField::from_fn(g, |x, _| if x < PI - 1e-12 { 1.0 } else { -1.0 })
        }),
        CorpusEntry::new("dyadic-2", Family::DyadicIndicator, |g| dyadic_indicator(g, 2)),
        CorpusEntry::new("dyadic-4", Family::DyadicIndicator, |g| dyadic_indicator(g, 4)),
        CorpusEntry::new("trunc-log", Family::TruncatedLog, |g| {
            let h = g.spacing();
            ScalarField::from_fn(g, |x, y| -(centre_distance(x, y).max(h)).ln())
        }),
    ];
    for (name, width) in [("gauss-pi2", PI / 2.0), ("gauss-pi8", PI / 8.0), ("gauss-pi32", PI / 32.0)] {
        c.push(CorpusEntry::new(name, Family::Gaussian, move |g| {
            ScalarField::from_fn(g, |x, y| {
                let r = centre_distance(x, y);
                (-r * r / (2.0 * width * width)).exp()
            })
        }));
    }
    for n in [4u32, 16, 64] {
        let height = f64::from(n);
        c.push(CorpusEntry::new(format!("conc-{n}"), Family::Concentrated, move |g| {
            centred_square(g, 1.0 / height, height)
        }));
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusTrial {
    pub f_id: String,
    pub g_id: String,
    pub f_family: Family,
    pub g_family: Family,
    pub grid: usize,
    pub trial: IneqTrial,
}

impl CorpusTrial {
    pub const CSV_HEADER: [&'static str; 9] =
        ["f_id", "g_id", "grid", "lhs", "bmo_f", "l1_g", "linf_g", "bracket", "ratio"];

    pub fn csv_row(&self) -> Vec<String> {
        let t = &self.trial;
        vec![
            self.f_id.clone(),
            self.g_id.clone(),
            self.grid.to_string(),
            fmt17(t.lhs),
            fmt17(t.bmo_f),
            fmt17(t.l1_g),
            fmt17(t.linf_g),
            fmt17(t.bracket),
            t.ratio.map(fmt17).unwrap_or_default(),
        ]
    }
}

/// All trials of a corpus scan, in deterministic `(size, f, g)` order.
#[derive(Debug, Clone)]
pub struct CorpusScan {
    pub sizes: Vec<usize>,
    pub trials: Vec<CorpusTrial>,
}

impl CorpusScan {
    fn max_ratio_where(&self, size: usize, keep: impl Fn(&CorpusTrial) -> bool) -> Option<f64> {
        self.trials
            .iter()
            .filter(|t| t.grid == size && keep(t))
            .filter_map(|t| t.trial.ratio)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    pub fn max_ratio(&self, size: usize) -> Option<f64> {
        self.max_ratio_where(size, |_| true)
    }

    pub fn family_max_ratio(&self, family: Family, size: usize) -> Option<f64> {
        self.max_ratio_where(size, |t| t.f_family == family)
    }

    pub fn families(&self) -> Vec<Family> {
        let mut f: Vec<Family> = self.trials.iter().map(|t| t.f_family).collect();
        f.sort();
        f.dedup();
        f
    }

    /// Slope of `ln(max ratio)` against `ln(size)`; `None` when fewer than
    /// two sizes have a defined ratio.
    pub fn refinement_slope(&self) -> Option<f64> {
        self.slope_of(|size| self.max_ratio(size))
    }

    pub fn family_refinement_slope(&self, family: Family) -> Option<f64> {
        self.slope_of(|size| self.family_max_ratio(family, size))
    }

    fn slope_of(&self, per_size: impl Fn(usize) -> Option<f64>) -> Option<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            self.sizes.iter().filter_map(|&s| per_size(s).map(|r| (s as f64, r))).unzip();
        log_log_slope(&xs, &ys)
    }

    /// Largest ratio across every size, i.e. the empirical corpus constant.
    pub fn empirical_constant(&self) -> Option<f64> {
        self.sizes.iter().filter_map(|&s| self.max_ratio(s)).reduce(f64::max)
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.trials.iter().map(CorpusTrial::csv_row).collect()
    }
}

/// Evaluates every `(f, g)` pair of the corpus on each grid size.
pub fn scan_corpus(corpus: &[CorpusEntry], sizes: &[usize]) -> Result<CorpusScan> {
    if corpus.is_empty() {
        return Err(invalid("corpus must not be empty"));
    }
    if sizes.is_empty() {
        return Err(invalid("at least one grid size is required"));
    }
    let mut trials = Vec::new();
    for &size in sizes {
        let grid = GridSpec::new(size)?;
        let fields = corpus.iter().map(|e| e.build(grid)).collect::<Result<Vec<_>>>()?;
        let bmos: Vec<f64> = fields.par_iter().map(bmo_seminorm).collect();
        let per_f: Vec<Vec<CorpusTrial>> = (0..corpus.len())
            .into_par_iter()
            .map(|i| {
                (0..corpus.len())
                    .map(|j| CorpusTrial {
                        f_id: corpus[i].id.clone(),
                        g_id: corpus[j].id.clone(),
                        f_family: corpus[i].family,
                        g_family: corpus[j].family,
                        grid: size,
                        trial: trial_with_bmo(&fields[i], bmos[i], &fields[j]),
                    })
                    .collect()
            })
            .collect();
        trials.extend(per_f.into_iter().flatten());
    }
    Ok(CorpusScan { sizes: sizes.to_vec(), trials })
}

/// Both sides of the Zygmund-space Riesz bound for one nonnegative field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZygmundRecord {
    /// `‖R_k h‖_L1` for `k = 1, 2`.
    pub riesz_l1: [f64; 2],
    /// `∫ h ln⁺h`.
    pub llogl: f64,
    pub l1: f64,
    pub linf: f64,
    /// Measure of `{h > 0}`.
    pub support_measure: f64,
    /// `∫ h ln⁺(h/λ)` at `λ = ‖h‖_L1`.
    pub llogl_scaled: f64,
}

impl ZygmundRecord {
    pub fn lhs(&self) -> f64 {
        self.riesz_l1[0].max(self.riesz_l1[1])
    }

    /// `C₀ + C₀ ∫ h ln⁺h`.
    pub fn bound(&self, c0: f64) -> f64 {
        c0 + c0 * self.llogl
    }

    /// Smallest `C₀` for which [`Self::bound`] dominates both axes.
    pub fn required_constant(&self) -> f64 {
        self.lhs() / (1.0 + self.llogl)
    }

    /// `λ + c ∫ h ln⁺(h/λ)` at `λ = ‖h‖_L1`.
    pub fn lambda_bound(&self, c: f64) -> f64 {
        self.l1 + c * self.llogl_scaled
    }

    /// `‖h‖_L1 (1 + 2 ln(‖h‖_L∞ + 1) + |ln ‖h‖_L1|)`, the chained right side.
    pub fn chained_factor(&self) -> f64 {
        if self.l1 == 0.0 {
            return 0.0;
        }
        self.l1 * (1.0 + 2.0 * self.linf.ln_1p() + self.l1.ln().abs())
    }
}

/// Extent, in cells, of the periodic projection of `occupied` onto one axis.
fn periodic_extent(occupied: &[bool]) -> usize {
    let n = occupied.len();
    if !occupied.iter().any(|&o| o) {
        return 0;
    }
    let mut longest_gap = 0;
    let mut run = 0;
    // two passes handle the run that wraps around
    for i in 0..2 * n {
        if occupied[i % n] {
            run = 0;
        } else {
            run += 1;
            longest_gap = longest_gap.max(run.min(n));
        }
    }
    n - longest_gap
}

/// Evaluates the Zygmund bound for `h ≥ 0` whose support fits in a square of
/// at most half the torus side along each axis.
pub fn verify_zygmund_estimate(h: &ScalarField) -> Result<ZygmundRecord> {
    let grid = h.grid();
    let n = grid.points_per_axis();
    if let Some(&v) = h.values().iter().find(|v| **v < 0.0) {
        return Err(invalid(format!("Zygmund estimate needs h >= 0, found {v}")));
    }
    let mut rows = vec![false; n];
    let mut cols = vec![false; n];
    let mut support_cells = 0usize;
    for (i1, row) in rows.iter_mut().enumerate() {
        for (i2, col) in cols.iter_mut().enumerate() {
            if h.at(i1, i2) > 0.0 {
                *row = true;
                *col = true;
                support_cells += 1;
            }
        }
    }
    let (e1, e2) = (periodic_extent(&rows), periodic_extent(&cols));
    if e1 > n / 2 || e2 > n / 2 {
        return Err(Error::InvalidArgument(format!(
            "support spans {e1}x{e2} cells; bounded support must fit in {0}x{0}",
            n / 2
        )));
    }
    let l1 = lp_norm(h, 1.0)?;
    let riesz_l1 = Axis::ALL.map(|a| lp_norm(&h.riesz_transform(a), 1.0).expect("p = 1"));
    Ok(ZygmundRecord {
        riesz_l1,
        llogl: zygmund_functional(h, 1.0)?,
        l1,
        linf: h.max_abs(),
        support_measure: support_cells as f64 * grid.cell_volume(),
        llogl_scaled: if l1 > 0.0 { zygmund_functional(h, l1)? } else { 0.0 },
    })
}

/// Running corpus-wide constant `C₀ = max required_constant`.
pub fn zygmund_constant(records: &[ZygmundRecord]) -> f64 {
    records.iter().map(ZygmundRecord::required_constant).fold(0.0, f64::max)
}

/// Samples `profile(s1, s2)`, given on the unit square `[0, 1)²`, into a
/// square of side `2π/4` centred in the torus and zero elsewhere. The torus
/// is then four times the support along each axis, so periodic wrap does
/// not interact with the support.
pub fn embed_compact(grid: GridSpec, profile: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
    let side = DOMAIN_LENGTH / 4.0;
    let lo = PI - side / 2.0;
    ScalarField::from_fn(grid, |x1, x2| {
        let (s1, s2) = ((x1 - lo) / side, (x2 - lo) / side);
        if (0.0..1.0).contains(&s1) && (0.0..1.0).contains(&s2) {
            profile(s1, s2)
        } else {
            0.0
        }
    })
}
