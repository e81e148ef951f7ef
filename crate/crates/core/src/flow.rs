//! Pseudo-spectral solver for 2D incompressible Euler (`ν = 0`) and
//! Navier–Stokes (`ν > 0`) on the torus, in vorticity form
//! `ω_t + u·∇ω = ν Δω`, with `u = ∇^⊥ψ + U`, `−Δψ = ω` and `U` the conserved
//! mean flow.
//!
//! Time stepping is classical RK4 on the integrating-factor form, so the
//! viscous decay of each mode is exact. Nonlinear products are dealiased by
//! the 2/3 rule.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{forward_transform, inverse_transform, Axis, GridSpec, ScalarField, VectorField};
use crate::io::fmt17;
use crate::norms::{bmo_seminorm, lp_norm};

/// Fraction of the resolved band kept by the dealiasing mask.
pub const DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Speed above which a run is declared blown up.
pub const BLOW_UP_SPEED: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub nu: f64,
    pub horizon: f64,
    pub cfl: f64,
    pub output_stride: usize,
    /// Lower bound on the number of output samples after `t = 0`.
    pub min_samples: usize,
    /// Exponent offset of `h₀ = ‖u‖_{L_{2+σ}}`.
    pub sigma: f64,
    /// Optional cap on the time step on top of the CFL limit.
    pub max_dt: Option<f64>,
}

impl SolverConfig {
    pub fn new(grid: GridSpec, nu: f64, horizon: f64) -> Result<Self> {
        Self { grid, nu, horizon, cfl: 0.5, output_stride: 1, min_samples: 100, sigma: 1.0, max_dt: None }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(invalid(format!("viscosity must be finite and >= 0, got {}", self.nu)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if self.output_stride == 0 || self.min_samples == 0 {
            return Err(invalid("output stride and sample count must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if let Some(d) = self.max_dt {
            if !(d > 0.0 && d.is_finite()) {
                return Err(invalid(format!("max_dt must be positive, got {d}")));
            }
        }
        Ok(self)
    }

    pub fn with_nu(self, nu: f64) -> Result<Self> {
        Self { nu, ..self }.validated()
    }

    pub fn with_cfl(self, cfl: f64) -> Result<Self> {
        Self { cfl, ..self }.validated()
    }

    pub fn with_stride(self, output_stride: usize) -> Result<Self> {
        Self { output_stride, ..self }.validated()
    }

    pub fn with_min_samples(self, min_samples: usize) -> Result<Self> {
        Self { min_samples, ..self }.validated()
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self { sigma, ..self }.validated()
    }

    pub fn with_max_dt(self, max_dt: Option<f64>) -> Result<Self> {
        Self { max_dt, ..self }.validated()
    }

    /// Step count for a run starting at speed `speed`: enough for the CFL
    /// limit and for `min_samples` outputs, rounded up to a stride multiple.
    pub fn step_count(&self, speed: f64) -> usize {
        let mut dt = if speed > 0.0 { self.cfl * self.grid.spacing() / speed } else { self.horizon };
        if let Some(cap) = self.max_dt {
            dt = dt.min(cap);
        }
        let cfl_steps = (self.horizon / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let s = self.output_stride;
        cfl_steps.max(self.min_samples * s).div_ceil(s) * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub time: f64,
    grid: GridSpec,
    vorticity: Vec<Complex64>,
    mean_velocity: [f64; 2],
}

/// Per-grid wavenumber tables.
#[derive(Debug, Clone)]
struct Spectrum {
    n: usize,
    /// Odd-multiplier wavenumbers, Nyquist zeroed.
    k1: Vec<f64>,
    k2: Vec<f64>,
    ksq: Vec<f64>,
    dealias: Vec<bool>,
}

impl Spectrum {
    fn new(grid: GridSpec) -> Self {
        let n = grid.points_per_axis();
        let cutoff = DEALIAS_FRACTION * n as f64 / 2.0;
        let mut s = Spectrum {
            n,
            k1: Vec::with_capacity(grid.len()),
            k2: Vec::with_capacity(grid.len()),
            ksq: Vec::with_capacity(grid.len()),
            dealias: Vec::with_capacity(grid.len()),
        };
        for m1 in 0..n {
            for m2 in 0..n {
                let (w1, w2) = (grid.wavenumber(m1), grid.wavenumber(m2));
                s.k1.push(grid.odd_wavenumber(m1));
                s.k2.push(grid.odd_wavenumber(m2));
                s.ksq.push(w1 * w1 + w2 * w2);
                s.dealias.push(w1.abs() <= cutoff && w2.abs() <= cutoff);
            }
        }
        s
    }

    /// Velocity coefficients `(i k₂ ψ̂, −i k₁ ψ̂)` with `ψ̂ = ω̂/|k|²`.
    fn velocity(&self, omega: &[Complex64], mean: [f64; 2]) -> [Vec<Complex64>; 2] {
        let mut u1 = vec![Complex64::new(0.0, 0.0); omega.len()];
        let mut u2 = u1.clone();
        for i in 1..omega.len() {
            let psi = omega[i] / self.ksq[i];
            u1[i] = Complex64::new(0.0, self.k2[i]) * psi;
            u2[i] = Complex64::new(0.0, -self.k1[i]) * psi;
        }
        u1[0] = Complex64::new(mean[0], 0.0);
        u2[0] = Complex64::new(mean[1], 0.0);
        [u1, u2]
    }

    fn derivative(&self, c: &[Complex64], axis: Axis) -> Vec<Complex64> {
        let k = match axis {
            Axis::X1 => &self.k1,
            Axis::X2 => &self.k2,
        };
        c.iter().zip(k).map(|(&c, &k)| Complex64::new(0.0, k) * c).collect()
    }
}

impl FlowState {
    /// State whose velocity is the divergence-free part of `u`.
    pub fn from_velocity(u: &VectorField) -> Self {
        let grid = u.grid();
        let spectrum = Spectrum::new(grid);
        let [c1, c2] = u.components();
        let (s1, s2) = (c1.spectral(), c2.spectral());
        let mut omega: Vec<Complex64> = (0..grid.len())
            .map(|i| Complex64::new(0.0, spectrum.k1[i]) * s2[i] - Complex64::new(0.0, spectrum.k2[i]) * s1[i])
            .collect();
        omega[0] = Complex64::new(0.0, 0.0);
        Self { time: 0.0, grid, vorticity: omega, mean_velocity: [c1.mean(), c2.mean()] }
    }

    /// Mean-free state with vorticity `omega` and no mean flow.
    pub fn from_vorticity(omega: &ScalarField) -> Self {
        let grid = omega.grid();
        let n = grid.points_per_axis();
        let mut coeffs = omega.spectral().to_vec();
        for (i, c) in coeffs.iter_mut().enumerate() {
            if i / n == n / 2 || i % n == n / 2 {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        coeffs[0] = Complex64::new(0.0, 0.0);
        Self { time: 0.0, grid, vorticity: coeffs, mean_velocity: [0.0; 2] }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn vorticity_spectral(&self) -> &[Complex64] {
        &self.vorticity
    }

    pub fn mean_velocity(&self) -> [f64; 2] {
        self.mean_velocity
    }

    pub fn vorticity(&self) -> ScalarField {
        ScalarField::from_spectral(self.grid, &self.vorticity).expect("finite state")
    }

    pub fn velocity(&self) -> VectorField {
        let spectrum = Spectrum::new(self.grid);
        let [u1, u2] = spectrum.velocity(&self.vorticity, self.mean_velocity);
        VectorField::new(
            ScalarField::from_spectral(self.grid, &u1).expect("finite state"),
            ScalarField::from_spectral(self.grid, &u2).expect("finite state"),
        )
        .expect("same grid")
    }

    /// `[[∂₁u₁, ∂₂u₁], [∂₁u₂, ∂₂u₂]]`.
    pub fn velocity_gradient(&self) -> [[ScalarField; 2]; 2] {
        let spectrum = Spectrum::new(self.grid);
        let u = spectrum.velocity(&self.vorticity, self.mean_velocity);
        u.map(|c| {
            Axis::ALL.map(|a| ScalarField::from_spectral(self.grid, &spectrum.derivative(&c, a)).expect("finite state"))
        })
    }
}

/// Stepper bound to one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    cfg: SolverConfig,
    spectrum: Spectrum,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        let cfg = cfg.validated()?;
        Ok(Self { cfg, spectrum: Spectrum::new(cfg.grid) })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// `dt = cfl · h / ‖u‖_∞`, or the horizon for a fluid at rest.
    pub fn cfl_dt(&self, state: &FlowState) -> f64 {
        let speed = state.velocity().max_abs();
        if speed > 0.0 {
            self.cfg.cfl * self.cfg.grid.spacing() / speed
        } else {
            self.cfg.horizon
        }
    }

    /// Dealiased `−u·∇ω` in spectral space, and `max |u|` on the grid.
    fn nonlinear(&self, omega: &[Complex64], mean: [f64; 2]) -> (Vec<Complex64>, f64) {
        let n = self.spectrum.n;
        let [u1, u2] = self.spectrum.velocity(omega, mean);
        let wx = self.spectrum.derivative(omega, Axis::X1);
        let wy = self.spectrum.derivative(omega, Axis::X2);
        let fields: Vec<Vec<f64>> = [&u1, &u2, &wx, &wy].par_iter().map(|c| inverse_transform(c, n)).collect();
        let speed = fields[0].iter().zip(&fields[1]).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
        let adv: Vec<f64> =
            (0..omega.len()).map(|i| -(fields[0][i] * fields[2][i] + fields[1][i] * fields[3][i])).collect();
        let mut out = forward_transform(&adv, n);
        for (c, &keep) in out.iter_mut().zip(&self.spectrum.dealias) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out[0] = Complex64::new(0.0, 0.0);
        (out, speed)
    }

    fn decay(&self, dt: f64) -> Vec<f64> {
        self.spectrum.ksq.iter().map(|&k| (-self.cfg.nu * k * dt).exp()).collect()
    }

    /// One integrating-factor RK4 step; returns the new state and the speed
    /// `‖u‖_∞` of the input state.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<(FlowState, f64)> {
        self.step_with(state, dt, &self.decay(dt), &self.decay(0.5 * dt))
    }

    fn step_with(&self, state: &FlowState, dt: f64, e: &[f64], eh: &[f64]) -> Result<(FlowState, f64)> {
        let w = &state.vorticity;
        let mean = state.mean_velocity;
        let lin = |a: &[Complex64], s: &[f64], b: &[Complex64], c: f64| -> Vec<Complex64> {
            a.iter().zip(s).zip(b).map(|((&a, &s), &b)| s * a + c * b).collect()
        };
        let (n1, speed) = self.nonlinear(w, mean);
        // E_h (ω + dt/2 N1)
        let half: Vec<Complex64> = w.iter().zip(&n1).map(|(&a, &b)| a + 0.5 * dt * b).collect();
        let a2: Vec<Complex64> = half.iter().zip(eh).map(|(&a, &s)| s * a).collect();
        let (n2, _) = self.nonlinear(&a2, mean);
        let a3 = lin(w, eh, &n2, 0.5 * dt);
        let (n3, _) = self.nonlinear(&a3, mean);
        let ehn3: Vec<Complex64> = n3.iter().zip(eh).map(|(&a, &s)| s * a).collect();
        let a4 = lin(w, e, &ehn3, dt);
        let (n4, _) = self.nonlinear(&a4, mean);
        let next: Vec<Complex64> = (0..w.len())
            .map(|i| e[i] * w[i] + dt / 6.0 * (e[i] * n1[i] + 2.0 * eh[i] * (n2[i] + n3[i]) + n4[i]))
            .collect();
        let time = state.time + dt;
        if next.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp { time });
        }
        Ok((FlowState { time, grid: state.grid, vorticity: next, mean_velocity: mean }, speed))
    }
}

/// Diagnostics at the output samples of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormSeries {
    pub times: Vec<f64>,
    /// `Σ_{ij} ‖∂_j u_i‖_BMO`.
    pub f0: Vec<f64>,
    /// `‖∇u‖_{L2}`.
    pub g0: Vec<f64>,
    /// `‖u‖_{L_{2+σ}}`.
    pub h0: Vec<f64>,
    /// `½ ∫ |u|²`.
    pub energy: Vec<f64>,
    /// `½ ∫ ω²`.
    pub enstrophy: Vec<f64>,
}

impl NormSeries {
    pub const CSV_HEADER: [&'static str; 6] = ["t", "f0", "g0", "h0", "energy", "enstrophy"];

    fn push(&mut self, state: &FlowState, sigma: f64) {
        let u = state.velocity();
        let grads: Vec<ScalarField> = state.velocity_gradient().into_iter().flatten().collect();
        let f0 = grads.par_iter().map(bmo_seminorm).sum();
        let g0 = grads.iter().map(|d| d.inner(d).expect("same grid")).sum::<f64>().sqrt();
        let omega = state.vorticity();
        self.times.push(state.time);
        self.f0.push(f0);
        self.g0.push(g0);
        self.h0.push(lp_norm(&u.magnitude(), 2.0 + sigma).expect("p > 1"));
        self.energy.push(0.5 * u.inner(&u).expect("same grid"));
        self.enstrophy.push(0.5 * omega.inner(&omega).expect("same grid"));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..self.len())
            .map(|k| {
                [self.times[k], self.f0[k], self.g0[k], self.h0[k], self.energy[k], self.enstrophy[k]]
                    .map(fmt17)
                    .to_vec()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub config: SolverConfig,
    pub dt: f64,
    pub steps: usize,
    /// States at every output stride, starting with the initial state.
    pub samples: Vec<FlowState>,
    pub series: NormSeries,
    /// Time of detected blow-up; the run stops there.
    pub blow_up: Option<f64>,
    /// Largest `dt ‖u‖_∞ / h` seen.
    pub max_courant: f64,
}

impl FlowRun {
    pub fn completed(&self) -> bool {
        self.blow_up.is_none()
    }

    pub fn final_state(&self) -> &FlowState {
        self.samples.last().expect("initial sample")
    }
}

/// Integrates from `u0` (Leray-projected) to the configured horizon with a
/// fixed step; the step count follows [`SolverConfig::step_count`].
pub fn run(u0: &VectorField, cfg: SolverConfig) -> Result<FlowRun> {
    let solver = Solver::new(cfg)?;
    cfg.grid.check_same(&u0.grid())?;
    run_from(&solver, FlowState::from_velocity(u0))
}

pub fn run_from(solver: &Solver, initial: FlowState) -> Result<FlowRun> {
    let cfg = *solver.config();
    let speed0 = initial.velocity().max_abs();
    let steps = cfg.step_count(speed0);
    let dt = cfg.horizon / steps as f64;
    let (e, eh) = (solver.decay(dt), solver.decay(0.5 * dt));
    let mut series = NormSeries::default();
    series.push(&initial, cfg.sigma);
    let mut samples = vec![initial];
    let mut state = samples[0].clone();
    let mut blow_up = None;
    let mut max_courant: f64 = 0.0;
    for k in 1..=steps {
        let (next, speed) = match solver.step_with(&state, dt, &e, &eh) {
            Ok(v) => v,
            Err(Error::BlowUp { time }) => {
                blow_up = Some(time);
                break;
            }
            Err(err) => return Err(err),
        };
        max_courant = max_courant.max(speed * dt / cfg.grid.spacing());
        if speed > BLOW_UP_SPEED {
            blow_up = Some(state.time);
            break;
        }
        state = next;
        // land exactly on the horizon
        state.time = if k == steps { cfg.horizon } else { k as f64 * dt };
        if k % cfg.output_stride == 0 {
            series.push(&state, cfg.sigma);
            samples.push(state.clone());
        }
    }
    Ok(FlowRun { config: cfg, dt, steps, samples, series, blow_up, max_courant })
}

/// `‖a − b‖_{L2}`.
pub fn gap_l2(a: &VectorField, b: &VectorField) -> Result<f64> {
    Ok(a.sub(b)?.l2_norm())
}

/// `‖u^ν − u^E‖_{L2}` at each shared sample of two runs.
pub fn gap_series(viscous: &FlowRun, inviscid: &FlowRun) -> Result<Vec<f64>> {
    check_paired(viscous, inviscid)?;
    viscous.samples.par_iter().zip(&inviscid.samples).map(|(a, b)| gap_l2(&a.velocity(), &b.velocity())).collect()
}

fn check_paired(a: &FlowRun, b: &FlowRun) -> Result<()> {
    a.config.grid.check_same(&b.config.grid)?;
    let same = a.samples.len() == b.samples.len()
        && a.samples.iter().zip(&b.samples).all(|(x, y)| (x.time - y.time).abs() <= 1e-12 * a.config.horizon);
    if !same {
        return Err(invalid("runs are not sampled at identical times"));
    }
    Ok(())
}

/// Terms of `½ d/dt‖w‖² + ∫ w·(w·∇)u^E + ν ∫ ∇u^ν : ∇w = 0`, `w = u^ν − u^E`,
/// at interior samples; the derivative is a five-point central difference.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyIdentity {
    pub times: Vec<f64>,
    pub rate: Vec<f64>,
    pub transfer: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub residual: Vec<f64>,
}

impl EnergyIdentity {
    /// `max |residual| / max |term|` over all samples.
    pub fn relative_residual(&self) -> f64 {
        let scale = [&self.rate, &self.transfer, &self.dissipation]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        let worst = self.residual.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            worst
        } else {
            worst / scale
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }
}

pub fn energy_identity(viscous: &FlowRun, inviscid: &FlowRun) -> Result<EnergyIdentity> {
    check_paired(viscous, inviscid)?;
    let len = viscous.samples.len();
    if len < 5 {
        return Err(invalid("energy identity needs at least five samples"));
    }
    let h = viscous.samples[1].time - viscous.samples[0].time;
    let nu = viscous.config.nu;
    let per_sample: Vec<(f64, f64, f64)> = viscous
        .samples
        .par_iter()
        .zip(&inviscid.samples)
        .map(|(sv, se)| {
            let w = sv.velocity().sub(&se.velocity()).expect("same grid");
            let ge = se.velocity_gradient();
            let gv = sv.velocity_gradient();
            let wc = w.components();
            let mut transfer = 0.0;
            let mut dissipation = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let wij = wc[i].zip_with(&wc[j], |a, b| a * b).expect("same grid");
                    transfer += wij.inner(&ge[i][j]).expect("same grid");
                    let dw = gv[i][j].sub(&ge[i][j]).expect("same grid");
                    dissipation += gv[i][j].inner(&dw).expect("same grid");
                }
            }
            (0.5 * w.inner(&w).expect("same grid"), transfer, nu * dissipation)
        })
        .collect();
    let mut out = EnergyIdentity {
        times: Vec::new(),
        rate: Vec::new(),
        transfer: Vec::new(),
        dissipation: Vec::new(),
        residual: Vec::new(),
    };
    for k in 2..len - 2 {
        let x = |j: usize| per_sample[j].0;
        let rate = (-x(k + 2) + 8.0 * x(k + 1) - 8.0 * x(k - 1) + x(k - 2)) / (12.0 * h);
        let (_, transfer, dissipation) = per_sample[k];
        out.times.push(viscous.samples[k].time);
        out.rate.push(rate);
        out.transfer.push(transfer);
        out.dissipation.push(dissipation);
        out.residual.push(rate + transfer + dissipation);
    }
    Ok(out)
}

/// Taylor–Green velocity `(sin x₁ cos x₂, −cos x₁ sin x₂)`.
pub fn taylor_green(grid: GridSpec) -> Result<VectorField> {
    VectorField::from_fn(grid, |x, y| (x.sin() * y.cos(), -x.cos() * y.sin()))
}
