//! Uniform periodic grids on the flat torus `[0, 2π)²`.
//!
//! Fields are stored row-major with the `x1` index outermost: the sample at
//! `(x1, x2) = (i1·h, i2·h)` lives at `values[i1 * n + i2]`.
//!
//! Fourier convention: `spectral()` holds Fourier-series coefficients,
//! `f(x) = Σ_k c_k e^{i k·x}`, so `c_k = n⁻² Σ_x f(x) e^{-i k·x}` and
//! Parseval reads `Σ f² h² = (2π)² Σ |c_k|²`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Side length of the periodic domain along each axis.
pub const DOMAIN_LENGTH: f64 = 2.0 * PI;

/// Total measure of the torus, `(2π)²`.
pub const DOMAIN_AREA: f64 = DOMAIN_LENGTH * DOMAIN_LENGTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    n: usize,
}

impl GridSpec {
    pub fn new(points_per_axis: usize) -> Result<Self> {
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        Ok(Self { n: points_per_axis })
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        DOMAIN_LENGTH / self.n as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n + i2
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed wavenumber of spectral index `m`; the Nyquist index maps to `+n/2`.
    #[inline]
    pub fn wavenumber(&self, m: usize) -> f64 {
        if m <= self.n / 2 {
            m as f64
        } else {
            m as f64 - self.n as f64
        }
    }

    /// Wavenumber used for odd multipliers (derivatives, Riesz): the Nyquist
    /// index is zeroed so that real inputs map to real outputs.
    #[inline]
    pub fn odd_wavenumber(&self, m: usize) -> f64 {
        if m == self.n / 2 {
            0.0
        } else {
            self.wavenumber(m)
        }
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    /// Shortest periodic displacement from `a` to `b` along one axis.
    #[inline]
    pub fn periodic_delta(a: f64, b: f64) -> f64 {
        let mut d = (b - a).rem_euclid(DOMAIN_LENGTH);
        if d > PI {
            d -= DOMAIN_LENGTH;
        }
        d
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) })
        })
        .clone()
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2_in_place(data: &mut [Complex64], n: usize, fft: &dyn Fft<f64>) {
    fft.process(data);
    transpose(data, n);
    fft.process(data);
    transpose(data, n);
}

/// Fourier-series coefficients of row-major real samples.
pub(crate) fn forward_transform(values: &[f64], n: usize) -> Vec<Complex64> {
    let plans = plans(n);
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut data, n, plans.forward.as_ref());
    let scale = 1.0 / (n * n) as f64;
    for c in &mut data {
        *c *= scale;
    }
    data
}

/// Synthesis `Σ_k c_k e^{ik·x}` at the grid points; returns the real part.
pub(crate) fn inverse_transform(coeffs: &[Complex64], n: usize) -> Vec<f64> {
    let plans = plans(n);
    let mut data = coeffs.to_vec();
    fft2_in_place(&mut data, n, plans.inverse.as_ref());
    data.into_iter().map(|c| c.re).collect()
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.values == other.values
    }
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} samples for a {}x{} grid, got {}",
                grid.len(),
                grid.points_per_axis(),
                grid.points_per_axis(),
                values.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { grid, values, spectral: OnceLock::new() })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.len()], spectral: OnceLock::new() }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.points_per_axis();
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..n {
            let x1 = grid.coord(i1);
            for i2 in 0..n {
                values.push(f(x1, grid.coord(i2)));
            }
        }
        Self::new(grid, values)
    }

    /// Real part of the synthesis of `coeffs`. The spectral cache is left
    /// empty so that it always equals the transform of the stored values.
    pub fn from_spectral(grid: GridSpec, coeffs: &[Complex64]) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(invalid("spectral array has the wrong length"));
        }
        Self::new(grid, inverse_transform(coeffs, grid.points_per_axis()))
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.index(i1, i2)]
    }

    /// Cached Fourier coefficients; computed once, on first use.
    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| forward_transform(&self.values, self.grid.points_per_axis()))
    }

    pub fn has_spectral_cache(&self) -> bool {
        self.spectral.get().is_some()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `∫ self · other` by the rectangle rule.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        ScalarField::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        ScalarField::new(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn abs(&self) -> ScalarField {
        self.map(f64::abs).expect("abs of finite values is finite")
    }

    pub fn scaled(&self, s: f64) -> Result<ScalarField> {
        self.map(|v| s * v)
    }

    pub fn shifted(&self, c: f64) -> Result<ScalarField> {
        self.map(|v| v + c)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn minus_mean(&self) -> ScalarField {
        let m = self.mean();
        self.shifted(-m).expect("shift by the mean stays finite")
    }

    /// Applies the Fourier multiplier `symbol(k1, k2)`, given spectral indices.
    pub(crate) fn apply_multiplier(&self, symbol: impl Fn(usize, usize) -> Complex64) -> ScalarField {
        let n = self.grid.points_per_axis();
        let coeffs = self.spectral();
        let mut out = Vec::with_capacity(coeffs.len());
        for m1 in 0..n {
            for m2 in 0..n {
                out.push(coeffs[m1 * n + m2] * symbol(m1, m2));
            }
        }
        ScalarField::from_spectral(self.grid, &out).expect("multiplier of finite field is finite")
    }

    /// Spectral partial derivative along `axis`.
    pub fn partial(&self, axis: Axis) -> ScalarField {
        let g = self.grid;
        self.apply_multiplier(|m1, m2| {
            let k = match axis {
                Axis::X1 => g.odd_wavenumber(m1),
                Axis::X2 => g.odd_wavenumber(m2),
            };
            Complex64::new(0.0, k)
        })
    }

    pub fn gradient(&self) -> VectorField {
        VectorField { components: [self.partial(Axis::X1), self.partial(Axis::X2)] }
    }

    pub fn laplacian(&self) -> ScalarField {
        let g = self.grid;
        self.apply_multiplier(|m1, m2| {
            let (k1, k2) = (g.wavenumber(m1), g.wavenumber(m2));
            Complex64::new(-(k1 * k1 + k2 * k2), 0.0)
        })
    }

    /// Riesz transform with symbol `-i ξ_k / |ξ|`; the zero mode maps to 0.
    pub fn riesz_transform(&self, axis: Axis) -> ScalarField {
        let g = self.grid;
        self.apply_multiplier(|m1, m2| {
            let (k1, k2) = (g.wavenumber(m1), g.wavenumber(m2));
            let norm = (k1 * k1 + k2 * k2).sqrt();
            if norm == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let k = match axis {
                Axis::X1 => g.odd_wavenumber(m1),
                Axis::X2 => g.odd_wavenumber(m2),
            };
            Complex64::new(0.0, -k / norm)
        })
    }

    /// Riesz transform by 1-based axis index, as used by external callers.
    pub fn riesz_transform_index(&self, axis: usize) -> Result<ScalarField> {
        Ok(self.riesz_transform(Axis::try_from(axis)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

impl Axis {
    pub const ALL: [Axis; 2] = [Axis::X1, Axis::X2];
}

impl TryFrom<usize> for Axis {
    type Error = Error;

    fn try_from(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Axis::X1),
            2 => Ok(Axis::X2),
            _ => Err(invalid(format!("axis index must be 1 or 2, got {k}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 2],
}

impl VectorField {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        c1.grid.check_same(&c2.grid)?;
        Ok(Self { components: [c1, c2] })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let c1 = ScalarField::from_fn(grid, |x1, x2| f(x1, x2).0)?;
        let c2 = ScalarField::from_fn(grid, |x1, x2| f(x1, x2).1)?;
        Self::new(c1, c2)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { components: [ScalarField::zeros(grid), ScalarField::zeros(grid)] }
    }

    #[inline]
    pub fn grid(&self) -> GridSpec {
        self.components[0].grid
    }

    #[inline]
    pub fn component(&self, axis: Axis) -> &ScalarField {
        match axis {
            Axis::X1 => &self.components[0],
            Axis::X2 => &self.components[1],
        }
    }

    pub fn components(&self) -> &[ScalarField; 2] {
        &self.components
    }

    pub fn divergence(&self) -> ScalarField {
        let d1 = self.components[0].partial(Axis::X1);
        let d2 = self.components[1].partial(Axis::X2);
        d1.add(&d2).expect("same grid")
    }

    /// Scalar curl `∂₁v₂ − ∂₂v₁`.
    pub fn curl(&self) -> ScalarField {
        let a = self.components[1].partial(Axis::X1);
        let b = self.components[0].partial(Axis::X2);
        a.sub(&b).expect("same grid")
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        self.components[0].zip_with(&self.components[1], f64::hypot).expect("same grid")
    }

    pub fn max_abs(&self) -> f64 {
        self.magnitude().max_abs()
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        VectorField::new(self.components[0].sub(&other.components[0])?, self.components[1].sub(&other.components[1])?)
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        VectorField::new(self.components[0].add(&other.components[0])?, self.components[1].add(&other.components[1])?)
    }

    pub fn scaled(&self, s: f64) -> Result<VectorField> {
        VectorField::new(self.components[0].scaled(s)?, self.components[1].scaled(s)?)
    }

    /// `∫ self · other`.
    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        Ok(self.components[0].inner(&other.components[0])? + self.components[1].inner(&other.components[1])?)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).expect("same grid").max(0.0).sqrt()
    }

    /// Orthogonal projection onto divergence-free fields,
    /// `v̂ − ξ (ξ·v̂)/|ξ|²`; the mean flow is kept.
    pub fn leray_project(&self) -> VectorField {
        let g = self.grid();
        let n = g.points_per_axis();
        let s1 = self.components[0].spectral();
        let s2 = self.components[1].spectral();
        let mut p1 = Vec::with_capacity(g.len());
        let mut p2 = Vec::with_capacity(g.len());
        for m1 in 0..n {
            for m2 in 0..n {
                let idx = m1 * n + m2;
                let (k1, k2) = (g.wavenumber(m1), g.wavenumber(m2));
                let k2sum = k1 * k1 + k2 * k2;
                if k2sum == 0.0 {
                    p1.push(s1[idx]);
                    p2.push(s2[idx]);
                    continue;
                }
                let dot = (s1[idx] * k1 + s2[idx] * k2) / k2sum;
                p1.push(s1[idx] - dot * k1);
                p2.push(s2[idx] - dot * k2);
            }
        }
        VectorField {
            components: [
                ScalarField::from_spectral(g, &p1).expect("finite"),
                ScalarField::from_spectral(g, &p2).expect("finite"),
            ],
        }
    }
}

/// Deterministic real field with random Fourier modes `0 < |k|∞ ≤ kmax`.
///
/// Amplitudes and phases come from a ChaCha8 stream seeded with `seed`; the
/// coefficient array is Hermitian so the synthesis is exactly real.
pub fn random_band_limited(grid: GridSpec, kmax: usize, seed: u64) -> Result<ScalarField> {
    let n = grid.points_per_axis();
    if kmax == 0 || 2 * kmax >= n {
        return Err(invalid(format!("kmax must lie in 1..{} for n = {n}", n / 2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let k = kmax as i64;
    let wrap = |m: i64| -> usize { m.rem_euclid(n as i64) as usize };
    for k1 in -k..=k {
        for k2 in -k..=k {
            // one representative per ±k pair
            if (k1, k2) <= (0, 0) {
                continue;
            }
            let amp: f64 = rng.gen_range(-1.0..1.0);
            let phase: f64 = rng.gen_range(0.0..DOMAIN_LENGTH);
            let c = Complex64::from_polar(amp, phase);
            coeffs[wrap(k1) * n + wrap(k2)] = c;
            coeffs[wrap(-k1) * n + wrap(-k2)] = c.conj();
        }
    }
    ScalarField::from_spectral(grid, &coeffs)
}
