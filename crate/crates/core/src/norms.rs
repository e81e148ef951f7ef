//! Function-space norms of grid fields: Lebesgue norms, the BMO seminorm over
//! dyadic squares, the Hardy norm through Riesz transforms, and the Zygmund
//! `L ln L` functional.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{Axis, ScalarField, DOMAIN_AREA};
use crate::io::fmt17;

/// Riemann-sum `L_p` norm; `p = ∞` gives the maximum modulus.
pub fn lp_norm(g: &ScalarField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("L_p norm requires p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(g.max_abs());
    }
    let vol = g.grid().cell_volume();
    if p == 1.0 {
        return Ok(g.values().iter().map(|v| v.abs()).sum::<f64>() * vol);
    }
    if p == 2.0 {
        return Ok((g.values().iter().map(|v| v * v).sum::<f64>() * vol).sqrt());
    }
    let s: f64 = g.values().iter().map(|v| v.abs().powf(p)).sum();
    Ok((s * vol).powf(1.0 / p))
}

/// The square on which the BMO supremum was attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmoWitness {
    pub value: f64,
    /// Side length in grid cells (a power of two).
    pub side_cells: usize,
    /// Lower-left grid index `(i1, i2)` of the square, before periodic wrap.
    pub origin: (usize, usize),
}

impl BmoWitness {
    fn better(self, other: BmoWitness) -> BmoWitness {
        // total order so that parallel reduction is deterministic
        let key = |w: &BmoWitness| (w.value, w.side_cells, std::cmp::Reverse(w.origin));
        match key(&self).partial_cmp(&key(&other)) {
            Some(std::cmp::Ordering::Less) => other,
            _ => self,
        }
    }
}

/// BMO seminorm: the largest mean absolute deviation from the local mean
/// over all squares of side `2π·2^{-j}` and every grid-aligned periodic
/// translate.
pub fn bmo_seminorm(g: &ScalarField) -> f64 {
    bmo_witness(g).value
}

pub fn bmo_witness(g: &ScalarField) -> BmoWitness {
    let n = g.grid().points_per_axis();
    // oscillation is shift invariant; centring on one sample makes
    // constant fields exactly zero
    let reference = g.values()[0];
    let v: Vec<f64> = g.values().iter().map(|x| x - reference).collect();

    // every translate of the full-side square covers the torus once
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let full = v.iter().map(|x| (x - mean).abs()).sum::<f64>() / v.len() as f64;
    let mut best = BmoWitness { value: full, side_cells: n, origin: (0, 0) };

    // periodic extension, so square rows are contiguous slices
    let m = 2 * n;
    let mut ext = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            ext[i * m + j] = v[(i % n) * n + (j % n)];
        }
    }

    let mut side = n / 2;
    while side >= 2 {
        let s = side;
        let area = (s * s) as f64;
        // row window sums: rows[i][j] = Σ_{t<s} v[i][j+t]
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            let base = i * m;
            for j in 0..n {
                rows[i * n + j] = ext[base + j..base + j + s].iter().sum();
            }
        }
        let level = (0..n)
            .into_par_iter()
            .map(|a| {
                let mut local = BmoWitness { value: 0.0, side_cells: s, origin: (a, 0) };
                for b in 0..n {
                    let mut sum = 0.0;
                    for t in 0..s {
                        sum += rows[((a + t) % n) * n + b];
                    }
                    let mu = sum / area;
                    let mut dev = 0.0;
                    for t in 0..s {
                        let start = (a + t) * m + b;
                        dev += ext[start..start + s].iter().map(|x| (x - mu).abs()).sum::<f64>();
                    }
                    let cand = BmoWitness { value: dev / area, side_cells: s, origin: (a, b) };
                    local = local.better(cand);
                }
                local
            })
            .reduce(|| BmoWitness { value: 0.0, side_cells: s, origin: (0, 0) }, BmoWitness::better);
        best = best.better(level);
        side /= 2;
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyNorm {
    /// `‖g − ḡ‖_{L1} + |ḡ|·(2π)² + Σ_k ‖R_k(g − ḡ)‖_{L1}`.
    pub value: f64,
    pub l1_term: f64,
    pub riesz_l1: [f64; 2],
    pub mean: f64,
    /// Whether the input already had (numerically) zero mean.
    pub mean_free: bool,
}

/// Hardy-space norm `‖g‖_{L1} + Σ_k ‖R_k g‖_{L1}`. Torus Riesz transforms act
/// on the mean-free part; the mean is charged to the `L1` term.
pub fn hardy_norm(g: &ScalarField) -> HardyNorm {
    let mean = g.mean();
    let centered = g.minus_mean();
    let l1_centered = lp_norm(&centered, 1.0).expect("p = 1");
    let l1_term = l1_centered + mean.abs() * DOMAIN_AREA;
    let riesz_l1 = Axis::ALL.map(|axis| lp_norm(&centered.riesz_transform(axis), 1.0).expect("p = 1"));
    let scale = g.max_abs();
    HardyNorm {
        value: l1_term + riesz_l1[0] + riesz_l1[1],
        l1_term,
        riesz_l1,
        mean,
        mean_free: mean.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE),
    }
}

/// `∫ g ln⁺(g/λ)` by quadrature, for pointwise nonnegative `g`.
pub fn zygmund_functional(g: &ScalarField, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be positive and finite, got {lambda}")));
    }
    if let Some((index, &value)) = g.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "zygmund functional needs g >= 0; found {value} at index {index} (pass |g|)"
        )));
    }
    let s: f64 = g.values().iter().filter(|&&x| x > lambda).map(|&x| x * (x / lambda).ln()).sum();
    Ok(s * g.grid().cell_volume())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    /// `L_{1+σ/2}` norm.
    pub lp_sigma: f64,
    pub bmo: f64,
    pub hardy: f64,
    /// `∫ |g| ln⁺|g|`.
    pub llogl: f64,
    pub mean_free: bool,
}

impl NormReport {
    pub const CSV_HEADER: [&'static str; 7] = ["l1", "l2", "linf", "lp_sigma", "bmo", "hardy", "llogl"];

    pub fn compute(g: &ScalarField, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        let hardy = hardy_norm(g);
        Ok(Self {
            l1: lp_norm(g, 1.0)?,
            l2: lp_norm(g, 2.0)?,
            linf: lp_norm(g, f64::INFINITY)?,
            lp_sigma: lp_norm(g, 1.0 + sigma / 2.0)?,
            bmo: bmo_seminorm(g),
            hardy: hardy.value,
            llogl: zygmund_functional(&g.abs(), 1.0)?,
            mean_free: hardy.mean_free,
        })
    }

    pub fn csv_row(&self) -> Vec<String> {
        [self.l1, self.l2, self.linf, self.lp_sigma, self.bmo, self.hardy, self.llogl]
            .iter()
            .map(|&v| fmt17(v))
            .collect()
    }
}
