//! Translation from a target power correlation to the correlation of the
//! complex Gaussian scattered component that realizes it.
//!
//! For a Rician path `|A + s|²` with circularly symmetric `s`, unit-variance
//! correlation `ρ` between two positions, and `K = A²/E|s|²`, the power
//! correlation is `(2Kρ + ρ²) / (2K + 1)`. At `K = 0` this is the familiar
//! `ρ²` of Rayleigh fading; at large `K` the power follows `ρ` linearly.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;

/// Power correlation produced by Gaussian correlation `rho` at linear factor `k`.
pub fn rician_power_correlation(k: f64, rho: f64) -> f64 {
    (2.0 * k * rho + rho * rho) / (2.0 * k + 1.0)
}

/// Inverse of [`rician_power_correlation`] on `[0, 1]`.
pub fn invert_rician_power_correlation(k: f64, power_corr: f64) -> f64 {
    let r = power_corr.clamp(0.0, 1.0);
    let q = r * (2.0 * k + 1.0);
    // −K + √(K² + q), rearranged to avoid cancellation at large K
    (q / (k + (k * k + q).sqrt())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MappingMode {
    /// `ρ = √r`; exact only for Rayleigh paths.
    RayleighSqrt,
    /// Closed-form Rician inversion per path K.
    #[default]
    Analytic,
    /// Monte Carlo lookup table, inverted numerically.
    Calibrated,
}

/// How a target power correlation becomes a Gaussian correlation.
#[derive(Debug, Clone, Default)]
pub enum CorrelationMapping {
    RayleighSqrt,
    #[default]
    Analytic,
    Calibrated(Arc<MappingTable>),
}

impl CorrelationMapping {
    pub fn mode(&self) -> MappingMode {
        match self {
            CorrelationMapping::RayleighSqrt => MappingMode::RayleighSqrt,
            CorrelationMapping::Analytic => MappingMode::Analytic,
            CorrelationMapping::Calibrated(_) => MappingMode::Calibrated,
        }
    }

    /// Builds the mapping for `mode`; calibration uses `draws` paired draws per grid point.
    pub fn for_mode(mode: MappingMode, draws: usize, seed: u64) -> Self {
        match mode {
            MappingMode::RayleighSqrt => CorrelationMapping::RayleighSqrt,
            MappingMode::Analytic => CorrelationMapping::Analytic,
            MappingMode::Calibrated => CorrelationMapping::Calibrated(Arc::new(MappingTable::build(draws, seed))),
        }
    }

    pub fn gaussian_for_power(&self, k_linear: f64, power_corr: f64) -> f64 {
        let r = power_corr.clamp(0.0, 1.0);
        match self {
            CorrelationMapping::RayleighSqrt => r.sqrt(),
            CorrelationMapping::Analytic => invert_rician_power_correlation(k_linear, r),
            CorrelationMapping::Calibrated(table) => table.invert(10.0 * k_linear.log10(), r),
        }
    }
}

/// Empirical power correlation over a (K dB, Gaussian ρ) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingTable {
    pub k_db_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    /// `power_corr[i][j]` for `k_db_grid[i]`, `rho_grid[j]`; non-decreasing in `j`.
    pub power_corr: Vec<Vec<f64>>,
    pub draws_per_point: usize,
}

impl MappingTable {
    pub const DEFAULT_DRAWS: usize = 200_000;

    pub fn build(draws: usize, seed: u64) -> Self {
        let k_db_grid: Vec<f64> = (0..=20).map(|i| -10.0 + 2.5 * i as f64).collect();
        let rho_grid: Vec<f64> = (0..=20).map(|j| j as f64 * 0.05).collect();
        let n_rho = rho_grid.len();
        let flat: Vec<f64> = (0..k_db_grid.len() * n_rho)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n_rho, idx % n_rho);
                if j == 0 {
                    0.0
                } else if j == n_rho - 1 {
                    1.0
                } else {
                    let k = 10f64.powf(k_db_grid[i] / 10.0);
                    monte_carlo_power_correlation(k, rho_grid[j], draws, rng::substream_seed(seed, idx as u64))
                }
            })
            .collect();
        let power_corr = flat
            .chunks(n_rho)
            .map(|row| {
                let mut acc = 0.0f64;
                row.iter()
                    .map(|&v| {
                        acc = acc.max(v.clamp(0.0, 1.0));
                        acc
                    })
                    .collect()
            })
            .collect();
        MappingTable {
            k_db_grid,
            rho_grid,
            power_corr,
            draws_per_point: draws,
        }
    }

    fn curve_at(&self, k_db: f64) -> Vec<f64> {
        let g = &self.k_db_grid;
        let k = k_db.clamp(g[0], g[g.len() - 1]);
        let i = g.partition_point(|&x| x <= k).clamp(1, g.len() - 1);
        let t = (k - g[i - 1]) / (g[i] - g[i - 1]);
        self.power_corr[i - 1]
            .iter()
            .zip(&self.power_corr[i])
            .map(|(a, b)| a + t * (b - a))
            .collect()
    }

    /// Gaussian ρ whose tabulated power correlation at `k_db` equals `power_corr`.
    pub fn invert(&self, k_db: f64, power_corr: f64) -> f64 {
        let curve = self.curve_at(k_db);
        let r = power_corr.clamp(0.0, 1.0);
        let j = curve.partition_point(|&v| v < r);
        if j == 0 {
            return self.rho_grid[0];
        }
        if j >= curve.len() {
            return *self.rho_grid.last().unwrap();
        }
        let (r0, r1) = (curve[j - 1], curve[j]);
        let (p0, p1) = (self.rho_grid[j - 1], self.rho_grid[j]);
        if r1 <= r0 {
            return p1;
        }
        p0 + (r - r0) / (r1 - r0) * (p1 - p0)
    }
}

/// Pearson correlation of `|A + s₁|²` and `|A + s₂|²` over `draws` pairs with
/// Gaussian correlation `rho`, at unit total power.
pub fn monte_carlo_power_correlation(k: f64, rho: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = rng::stream(seed);
    let a = (k / (k + 1.0)).sqrt();
    let sigma = (0.5 / (k + 1.0)).sqrt();
    let tail = (1.0 - rho * rho).max(0.0).sqrt();
    let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..draws {
        let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let (x1, y1) = (g[0], g[1]);
        let (x2, y2) = (rho * g[0] + tail * g[2], rho * g[1] + tail * g[3]);
        let p1 = (a + sigma * x1).powi(2) + (sigma * y1).powi(2);
        let p2 = (a + sigma * x2).powi(2) + (sigma * y2).powi(2);
        s1 += p1;
        s2 += p2;
        s11 += p1 * p1;
        s22 += p2 * p2;
        s12 += p1 * p2;
    }
    let n = draws as f64;
    let cov = s12 / n - s1 * s2 / (n * n);
    let v1 = s11 / n - (s1 / n).powi(2);
    let v2 = s22 / n - (s2 / n).powi(2);
    cov / (v1 * v2).sqrt()
}
