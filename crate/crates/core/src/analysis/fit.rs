use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean, FadingSampleSet};
use crate::channel::{
    lognormal_cdf, rayleigh_cdf, LognormalParams, RayleighParams, RicianCdf, RicianParams,
};
use crate::error::AnalysisError;

pub const MIN_FIT_SAMPLES: usize = 100;

/// Rician search grid in dB: (first, last, step).
pub const K_GRID_DB: (f64, f64, f64) = (-5.0, 25.0, 0.1);

/// Integer-dB candidates for the bounding pair.
const BOUND_K_DB: std::ops::RangeInclusive<i32> = -5..=25;

/// Model CDFs are evaluated exactly at this many sample quantiles and
/// interpolated in between once the sample set is large.
const CDF_KNOTS: usize = 1024;

/// Sorted envelope samples with Hazen plotting positions `(i + 0.5)/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    voltages: Vec<f64>,
    mean_square: f64,
}

impl EmpiricalCdf {
    pub fn new(samples: &FadingSampleSet) -> Result<Self, AnalysisError> {
        Self::from_voltages(samples.voltages())
    }

    pub fn from_voltages(mut voltages: Vec<f64>) -> Result<Self, AnalysisError> {
        if voltages.len() < MIN_FIT_SAMPLES {
            return Err(AnalysisError::InsufficientData(format!(
                "{} samples, at least {MIN_FIT_SAMPLES} required",
                voltages.len()
            )));
        }
        if let Some(bad) = voltages.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return Err(AnalysisError::Data(format!("envelope sample {bad} is not positive and finite")));
        }
        voltages.sort_by(f64::total_cmp);
        let squares: Vec<f64> = voltages.iter().map(|v| v * v).collect();
        let mean_square = mean(&squares);
        Ok(EmpiricalCdf { voltages, mean_square })
    }

    pub fn len(&self) -> usize {
        self.voltages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltages.is_empty()
    }

    pub fn voltages(&self) -> &[f64] {
        &self.voltages
    }

    pub fn mean_square(&self) -> f64 {
        self.mean_square
    }

    pub fn level(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.voltages.len() as f64
    }

    /// Linearly interpolated quantile between order statistics.
    pub fn quantile(&self, p: f64) -> f64 {
        let v = &self.voltages;
        let h = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
        let i = h.floor() as usize;
        if i + 1 >= v.len() {
            return v[v.len() - 1];
        }
        v[i] + (h - i as f64) * (v[i + 1] - v[i])
    }

    fn is_constant(&self) -> bool {
        self.voltages[0] == self.voltages[self.voltages.len() - 1]
    }

    /// Mean squared deviation between `cdf` and the plotting positions.
    pub fn fit_error(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let v = &self.voltages;
        let n = v.len();
        let mut sq = Vec::with_capacity(n);
        if n <= 2 * CDF_KNOTS {
            sq.extend(v.iter().enumerate().map(|(i, &x)| (cdf(x) - self.level(i)).powi(2)));
        } else {
            let knots: Vec<usize> = (0..CDF_KNOTS)
                .map(|k| ((k * (n - 1)) as f64 / (CDF_KNOTS - 1) as f64).round() as usize)
                .collect();
            let at_knots: Vec<f64> = knots.iter().map(|&i| cdf(v[i])).collect();
            for s in 0..CDF_KNOTS - 1 {
                let (i0, i1) = (knots[s], knots[s + 1]);
                let (x0, x1) = (v[i0], v[i1]);
                let (f0, f1) = (at_knots[s], at_knots[s + 1]);
                let end = if s + 2 == CDF_KNOTS { i1 + 1 } else { i1 };
                for (i, &x) in v.iter().enumerate().take(end).skip(i0) {
                    let f = if x1 > x0 { f0 + (x - x0) / (x1 - x0) * (f1 - f0) } else { f0 };
                    sq.push((f - self.level(i)).powi(2));
                }
            }
        }
        mean(&sq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Rician,
    Rayleigh,
    Lognormal,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Rician => "rician",
            Family::Rayleigh => "rayleigh",
            Family::Lognormal => "lognormal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianFit {
    pub params: RicianParams,
    pub k_db: f64,
    pub error: f64,
    /// Zero-variance input, or the optimum sits on a grid edge.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighFit {
    pub params: RayleighParams,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalFit {
    pub params: LognormalParams,
    pub error: f64,
    /// Log-domain spread was zero and has been replaced by a tiny positive value.
    pub degenerate: bool,
}

fn k_grid() -> Vec<f64> {
    let (lo, hi, step) = K_GRID_DB;
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn rician_at(k_db: f64, mean_square: f64) -> RicianParams {
    RicianParams::from_k_db(k_db, mean_square).expect("grid K and positive mean square are valid")
}

pub fn fit_rician(samples: &FadingSampleSet) -> Result<RicianFit, AnalysisError> {
    Ok(fit_rician_ecdf(&EmpiricalCdf::new(samples)?))
}

pub(crate) fn fit_rician_ecdf(ecdf: &EmpiricalCdf) -> RicianFit {
    let m2 = ecdf.mean_square();
    let grid = k_grid();
    if ecdf.is_constant() {
        let k_db = grid[grid.len() - 1];
        let params = rician_at(k_db, m2);
        let cdf = RicianCdf::new(&params);
        return RicianFit {
            params,
            k_db,
            error: ecdf.fit_error(|x| cdf.eval(x)),
            degenerate: true,
        };
    }
    let errors: Vec<f64> = grid
        .par_iter()
        .map(|&k_db| {
            let cdf = RicianCdf::new(&rician_at(k_db, m2));
            ecdf.fit_error(|x| cdf.eval(x))
        })
        .collect();
    let mut best = 0;
    for (i, &e) in errors.iter().enumerate() {
        if e < errors[best] {
            best = i;
        }
    }
    RicianFit {
        params: rician_at(grid[best], m2),
        k_db: grid[best],
        error: errors[best],
        degenerate: best == 0 || best == grid.len() - 1,
    }
}

pub fn fit_rayleigh(samples: &FadingSampleSet) -> Result<RayleighFit, AnalysisError> {
    Ok(fit_rayleigh_ecdf(&EmpiricalCdf::new(samples)?))
}

pub(crate) fn fit_rayleigh_ecdf(ecdf: &EmpiricalCdf) -> RayleighFit {
    let params = RayleighParams::from_mean_square(ecdf.mean_square()).expect("positive mean square");
    RayleighFit {
        params,
        error: ecdf.fit_error(|x| rayleigh_cdf(x, &params).unwrap_or(0.0)),
    }
}

pub fn fit_lognormal(samples: &FadingSampleSet) -> Result<LognormalFit, AnalysisError> {
    Ok(fit_lognormal_ecdf(&EmpiricalCdf::new(samples)?))
}

pub(crate) fn fit_lognormal_ecdf(ecdf: &EmpiricalCdf) -> LognormalFit {
    let logs: Vec<f64> = ecdf.voltages().iter().map(|v| v.ln()).collect();
    let mu = mean(&logs);
    let dev: Vec<f64> = logs.iter().map(|l| (l - mu).powi(2)).collect();
    let sigma = mean(&dev).sqrt();
    let degenerate = ecdf.is_constant() || sigma == 0.0;
    let params = LognormalParams::new(mu, if degenerate { 1e-12 } else { sigma }).expect("finite log moments");
    LognormalFit {
        params,
        error: ecdf.fit_error(|x| lognormal_cdf(x, &params).unwrap_or(0.0)),
        degenerate,
    }
}

/// Method-of-moments K (dB) from power ratios: solves
/// `var(P)/mean(P)² = (1 + 2K)/(1 + K)²`. Returns −∞ when the spread is at or
/// beyond the Rayleigh value.
pub fn moment_k_db(samples: &FadingSampleSet) -> f64 {
    let m = mean(&samples.samples);
    let dev: Vec<f64> = samples.samples.iter().map(|p| (p - m).powi(2)).collect();
    let gamma = mean(&dev) / (m * m);
    if gamma >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if gamma == 0.0 {
        return f64::INFINITY;
    }
    let k = ((1.0 - gamma) + (1.0 - gamma).sqrt()) / gamma;
    10.0 * k.log10()
}

/// The 91 levels 0.05, 0.06, ..., 0.95 at which bracketing is judged.
pub fn quantile_levels() -> Vec<f64> {
    (5..=95).map(|i| i as f64 / 100.0).collect()
}

/// How far the empirical quantiles stray outside the band between two Rician CDFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketCheck {
    pub k_low_db: f64,
    pub k_high_db: f64,
    pub levels: Vec<f64>,
    /// Vertical distance of each level outside the band; 0 when inside.
    pub violations: Vec<f64>,
}

impl BracketCheck {
    pub fn max_violation(&self) -> f64 {
        self.violations.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Number of levels outside the band by more than `tolerance`.
    pub fn count_above(&self, tolerance: f64) -> usize {
        self.violations.iter().filter(|&&v| v > tolerance).count()
    }

    pub fn fraction_above(&self, tolerance: f64) -> f64 {
        self.count_above(tolerance) as f64 / self.levels.len() as f64
    }
}

fn band_violation(p: f64, f_a: f64, f_b: f64) -> f64 {
    (f_a.min(f_b) - p).max(p - f_a.max(f_b)).max(0.0)
}

fn model_at_quantiles(ecdf: &EmpiricalCdf, k_db: f64, xs: &[f64]) -> Vec<f64> {
    let cdf = RicianCdf::new(&rician_at(k_db, ecdf.mean_square()));
    xs.iter().map(|&x| cdf.eval(x)).collect()
}

/// Compares the empirical CDF with the Rician laws at `k_low_db` and
/// `k_high_db`, both scaled to the sample mean square.
pub fn bracket_check(samples: &FadingSampleSet, k_low_db: f64, k_high_db: f64) -> Result<BracketCheck, AnalysisError> {
    let ecdf = EmpiricalCdf::new(samples)?;
    Ok(bracket_check_ecdf(&ecdf, k_low_db, k_high_db))
}

pub(crate) fn bracket_check_ecdf(ecdf: &EmpiricalCdf, k_low_db: f64, k_high_db: f64) -> BracketCheck {
    let levels = quantile_levels();
    let xs: Vec<f64> = levels.iter().map(|&p| ecdf.quantile(p)).collect();
    let lo = model_at_quantiles(ecdf, k_low_db, &xs);
    let hi = model_at_quantiles(ecdf, k_high_db, &xs);
    let violations = levels
        .iter()
        .enumerate()
        .map(|(i, &p)| band_violation(p, lo[i], hi[i]))
        .collect();
    BracketCheck {
        k_low_db,
        k_high_db,
        levels,
        violations,
    }
}

/// Integer-dB Rician pair bracketing the empirical CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingK {
    pub k_low_db: i32,
    pub k_high_db: i32,
    /// False when no pair brackets within tolerance and the tightest pair is reported instead.
    pub exact: bool,
    pub max_violation: f64,
}

/// Narrowest integer-dB pair whose CDFs contain every empirical quantile in
/// [0.05, 0.95] to within `tolerance`. Ties prefer the smaller excursion,
/// then the lower pair. If no pair qualifies, the pair with the smallest
/// worst-case excursion is returned with `exact = false`.
pub fn bounding_k(samples: &FadingSampleSet, tolerance: f64) -> Result<BoundingK, AnalysisError> {
    Ok(bounding_k_ecdf(&EmpiricalCdf::new(samples)?, tolerance))
}

pub(crate) fn bounding_k_ecdf(ecdf: &EmpiricalCdf, tolerance: f64) -> BoundingK {
    let levels = quantile_levels();
    let xs: Vec<f64> = levels.iter().map(|&p| ecdf.quantile(p)).collect();
    let ks: Vec<i32> = BOUND_K_DB.collect();
    let table: Vec<Vec<f64>> = ks.par_iter().map(|&k| model_at_quantiles(ecdf, k as f64, &xs)).collect();

    let mut exact: Option<(i32, i32, f64)> = None;
    let mut tightest: Option<(i32, i32, f64)> = None;
    for i in 0..ks.len() {
        for j in i..ks.len() {
            let worst = levels
                .iter()
                .enumerate()
                .map(|(q, &p)| band_violation(p, table[i][q], table[j][q]))
                .fold(0.0, f64::max);
            let cand = (ks[i], ks[j], worst);
            let width = |c: &(i32, i32, f64)| c.1 - c.0;
            if worst <= tolerance {
                let better = match &exact {
                    None => true,
                    Some(e) => width(&cand) < width(e) || (width(&cand) == width(e) && worst < e.2),
                };
                if better {
                    exact = Some(cand);
                }
            }
            let better = match &tightest {
                None => true,
                Some(t) => worst < t.2 || (worst == t.2 && width(&cand) < width(t)),
            };
            if better {
                tightest = Some(cand);
            }
        }
    }
    let (k_low_db, k_high_db, max_violation, is_exact) = match (exact, tightest) {
        (Some(e), _) => (e.0, e.1, e.2, true),
        (None, Some(t)) => (t.0, t.1, t.2, false),
        (None, None) => unreachable!("candidate list is never empty"),
    };
    BoundingK {
        k_low_db,
        k_high_db,
        exact: is_exact,
        max_violation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_samples: usize,
    pub rician: RicianFit,
    pub rayleigh: RayleighFit,
    pub lognormal: LognormalFit,
    pub best: Family,
    pub bounding_k: BoundingK,
}

impl FitReport {
    pub fn error_of(&self, family: Family) -> f64 {
        match family {
            Family::Rician => self.rician.error,
            Family::Rayleigh => self.rayleigh.error,
            Family::Lognormal => self.lognormal.error,
        }
    }
}

/// Runs all three fitters and the bounding-pair search.
pub fn build_fit_report(samples: &FadingSampleSet, bracket_tolerance: f64) -> Result<FitReport, AnalysisError> {
    let ecdf = EmpiricalCdf::new(samples)?;
    let rician = fit_rician_ecdf(&ecdf);
    let rayleigh = fit_rayleigh_ecdf(&ecdf);
    let lognormal = fit_lognormal_ecdf(&ecdf);
    let mut best = Family::Rician;
    for (family, err) in [(Family::Rayleigh, rayleigh.error), (Family::Lognormal, lognormal.error)] {
        let current = match best {
            Family::Rician => rician.error,
            Family::Rayleigh => rayleigh.error,
            Family::Lognormal => lognormal.error,
        };
        if err < current {
            best = family;
        }
    }
    Ok(FitReport {
        n_samples: ecdf.len(),
        rician,
        rayleigh,
        lognormal,
        best,
        bounding_k: bounding_k_ecdf(&ecdf, bracket_tolerance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rician_draws(k_db: f64, n: usize, seed: u64) -> FadingSampleSet {
        let k = 10f64.powf(k_db / 10.0);
        let a = (k / (k + 1.0)).sqrt();
        let s = (0.5 / (k + 1.0)).sqrt();
        let mut r = rng::stream(seed);
        let p = (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut r);
                let y: f64 = StandardNormal.sample(&mut r);
                (a + s * x).powi(2) + (s * y).powi(2)
            })
            .collect();
        FadingSampleSet::from_power_ratios(p).unwrap()
    }

    #[test]
    fn too_few_samples() {
        let s = FadingSampleSet::from_power_ratios(vec![1.0; 99]).unwrap();
        assert!(matches!(fit_rician(&s), Err(AnalysisError::InsufficientData(_))));
    }

    #[test]
    fn constant_samples_saturate() {
        let s = FadingSampleSet::from_power_ratios(vec![1.0; 200]).unwrap();
        let r = fit_rician(&s).unwrap();
        assert_eq!(r.k_db, 25.0);
        assert!(r.degenerate);
        let l = fit_lognormal(&s).unwrap();
        assert!(l.degenerate);
    }

    #[test]
    fn rayleigh_sigma_from_mean_square() {
        let s = FadingSampleSet::from_power_ratios((1..=200).map(|i| if i % 2 == 0 { 0.5 } else { 1.5 }).collect()).unwrap();
        let f = fit_rayleigh(&s).unwrap();
        assert!((f.params.sigma_n() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn recovers_k_ten() {
        let f = fit_rician(&rician_draws(10.0, 100_000, 3)).unwrap();
        assert!((f.k_db - 10.0).abs() <= 0.5, "{}", f.k_db);
        assert!(!f.degenerate);
    }

    #[test]
    fn knot_interpolation_matches_direct_evaluation() {
        let s = rician_draws(8.0, 50_000, 4);
        let ecdf = EmpiricalCdf::new(&s).unwrap();
        let cdf = RicianCdf::new(&rician_at(8.0, ecdf.mean_square()));
        let approx = ecdf.fit_error(|x| cdf.eval(x));
        let direct = mean(
            &ecdf
                .voltages()
                .iter()
                .enumerate()
                .map(|(i, &x)| (cdf.eval(x) - ecdf.level(i)).powi(2))
                .collect::<Vec<_>>(),
        );
        assert!((approx - direct).abs() < 1e-3 * direct.max(1e-9), "{approx} vs {direct}");
    }

    #[test]
    fn quantile_interpolates() {
        let e = EmpiricalCdf::from_voltages((1..=101).map(|i| i as f64).collect()).unwrap();
        assert_eq!(e.quantile(0.0), 1.0);
        assert_eq!(e.quantile(0.5), 51.0);
        assert_eq!(e.quantile(1.0), 101.0);
        assert!((e.quantile(0.055) - 6.5).abs() < 1e-12);
    }

    #[test]
    fn single_k_is_bracketed_near_itself() {
        let s = rician_draws(12.0, 100_000, 5);
        let b = bounding_k(&s, 0.005).unwrap();
        assert!(b.exact);
        assert!(b.k_low_db <= 12 && b.k_high_db >= 12, "{b:?}");
        assert!(b.k_high_db - b.k_low_db <= 2, "{b:?}");
    }

    #[test]
    fn moment_estimate() {
        let k = moment_k_db(&rician_draws(12.0, 200_000, 6));
        assert!((k - 12.0).abs() < 0.3, "{k}");
        let g = (1.0 + 2.0 * 10.0) / 121.0;
        // exact inversion of the moment relation at K = 10 (linear)
        let k10 = ((1.0 - g) + (1.0f64 - g).sqrt()) / g;
        assert!((k10 - 10.0).abs() < 1e-12);
        assert_eq!(moment_k_db(&FadingSampleSet::from_power_ratios(vec![1.0; 10]).unwrap()), f64::INFINITY);
    }

    #[test]
    fn band_violation_cases() {
        assert_eq!(band_violation(0.5, 0.4, 0.6), 0.0);
        assert_eq!(band_violation(0.5, 0.6, 0.4), 0.0);
        assert!((band_violation(0.5, 0.55, 0.7) - 0.05).abs() < 1e-15);
        assert!((band_violation(0.5, 0.3, 0.45) - 0.05).abs() < 1e-15);
    }
}
