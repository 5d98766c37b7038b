//! Rayleigh, Rician, and lognormal envelope densities and their CDFs.
//!
//! All three describe the voltage (envelope) amplitude of a path. The Rician
//! density is evaluated in the log domain so large `A·x/σ²` arguments do not
//! overflow `I₀`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::bessel::ln_bessel_i0;
use crate::error::{ChannelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighParams {
    sigma_n: f64,
}

impl RayleighParams {
    pub fn new(sigma_n: f64) -> Result<Self> {
        if !(sigma_n > 0.0 && sigma_n.is_finite()) {
            return Err(ChannelError::domain("sigma_n", sigma_n, "> 0"));
        }
        Ok(RayleighParams { sigma_n })
    }

    /// Rayleigh law whose mean-square `2σ²` equals `mean_square`.
    pub fn from_mean_square(mean_square: f64) -> Result<Self> {
        Self::new((mean_square / 2.0).sqrt())
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }
}

/// Dominant amplitude `A` plus scattered-component deviation `σ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicianParams {
    dominant_amplitude: f64,
    sigma_n: f64,
}

impl RicianParams {
    pub fn new(dominant_amplitude: f64, sigma_n: f64) -> Result<Self> {
        if !(dominant_amplitude >= 0.0 && dominant_amplitude.is_finite()) {
            return Err(ChannelError::domain(
                "dominant_amplitude",
                dominant_amplitude,
                ">= 0",
            ));
        }
        if !(sigma_n > 0.0 && sigma_n.is_finite()) {
            return Err(ChannelError::domain("sigma_n", sigma_n, "> 0"));
        }
        Ok(RicianParams {
            dominant_amplitude,
            sigma_n,
        })
    }

    /// Parameters realizing linear factor `k` at total mean-square power
    /// `A² + 2σ² = mean_square`.
    pub fn from_k_linear(k: f64, mean_square: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(ChannelError::domain("K", k, "finite and >= 0"));
        }
        if !(mean_square > 0.0 && mean_square.is_finite()) {
            return Err(ChannelError::domain("mean_square", mean_square, "> 0"));
        }
        Self::new(
            (mean_square * k / (k + 1.0)).sqrt(),
            (mean_square / (2.0 * (k + 1.0))).sqrt(),
        )
    }

    pub fn from_k_db(k_db: f64, mean_square: f64) -> Result<Self> {
        Self::from_k_linear(10f64.powf(k_db / 10.0), mean_square)
    }

    pub fn dominant_amplitude(&self) -> f64 {
        self.dominant_amplitude
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    /// `K = A² / (2σ_n²)`.
    pub fn k_linear(&self) -> f64 {
        let a = self.dominant_amplitude;
        a * a / (2.0 * self.sigma_n * self.sigma_n)
    }

    pub fn k_db(&self) -> f64 {
        rician_k_db(self)
    }

    /// `A = 0`: the law collapses to Rayleigh and K has no finite dB value.
    pub fn is_degenerate(&self) -> bool {
        self.dominant_amplitude == 0.0
    }

    pub fn mean_square(&self) -> f64 {
        self.dominant_amplitude.powi(2) + 2.0 * self.sigma_n.powi(2)
    }
}

/// Log-domain mean `x̄` and deviation `σ` of a lognormal envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalParams {
    mean_log: f64,
    sigma_log: f64,
}

impl LognormalParams {
    pub fn new(mean_log: f64, sigma_log: f64) -> Result<Self> {
        if !mean_log.is_finite() {
            return Err(ChannelError::domain("mean_log", mean_log, "finite"));
        }
        if !(sigma_log > 0.0 && sigma_log.is_finite()) {
            return Err(ChannelError::domain("sigma_log", sigma_log, "> 0"));
        }
        Ok(LognormalParams {
            mean_log,
            sigma_log,
        })
    }

    pub fn mean_log(&self) -> f64 {
        self.mean_log
    }

    pub fn sigma_log(&self) -> f64 {
        self.sigma_log
    }
}

fn check_nonnegative(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ChannelError::domain("x", x, "finite and >= 0"))
    }
}

/// `(x/σ²)·exp(−x²/2σ²)`.
pub fn rayleigh_pdf(x: f64, p: &RayleighParams) -> Result<f64> {
    check_nonnegative(x)?;
    let s2 = p.sigma_n * p.sigma_n;
    Ok(x / s2 * (-x * x / (2.0 * s2)).exp())
}

pub fn rayleigh_cdf(x: f64, p: &RayleighParams) -> Result<f64> {
    check_nonnegative(x)?;
    let s2 = p.sigma_n * p.sigma_n;
    Ok(-(-x * x / (2.0 * s2)).exp_m1())
}

/// `(x/σ²)·exp(−(x²+A²)/2σ²)·I₀(Ax/σ²)`, evaluated in the log domain.
pub fn rician_pdf(x: f64, p: &RicianParams) -> Result<f64> {
    check_nonnegative(x)?;
    if p.dominant_amplitude == 0.0 {
        return rayleigh_pdf(x, &RayleighParams::new(p.sigma_n)?);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let a = p.dominant_amplitude;
    let s2 = p.sigma_n * p.sigma_n;
    let ln = x.ln() - s2.ln() - (x * x + a * a) / (2.0 * s2) + ln_bessel_i0(a * x / s2);
    Ok(ln.exp())
}

/// Rician CDF through the Poisson mixture of central chi-square laws:
/// `F(x) = Σ_j Pois(j; K) · P(j + 1, x²/2σ²)` with `P` the regularized
/// lower incomplete gamma function.
pub fn rician_cdf(x: f64, p: &RicianParams) -> Result<f64> {
    check_nonnegative(x)?;
    Ok(RicianCdf::new(p).eval(x))
}

/// [`rician_cdf`] with the Poisson weights precomputed, for evaluating one
/// law at many points.
#[derive(Debug, Clone)]
pub struct RicianCdf {
    two_s2: f64,
    k: f64,
    j_lo: u64,
    weights: Vec<f64>,
}

impl RicianCdf {
    pub fn new(p: &RicianParams) -> Self {
        let k = p.k_linear();
        let spread = 12.0 * k.sqrt() + 12.0;
        let j_lo = (k - spread).floor().max(0.0) as u64;
        let j_hi = (k + spread).ceil() as u64;
        let ln_k = k.ln();
        let weights = if k == 0.0 {
            Vec::new()
        } else {
            (j_lo..=j_hi)
                .map(|j| {
                    let jf = j as f64;
                    (-k + jf * ln_k - ln_gamma(jf + 1.0)).exp()
                })
                .collect()
        };
        RicianCdf {
            two_s2: 2.0 * p.sigma_n * p.sigma_n,
            k,
            j_lo,
            weights,
        }
    }

    /// CDF at `x`; negative or NaN inputs give 0.
    pub fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let y = x * x / self.two_s2;
        if y == 0.0 {
            return 0.0;
        }
        if self.k == 0.0 {
            return -(-y).exp_m1();
        }
        let ln_y = y.ln();
        let f = if y < self.k + 1.0 { self.lower(y, ln_y) } else { 1.0 - self.upper(y, ln_y) };
        f.clamp(0.0, 1.0)
    }

    /// `Σ w_j P(j + 1, y)` by the downward recurrence `P(a, y) = P(a + 1, y) + t(a)`,
    /// `t(a) = y^a e^{−y} / Γ(a + 1)`; every step adds, so lower-tail values keep
    /// their relative accuracy.
    fn lower(&self, y: f64, ln_y: f64) -> f64 {
        let j_hi = self.j_lo + self.weights.len() as u64 - 1;
        let mut a = j_hi as f64;
        let mut reg = gamma_lr(a + 1.0, y);
        let mut ln_t = a * ln_y - y - ln_gamma(a + 1.0);
        let mut t = if ln_t > -700.0 { ln_t.exp() } else { 0.0 };
        let mut sum = 0.0;
        for &w in self.weights.iter().rev() {
            sum += w * reg;
            reg += t;
            if t == 0.0 {
                ln_t += a.ln() - ln_y;
                if ln_t > -700.0 {
                    t = ln_t.exp();
                }
            } else {
                t *= a / y;
            }
            a -= 1.0;
        }
        sum
    }

    /// `Σ w_j Q(j + 1, y)` by the upward recurrence `Q(a + 1, y) = Q(a, y) + t(a)`.
    fn upper(&self, y: f64, ln_y: f64) -> f64 {
        let mut a = self.j_lo as f64 + 1.0;
        let mut reg = gamma_ur(a, y);
        let mut ln_t = a * ln_y - y - ln_gamma(a + 1.0);
        let mut t = if ln_t > -700.0 { ln_t.exp() } else { 0.0 };
        let mut sum = 0.0;
        for &w in &self.weights {
            sum += w * reg;
            reg += t;
            a += 1.0;
            if t == 0.0 {
                ln_t += ln_y - a.ln();
                if ln_t > -700.0 {
                    t = ln_t.exp();
                }
            } else {
                t *= y / a;
            }
        }
        sum
    }

}

/// `10·log10(A²/2σ_n²)`; `A = 0` yields `−∞` (see [`RicianParams::is_degenerate`]).
pub fn rician_k_db(p: &RicianParams) -> f64 {
    if p.is_degenerate() {
        return f64::NEG_INFINITY;
    }
    10.0 * p.k_linear().log10()
}

/// `(1/(√(2π)·σ·x))·exp(−(ln x − x̄)²/2σ²)`.
pub fn lognormal_pdf(x: f64, p: &LognormalParams) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(ChannelError::domain("x", x, "finite and > 0"));
    }
    let z = (x.ln() - p.mean_log) / p.sigma_log;
    Ok((-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * p.sigma_log * x))
}

pub fn lognormal_cdf(x: f64, p: &LognormalParams) -> Result<f64> {
    check_nonnegative(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let z = (x.ln() - p.mean_log) / p.sigma_log;
    Ok(0.5 * erfc(-z / std::f64::consts::SQRT_2))
}
