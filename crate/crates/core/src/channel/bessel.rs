//! Modified Bessel function of the first kind, order zero.
//!
//! Power series below [`SERIES_LIMIT`], Hankel asymptotic expansion above.
//! Both branches hold relative error below 1e-10 across the switch point.

use std::f64::consts::PI;

pub const SERIES_LIMIT: f64 = 15.0;

fn series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= sum * 1e-17 {
            return sum;
        }
        k += 1.0;
    }
}

/// `Σ c_k / x^k` of the large-argument expansion, truncated at the smallest term.
fn asymptotic_sum(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0_f64;
    loop {
        let next = term * (2.0 * k - 1.0).powi(2) / (8.0 * k * x);
        if next >= term || next <= sum * 1e-17 {
            return sum;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
}

/// `I₀(x)`. Even in `x`; overflows to `+∞` beyond x ≈ 713.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        series(x)
    } else {
        x.exp() / (2.0 * PI * x).sqrt() * asymptotic_sum(x)
    }
}

/// `ln I₀(x)`, finite for every finite `x`.
pub fn ln_bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        series(x).ln()
    } else {
        x - 0.5 * (2.0 * PI * x).ln() + asymptotic_sum(x).ln()
    }
}
