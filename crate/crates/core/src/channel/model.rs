use serde::{Deserialize, Serialize};

use crate::error::{ChannelError, Result};

/// Exponential spatial autocorrelation model `f(Δx) = a·e^(−b·Δx) − c`.
///
/// `Δx` is measured in wavelengths, so `b` has units of 1/wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutocorrModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AutocorrModel {
    pub const A_RANGE: (f64, f64) = (0.0, 1.2);
    pub const C_RANGE: (f64, f64) = (-0.5, 0.5);

    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(Self::A_RANGE.0..=Self::A_RANGE.1).contains(&a) {
            return Err(ChannelError::domain("a", a, "[0, 1.2]"));
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(ChannelError::domain("b", b, ">= 0"));
        }
        if !(Self::C_RANGE.0..=Self::C_RANGE.1).contains(&c) {
            return Err(ChannelError::domain("c", c, "[-0.5, 0.5]"));
        }
        Ok(AutocorrModel { a, b, c })
    }

    pub fn eval(&self, dx_wavelengths: f64) -> f64 {
        self.a * (-self.b * dx_wavelengths).exp() - self.c
    }

    /// `f(0) = a − c`.
    pub fn at_origin(&self) -> f64 {
        self.a - self.c
    }

    /// Limit of `f` at infinite separation: `−c` when `b > 0`.
    pub fn asymptote(&self) -> f64 {
        if self.b > 0.0 {
            -self.c
        } else {
            self.at_origin()
        }
    }

    /// First separation, among `lags`, where the model falls below `threshold`.
    pub fn first_lag_below(&self, lags_wavelengths: &[f64], threshold: f64) -> Option<f64> {
        lags_wavelengths
            .iter()
            .copied()
            .find(|&dx| self.eval(dx) < threshold)
    }
}

pub fn autocorr_model_eval(model: &AutocorrModel, dx_wavelengths: f64) -> Result<f64> {
    if !(dx_wavelengths >= 0.0) {
        return Err(ChannelError::domain("dx", dx_wavelengths, ">= 0 wavelengths"));
    }
    Ok(model.eval(dx_wavelengths))
}
