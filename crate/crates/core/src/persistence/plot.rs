use std::path::Path;

use super::{fmt_f64, write_text};
use crate::analysis::{AutocorrEstimate, EmpiricalCdf};
use crate::channel::{
    lognormal_cdf, rayleigh_cdf, AutocorrModel, LognormalParams, RayleighParams, RicianCdf, RicianParams,
};
use crate::error::PersistenceError;

/// A model sampled on a caller-chosen grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCurve {
    pub x_label: String,
    pub y_label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl ModelCurve {
    pub fn new(x_label: &str, y_label: &str, xs: &[f64], f: impl Fn(f64) -> f64) -> Self {
        ModelCurve {
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            xs: xs.to_vec(),
            ys: xs.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn rician_cdf(params: &RicianParams, grid: &[f64]) -> Self {
        let cdf = RicianCdf::new(params);
        Self::new("voltage", "cdf", grid, |x| cdf.eval(x))
    }

    pub fn rayleigh_cdf(params: &RayleighParams, grid: &[f64]) -> Self {
        Self::new("voltage", "cdf", grid, |x| rayleigh_cdf(x.max(0.0), params).unwrap_or(0.0))
    }

    pub fn lognormal_cdf(params: &LognormalParams, grid: &[f64]) -> Self {
        Self::new("voltage", "cdf", grid, |x| lognormal_cdf(x.max(0.0), params).unwrap_or(0.0))
    }

    pub fn autocorr(model: &AutocorrModel, grid_wavelengths: &[f64]) -> Self {
        Self::new("lag_wavelengths", "coefficient", grid_wavelengths, |x| model.eval(x))
    }
}

/// Anything that can be written as a two-column plot file.
#[derive(Debug, Clone, Copy)]
pub enum PlotData<'a> {
    Autocorr(&'a AutocorrEstimate),
    Ecdf(&'a EmpiricalCdf),
    Curve(&'a ModelCurve),
}

/// Missing autocorrelation coefficients are written as `NA`.
pub fn format_plot_csv(data: PlotData<'_>) -> Result<String, PersistenceError> {
    let mut out = String::new();
    let mut row = |x: f64, y: Option<f64>| {
        out.push_str(&fmt_f64(x));
        out.push(',');
        out.push_str(&y.map_or_else(|| "NA".to_string(), fmt_f64));
        out.push('\n');
    };
    let header = match data {
        PlotData::Autocorr(e) => {
            if e.is_empty() {
                return Err(PersistenceError::Plot("autocorrelation estimate is empty".into()));
            }
            for (&x, &y) in e.lags_wavelengths.iter().zip(&e.coefficients) {
                row(x, y);
            }
            "lag_wavelengths,coefficient".to_string()
        }
        PlotData::Ecdf(c) => {
            if c.is_empty() {
                return Err(PersistenceError::Plot("empirical CDF is empty".into()));
            }
            for (i, &x) in c.voltages().iter().enumerate() {
                row(x, Some(c.level(i)));
            }
            "voltage,cdf".to_string()
        }
        PlotData::Curve(m) => {
            if m.xs.is_empty() || m.xs.len() != m.ys.len() {
                return Err(PersistenceError::Plot(format!(
                    "curve has {} x values and {} y values",
                    m.xs.len(),
                    m.ys.len()
                )));
            }
            for (&x, &y) in m.xs.iter().zip(&m.ys) {
                row(x, Some(y));
            }
            format!("{},{}", m.x_label, m.y_label)
        }
    };
    Ok(format!("{header}\n{out}"))
}

pub fn export_plot_csv(data: PlotData<'_>, path: &Path) -> Result<(), PersistenceError> {
    write_text(path, &format_plot_csv(data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autocorr_rows() {
        let e = AutocorrEstimate::new(vec![0.0, 0.5, 1.0], vec![Some(1.0), Some(0.3), None], 1, 1).unwrap();
        let text = format_plot_csv(PlotData::Autocorr(&e)).unwrap();
        assert_eq!(text, "lag_wavelengths,coefficient\n0.0,1.0\n0.5,0.3\n1.0,NA\n");
    }

    #[test]
    fn rician_curve_is_monotone() {
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let curve = ModelCurve::rician_cdf(&RicianParams::from_k_db(9.0, 1.0).unwrap(), &grid);
        let text = format_plot_csv(PlotData::Curve(&curve)).unwrap();
        let ys: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(ys.len(), 200);
        assert!(ys.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn los_model_starts_at_a() {
        let m = AutocorrModel::new(0.99, 2.05, 0.0).unwrap();
        let curve = ModelCurve::autocorr(&m, &[0.0, 0.5]);
        let text = format_plot_csv(PlotData::Curve(&curve)).unwrap();
        assert_eq!(text.lines().nth(1), Some("0.0,0.99"));
    }

    #[test]
    fn empty_curve_rejected() {
        let curve = ModelCurve::new("x", "y", &[], |x| x);
        assert!(format_plot_csv(PlotData::Curve(&curve)).is_err());
    }
}
