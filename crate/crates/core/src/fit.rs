//! Least-squares power laws `y ≈ c·x^p` for rate studies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared: f64,
    pub points: usize,
}

impl PowerFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.prefactor * x.powf(self.exponent)
    }
}

/// Fits `log y = log c + p log x`. All inputs must be finite and positive.
pub fn power_law(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    if xs.len() != ys.len() {
        return Err(Error::Config(format!("fit needs paired data, got {} and {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Config("fit needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("power-law fit needs finite positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let resid: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(PowerFit {
        exponent,
        prefactor: intercept.exp(),
        r_squared: if syy == 0.0 { 1.0 } else { 1.0 - resid / syy },
        points: xs.len(),
    })
}

/// Rate of `f(x) → f(0)` from values on a geometric ladder `x_0 > x_1 > …`:
/// fits `|f(x_k) − f(x_{k+1})|` against `x_k`.
pub fn successive_difference_order(xs: &[f64], values: &[f64]) -> Result<PowerFit> {
    if xs.len() != values.len() || xs.len() < 3 {
        return Err(Error::Config("difference fit needs at least three paired points".into()));
    }
    let d: Vec<f64> = values.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    power_law(&xs[..xs.len() - 1], &d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [1.0, 10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.0)).collect();
        let f = power_law(&xs, &ys).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-14);
        assert!((f.prefactor - 3.0).abs() < 1e-13);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!((f.predict(5.0) - 0.6).abs() < 1e-14);
    }

    #[test]
    fn difference_ladder_recovers_order() {
        let xs = [0.4, 0.2, 0.1, 0.05, 0.025];
        let vals: Vec<f64> = xs.iter().map(|x: &f64| 1.0 + 0.7 * x.powi(2)).collect();
        let f = successive_difference_order(&xs, &vals).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_data() {
        assert!(power_law(&[1.0], &[1.0]).is_err());
        assert!(power_law(&[1.0, 2.0], &[1.0, 0.0]).is_err());
        assert!(power_law(&[2.0, 2.0], &[1.0, 3.0]).is_err());
        assert!(power_law(&[1.0, 2.0], &[1.0]).is_err());
    }
}
