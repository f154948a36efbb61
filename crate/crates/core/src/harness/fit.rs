//! Log–log least-squares rate fits with bootstrap error bars.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub const MIN_FIT_POINTS: usize = 4;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `C ε^p`
    Power,
    /// `C ε^p |log ε|^q` with `q = 1`
    PowerLog,
}

impl FitModel {
    pub fn as_str(self) -> &'static str {
        match self {
            FitModel::Power => "power",
            FitModel::PowerLog => "power_log",
        }
    }

    fn log_exponent(self) -> f64 {
        match self {
            FitModel::Power => 0.0,
            FitModel::PowerLog => 1.0,
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(FitModel::Power),
            "power_log" => Ok(FitModel::PowerLog),
            _ => Err(invalid("model", format!("unknown fit model `{s}` (power, power_log)"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFitResult {
    pub model: FitModel,
    pub exponent: f64,
    pub prefactor: f64,
    pub log_exponent: f64,
    pub r_squared: f64,
    /// log-domain residual per point, in input order
    pub residuals: Vec<f64>,
    /// sum of squared log-domain residuals
    pub residual_sq: f64,
    /// half-width of the central 95% bootstrap interval of the exponent
    pub half_width: f64,
    pub points: usize,
}

struct Line {
    slope: f64,
    intercept: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> Option<Line> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some(Line {
        slope,
        intercept: my - slope * mx,
    })
}

/// Fits `values ≈ C ε^p |log ε|^q` in the log domain; `seed` drives the bootstrap.
pub fn fit_rate(eps: &[f64], values: &[f64], model: FitModel, seed: u64) -> Result<RateFitResult> {
    if eps.len() != values.len() {
        return Err(invalid("values", "length differs from the ε list"));
    }
    if eps.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            available: eps.len(),
            required: MIN_FIT_POINTS,
        });
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("values", "fits need positive ε and positive finite values"));
    }
    let q = model.log_exponent();
    if q != 0.0 && eps.contains(&1.0) {
        return Err(invalid("eps", "power_log needs ε ≠ 1"));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = eps
        .iter()
        .zip(values)
        .map(|(e, v)| v.ln() - q * e.ln().abs().ln())
        .collect();
    let line = least_squares(&x, &y).ok_or_else(|| invalid("eps", "all ε coincide"))?;
    let residuals: Vec<f64> = x
        .iter()
        .zip(&y)
        .map(|(a, b)| b - line.intercept - line.slope * a)
        .collect();
    let residual_sq: f64 = residuals.iter().map(|r| r * r).sum();
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let total: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if total > 0.0 { 1.0 - residual_sq / total } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.len();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let (mut bx, mut by) = (vec![0.0; n], vec![0.0; n]);
    while slopes.len() < BOOTSTRAP_RESAMPLES {
        for k in 0..n {
            let i = rng.gen_range(0..n);
            bx[k] = x[i];
            by[k] = y[i];
        }
        // resamples with a single distinct ε carry no slope
        if let Some(l) = least_squares(&bx, &by) {
            slopes.push(l.slope);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let lo = slopes[(0.025 * BOOTSTRAP_RESAMPLES as f64) as usize];
    let hi = slopes[(0.975 * BOOTSTRAP_RESAMPLES as f64) as usize - 1];

    Ok(RateFitResult {
        model,
        exponent: line.slope,
        prefactor: line.intercept.exp(),
        log_exponent: q,
        r_squared,
        residuals,
        residual_sq,
        half_width: 0.5 * (hi - lo),
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep() -> Vec<f64> {
        (0..10).map(|k| 0.1 * 0.7f64.powi(k)).collect()
    }

    #[test]
    fn exact_power_law() {
        let e = sweep();
        let v: Vec<f64> = e.iter().map(|x| 3.0 * x * x).collect();
        let f = fit_rate(&e, &v, FitModel::Power, 1).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!(f.half_width < 1e-10 && f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn log_model_identified() {
        let e = sweep();
        let v: Vec<f64> = e.iter().map(|x| x * x * x.ln().abs()).collect();
        let pl = fit_rate(&e, &v, FitModel::PowerLog, 1).unwrap();
        let p = fit_rate(&e, &v, FitModel::Power, 1).unwrap();
        assert!(pl.residual_sq < p.residual_sq);
        assert!((pl.exponent - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_short_or_bad_data() {
        assert!(matches!(
            fit_rate(&[0.1, 0.05, 0.02], &[1.0, 2.0, 3.0], FitModel::Power, 0),
            Err(Error::InsufficientData { available: 3, .. })
        ));
        assert!(fit_rate(&[0.1, 0.05, 0.02, 0.01], &[1.0, -2.0, 3.0, 1.0], FitModel::Power, 0).is_err());
        assert!("cubic".parse::<FitModel>().is_err());
    }

    #[test]
    fn bootstrap_is_seeded() {
        let e = sweep();
        let v: Vec<f64> = e
            .iter()
            .enumerate()
            .map(|(i, x)| x * (1.0 + 0.05 * (i as f64).sin()))
            .collect();
        let a = fit_rate(&e, &v, FitModel::Power, 9).unwrap();
        let b = fit_rate(&e, &v, FitModel::Power, 9).unwrap();
        assert_eq!(a.half_width, b.half_width);
        assert!(a.half_width > 0.0);
    }
}
