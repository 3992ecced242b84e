use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    /// norm ~ C (1+t)^{-p}
    Power,
    /// norm ~ C e^{-r t}
    Exponential,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: FitModel,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// p for the power model, r for the exponential one; positive means decay.
    pub fitted_exponent: f64,
    pub prefactor: f64,
    pub fit_window: (f64, f64),
    pub r_squared: f64,
}

/// Minimum ratio (1+t_max)/(1+t_min) for a power fit.
pub const MIN_POWER_SPAN: f64 = 2.0;
pub const MIN_SAMPLES: usize = 8;

/// Least squares of log(norm) against log(1+t) or t, restricted to the window.
pub fn decay_fit(times: &[f64], norms: &[f64], model: FitModel, window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != norms.len() {
        return Err(Error::InvalidParams(format!(
            "{} times but {} norms",
            times.len(),
            norms.len()
        )));
    }
    let (lo, hi) = window;
    let (ts, ns): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(norms)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, n)| (*t, *n))
        .unzip();
    if ts.len() < MIN_SAMPLES {
        return Err(Error::DegenerateFit(format!(
            "{} samples in [{lo}, {hi}], need {MIN_SAMPLES}",
            ts.len()
        )));
    }
    if let Some(bad) = ns.iter().find(|n| !(**n > 0.0) || !n.is_finite()) {
        return Err(Error::DegenerateFit(format!("non-positive norm {bad}")));
    }
    let t_min = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let xs: Vec<f64> = match model {
        FitModel::Power => {
            if (1.0 + t_max) / (1.0 + t_min) < MIN_POWER_SPAN {
                return Err(Error::DegenerateFit(format!(
                    "window [{t_min}, {t_max}] too short for a power fit"
                )));
            }
            ts.iter().map(|t| (1.0 + t).ln()).collect()
        }
        FitModel::Exponential => {
            if t_max <= t_min {
                return Err(Error::DegenerateFit("all samples at one time".into()));
            }
            ts.clone()
        }
    };
    let ys: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        model,
        times: ts,
        norms: ns,
        fitted_exponent: -slope,
        prefactor: intercept.exp(),
        fit_window: (t_min, t_max),
        r_squared,
    })
}
