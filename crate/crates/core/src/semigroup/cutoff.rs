use crate::blochop::CriticalCurve;
use crate::error::{Error, Result};

/// Smooth even cutoff: 1 on |xi| <= xi1/2, 0 on |xi| >= xi1, joined by
/// psi(s)/(psi(s) + psi(1-s)) with psi(s) = exp(-1/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffProfile {
    pub xi1: f64,
}

fn psi(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

impl CutoffProfile {
    pub fn new(xi1: f64) -> Result<Self> {
        if !(xi1 > 0.0) || !xi1.is_finite() {
            return Err(Error::InvalidParams(format!("cutoff radius must be positive, got {xi1}")));
        }
        Ok(CutoffProfile { xi1 })
    }

    /// Widest cutoff admissible for `curve`: its separation radius, capped by the sampled range.
    pub fn for_curve(curve: &CriticalCurve) -> Result<Self> {
        let reach = curve.xi_samples.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        Self::new(curve.xi1.min(reach))
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= 0.5 * self.xi1 {
            1.0
        } else if a >= self.xi1 {
            0.0
        } else {
            let s = (self.xi1 - a) / (0.5 * self.xi1);
            psi(s) / (psi(s) + psi(1.0 - s))
        }
    }
}
