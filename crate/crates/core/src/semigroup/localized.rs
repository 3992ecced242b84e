use super::{decay_fit, CutoffProfile, DecayFit, Decomposer, FitModel, PerturbationField};
use crate::blochop::CriticalCurve;
use crate::error::{Error, Result};
use crate::fourier;
use crate::transforms::{window_leak, FieldSample};
use crate::wave::PeriodicWave;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Relative edge magnitude above which a windowed field no longer stands in for a localized one.
pub const LEAK_TOL: f64 = 1e-10;

/// Floor on the start of the localized rate fits.
pub const LOCALIZED_T_MIN: f64 = 5.0;

/// Fits start once the cutoff plateau |xi| < xi1/2 has diffused: t >= 1/(d (xi1/2)^2).
pub fn localized_fit_start(d: f64, xi1: f64) -> f64 {
    LOCALIZED_T_MIN.max(1.0 / (d * 0.25 * xi1 * xi1))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizedSample {
    pub t: f64,
    pub norm_full: f64,
    pub norm_minus_p0: f64,
    pub norm_phase: f64,
    pub norm_residual: f64,
    pub closure_residual: f64,
    pub leak: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizedRun {
    pub n_win: usize,
    pub norm_v_l1: f64,
    pub norm_v_l2: f64,
    pub fit_t_min: f64,
    pub samples: Vec<LocalizedSample>,
    /// max over the cutoff support of rho |<Phi~_xi, v(xi)>| / ||v||_{L1}
    pub coefficient_bound: f64,
    #[serde(skip)]
    pub phase_scalars: Vec<FieldSample>,
    #[serde(skip)]
    pub initial_phase: Option<FieldSample>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WhithamComparison {
    pub a: f64,
    pub d: f64,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub fit: Option<DecayFit>,
}

/// Largest of the two component leaks, measured on the pointwise modulus.
pub fn field_leak(v: &PerturbationField) -> f64 {
    let modulus = FieldSample {
        values: v
            .r
            .values
            .iter()
            .zip(&v.i.values)
            .map(|(a, b)| C64::new((a.norm_sqr() + b.norm_sqr()).sqrt(), 0.0))
            .collect(),
        ..v.r.clone()
    };
    window_leak(&modulus)
}

impl LocalizedRun {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn fit_window(&self) -> (f64, f64) {
        (self.fit_t_min, self.samples.last().map_or(0.0, |s| s.t))
    }

    fn fit_of(&self, pick: impl Fn(&LocalizedSample) -> f64) -> Result<DecayFit> {
        let norms: Vec<f64> = self.samples.iter().map(pick).collect();
        decay_fit(&self.times(), &norms, FitModel::Power, self.fit_window())
    }

    /// Exponent of ||(1 - P_0) e^{At} v||.
    pub fn minus_p0_fit(&self) -> Result<DecayFit> {
        self.fit_of(|s| s.norm_minus_p0)
    }

    /// Exponent of ||e^{At} v - phi' gamma||.
    pub fn residual_fit(&self) -> Result<DecayFit> {
        self.fit_of(|s| s.norm_residual)
    }

    pub fn phase_fit(&self) -> Result<DecayFit> {
        self.fit_of(|s| s.norm_phase)
    }
}

fn run(
    wave: &PeriodicWave,
    curve: &CriticalCurve,
    cutoff: CutoffProfile,
    v: &PerturbationField,
    times: &[f64],
    stop_at_leak: bool,
) -> Result<LocalizedRun> {
    let leak0 = field_leak(v);
    if leak0 > LEAK_TOL {
        return Err(Error::WindowLeak { leak: leak0, t: 0.0 });
    }
    let dec = Decomposer::new(wave, curve, cutoff, v.n(), curve.m)?;
    let prepared = dec.prepare(v)?;
    let period = dec.period();
    let l1 = v.norm_l1();
    let coefficient_bound = dec
        .modes
        .iter()
        .zip(&dec.rho)
        .zip(&prepared.slices)
        .filter_map(|((md, r), w)| md.as_ref().map(|md| r * crate::blochop::inner(&md.phi_tilde, w, period).norm()))
        .fold(0.0, f64::max)
        / l1;
    let mut samples = Vec::with_capacity(times.len());
    let mut phase_scalars = Vec::with_capacity(times.len());
    for &t in times {
        if t < 0.0 {
            return Err(Error::InvalidParams(format!("negative time {t}")));
        }
        let rep = dec.decompose(&prepared, t)?;
        let leak = field_leak(&rep.full);
        if leak > LEAK_TOL {
            if stop_at_leak {
                break;
            }
            return Err(Error::WindowLeak { leak, t });
        }
        let residual = rep.parts.sc.add(&rep.parts.slf).add(&rep.parts.shf);
        samples.push(LocalizedSample {
            t,
            norm_full: rep.norms["full"],
            norm_minus_p0: rep.norms["minus_p0"],
            norm_phase: rep.norms["phase"],
            norm_residual: residual.norm_l2(),
            closure_residual: rep.closure_residual,
            leak,
        });
        phase_scalars.push(dec.phase_scalar(&prepared, t)?);
    }
    Ok(LocalizedRun {
        n_win: v.n(),
        norm_v_l1: l1,
        norm_v_l2: v.norm_l2(),
        fit_t_min: localized_fit_start(curve.d, cutoff.xi1),
        samples,
        coefficient_bound,
        initial_phase: Some(dec.phase_scalar(&prepared, 0.0)?),
        phase_scalars,
    })
}

/// Decomposition of e^{At} v on the window [0, N_win T), with v and every evolved
/// field required to vanish at the window edge.
pub fn localized_pipeline(
    wave: &PeriodicWave,
    curve: &CriticalCurve,
    cutoff: CutoffProfile,
    v: &PerturbationField,
    times: &[f64],
) -> Result<LocalizedRun> {
    run(wave, curve, cutoff, v, times, false)
}

/// As `localized_pipeline`, but stops at the first time the evolved field reaches the edge.
pub fn localized_pipeline_leak_free(
    wave: &PeriodicWave,
    curve: &CriticalCurve,
    cutoff: CutoffProfile,
    v: &PerturbationField,
    times: &[f64],
) -> Result<LocalizedRun> {
    run(wave, curve, cutoff, v, times, true)
}

/// Exact solution of w_t = a w_x + d w_xx on the window, from w(0) = s0.
pub fn whitham_solution(a: f64, d: f64, s0: &FieldSample, t: f64) -> Result<FieldSample> {
    if !(d > 0.0) {
        return Err(Error::Precondition(format!("diffusion coefficient must be positive, got {d}")));
    }
    let n = s0.n_grid;
    let len = s0.n as f64 * s0.period;
    let mut vals = s0.values.clone();
    fourier::fft_forward(&mut vals);
    for (k, z) in vals.iter_mut().enumerate() {
        let ks = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let zeta = 2.0 * std::f64::consts::PI * ks / len;
        *z *= (C64::new(-d * zeta * zeta, a * zeta) * t).exp() / n as f64;
    }
    fourier::fft_inverse(&mut vals);
    Ok(FieldSample { values: vals, ..s0.clone() })
}

/// ||gamma(t) - w(t)|| over the recorded times, with w evolved from the t = 0 phase field.
pub fn whitham_compare(curve: &CriticalCurve, run: &LocalizedRun) -> Result<WhithamComparison> {
    let s0 = run
        .initial_phase
        .as_ref()
        .ok_or_else(|| Error::Precondition("run carries no initial phase field".into()))?;
    let mut errors = Vec::with_capacity(run.samples.len());
    for (s, gamma) in run.samples.iter().zip(&run.phase_scalars) {
        let w = whitham_solution(curve.a, curve.d, s0, s.t)?;
        let diff = FieldSample {
            values: gamma.values.iter().zip(&w.values).map(|(x, y)| x - y).collect(),
            ..w
        };
        errors.push(diff.norm_l2());
    }
    let times = run.times();
    let fit = decay_fit(&times, &errors, FitModel::Power, run.fit_window()).ok();
    Ok(WhithamComparison {
        a: curve.a,
        d: curve.d,
        times,
        errors,
        fit,
    })
}
