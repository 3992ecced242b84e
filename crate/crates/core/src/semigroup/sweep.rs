use super::{decay_fit, CutoffProfile, DecayFit, Decomposer, FitModel, PerturbationField};
use crate::blochop::{assemble, noncritical_gap, CriticalCurve};
use crate::error::Result;
use crate::linalg;
use crate::transforms::cell_points;
use crate::wave::PeriodicWave;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const FIT_T_MIN: f64 = 5.0;
pub const FIT_C: f64 = 0.5;

/// Power-law fit window [5, 0.5 N^2 T^2 / (4 pi^2 d)].
pub fn fit_window(n: usize, period: f64, d: f64) -> (f64, f64) {
    (FIT_T_MIN, crossover_time(n, period, d))
}

pub fn crossover_time(n: usize, period: f64, d: f64) -> f64 {
    let nt = n as f64 * period;
    FIT_C * nt * nt / (4.0 * PI * PI * d)
}

/// One row of the decay table; the column order is the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub norm_full: f64,
    pub norm_minus_p0: f64,
    pub norm_phase: f64,
    pub norm_sc: f64,
    pub norm_slf: f64,
    pub norm_shf: f64,
    pub closure_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub norm_f: f64,
    /// sup_t (1+t)^{1/4} ||(1-P_0) e^{At} f|| / ||f||_{L1 cap L2}
    pub prefactor: f64,
    /// sup_t (1+t)^{1/4} ||phi' s_p(t) f|| / ||f||_{L1 cap L2}
    pub phase_prefactor: f64,
    pub fit_window: (f64, f64),
    pub residual_fit: Option<DecayFit>,
    pub late_window: (f64, f64),
    pub late_fit: Option<DecayFit>,
    /// -max Re of the lattice spectrum with the zero eigenvalue removed.
    pub lattice_rate: f64,
    /// min{eta, d (2 pi / NT)^2} with eta the non-critical gap.
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformSweep {
    /// Gap of the spectrum with the critical branch removed.
    pub eta: f64,
    /// Gap of the whole spectrum outside the cutoff plateau |xi| < xi1/2.
    pub eta_cutoff: f64,
    pub d: f64,
    pub rows: Vec<SweepRow>,
    /// ||e^{At} f - phi' gamma_N|| per row.
    pub residual_norms: Vec<f64>,
    pub summaries: Vec<SweepSummary>,
}

impl UniformSweep {
    pub fn prefactor_ratio(&self) -> f64 {
        let p: Vec<f64> = self.summaries.iter().map(|s| s.prefactor).collect();
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    pub fn summary(&self, n: usize) -> Option<&SweepSummary> {
        self.summaries.iter().find(|s| s.n == n)
    }
}

/// Single real Gaussian bump of width T/4 centred in [0, NT), normalized in L1 cap L2.
pub fn gaussian_bump(n: usize, period: f64, n_grid: usize) -> Result<PerturbationField> {
    let len = n as f64 * period;
    let c = 0.5 * len;
    let w = 0.25 * period;
    let f = PerturbationField::from_fn(
        n,
        period,
        n_grid,
        |x| (-(x - c).powi(2) / (2.0 * w * w)).exp(),
        |x| 0.5 * (-(x - c).powi(2) / (2.0 * w * w)).exp(),
    )?;
    let s = f.norm_l1_l2();
    Ok(f.scaled((1.0 / s).into()))
}

/// Off-critical gap d(xi1/2)^2-type bound: the secondary eigenvalue at xi = 0 together
/// with the whole spectrum on |xi| >= xi1/2, scanned on `n_scan` points.
pub fn off_critical_gap(wave: &PeriodicWave, m: usize, xi1: f64, n_scan: usize) -> Result<f64> {
    let xmax = PI / wave.period;
    let mut xs: Vec<f64> = (0..n_scan)
        .map(|k| 0.5 * xi1 + (xmax - 0.5 * xi1) * k as f64 / (n_scan - 1).max(1) as f64)
        .collect();
    xs.push(0.0);
    let worst = xs
        .par_iter()
        .map(|&xi| -> Result<f64> {
            let e = linalg::eig(&assemble(wave, xi, m)?.entries)?;
            let mut re: Vec<f64> = e.values.iter().map(|z| z.re).collect();
            re.sort_by(|a, b| b.total_cmp(a));
            Ok(if xi == 0.0 { re[1] } else { re[0] })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(-worst.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn lattice_rate(dec: &Decomposer) -> f64 {
    let zi = dec.lattice().zero_index();
    let worst = dec
        .propagator
        .slices
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let mut re: Vec<f64> = match p.eigenvalues() {
                Some(v) => v.iter().map(|z| z.re).collect(),
                None => linalg::eig(&p.matrix.entries)
                    .map(|e| e.values.iter().map(|z| z.re).collect())
                    .unwrap_or_default(),
            };
            re.sort_by(|a, b| b.total_cmp(a));
            if idx == zi {
                re.get(1).copied().unwrap_or(f64::NEG_INFINITY)
            } else {
                re.first().copied().unwrap_or(f64::NEG_INFINITY)
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    -worst
}

/// Decay table over N for the family `family(N, T, n_grid)`.
pub fn uniform_sweep<F>(
    wave: &PeriodicWave,
    curve: &CriticalCurve,
    cutoff: CutoffProfile,
    family: F,
    n_list: &[usize],
    t_grid: &[f64],
) -> Result<UniformSweep>
where
    F: Fn(usize, f64, usize) -> Result<PerturbationField>,
{
    let m = curve.m;
    let period = wave.period;
    let d = curve.d;
    let eta = noncritical_gap(wave, m, 200)?;
    let eta_cutoff = off_critical_gap(wave, m, cutoff.xi1, 64)?;
    let mut rows = Vec::new();
    let mut residual_norms = Vec::new();
    let mut summaries = Vec::new();
    for &n in n_list {
        let dec = Decomposer::new(wave, curve, cutoff, n, m)?;
        let f = family(n, period, n * cell_points(m))?;
        let prepared = dec.prepare(&f)?;
        let norm_f = prepared.norm_l1_l2;
        let mut minus_p0 = Vec::with_capacity(t_grid.len());
        let mut resid = Vec::with_capacity(t_grid.len());
        let mut prefactor: f64 = 0.0;
        let mut phase_prefactor: f64 = 0.0;
        for &t in t_grid {
            let rep = dec.decompose(&prepared, t)?;
            let nr = &rep.norms;
            let residual = rep.parts.sc.add(&rep.parts.slf).add(&rep.parts.shf).norm_l2();
            let w = (1.0 + t).powf(0.25) / norm_f;
            prefactor = prefactor.max(w * nr["minus_p0"]);
            phase_prefactor = phase_prefactor.max(w * nr["phase"]);
            minus_p0.push(nr["minus_p0"]);
            resid.push(residual);
            residual_norms.push(residual);
            rows.push(SweepRow {
                n,
                t,
                norm_full: nr["full"],
                norm_minus_p0: nr["minus_p0"],
                norm_phase: nr["phase"],
                norm_sc: nr["sc"],
                norm_slf: nr["slf"],
                norm_shf: nr["shf"],
                closure_residual: rep.closure_residual,
            });
        }
        let window = fit_window(n, period, d);
        let tc = window.1;
        let late_window = (3.0 * tc, 10.0 * tc);
        let dxi = 2.0 * PI / (n as f64 * period);
        summaries.push(SweepSummary {
            n,
            norm_f,
            prefactor,
            phase_prefactor,
            fit_window: window,
            residual_fit: decay_fit(t_grid, &resid, FitModel::Power, window).ok(),
            late_window,
            late_fit: decay_fit(t_grid, &minus_p0, FitModel::Exponential, late_window).ok(),
            lattice_rate: lattice_rate(&dec),
            delta: eta.min(d * dxi * dxi),
        });
    }
    Ok(UniformSweep {
        eta,
        eta_cutoff,
        d,
        rows,
        residual_norms,
        summaries,
    })
}
