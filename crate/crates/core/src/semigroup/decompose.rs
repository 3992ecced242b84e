use super::{CutoffProfile, LatticePropagator, PerturbationField};
use crate::blochop::{critical_mode, inner, kernel_mode, CriticalCurve, CriticalMode};
use crate::error::{Error, Result};
use crate::fourier;
use crate::transforms::{cell_points, inverse_bloch, BlochCoefficients, FieldSample, SubharmonicLattice};
use crate::wave::PeriodicWave;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Precomputed per-slice data for splitting e^{A t} on the lattice Omega_N.
pub struct Decomposer {
    pub wave: PeriodicWave,
    pub m: usize,
    pub n_cell: usize,
    pub cutoff: CutoffProfile,
    pub propagator: LatticePropagator,
    pub rho: Vec<f64>,
    pub modes: Vec<Option<CriticalMode>>,
    pub kernel: CriticalMode,
    pub phi_prime: Vec<C64>,
}

/// Bloch data of one perturbation, truncated to the Galerkin modes.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub slices: Vec<Vec<C64>>,
    pub real: bool,
    pub norm_l2: f64,
    pub norm_l1_l2: f64,
}

#[derive(Clone, Debug)]
pub struct Parts {
    pub p0: PerturbationField,
    pub phase: PerturbationField,
    pub sc: PerturbationField,
    pub slf: PerturbationField,
    pub shf: PerturbationField,
}

#[derive(Clone, Debug)]
pub struct DecompositionReport {
    pub n: usize,
    pub t: f64,
    pub parts: Parts,
    pub full: PerturbationField,
    pub norms: BTreeMap<String, f64>,
    pub closure_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulationField {
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub gamma: FieldSample,
    pub asymptotic_phase: f64,
    pub imag_residue: f64,
}

struct SliceParts {
    p0: Vec<C64>,
    phase: Vec<C64>,
    sc: Vec<C64>,
    slf: Vec<C64>,
    shf: Vec<C64>,
    full: Vec<C64>,
}

impl Decomposer {
    pub fn new(wave: &PeriodicWave, curve: &CriticalCurve, cutoff: CutoffProfile, n: usize, m: usize) -> Result<Self> {
        if cutoff.xi1 > curve.xi1 * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "cutoff radius {} exceeds the separation radius {}",
                cutoff.xi1, curve.xi1
            )));
        }
        let reach = curve.xi_samples.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if cutoff.xi1 > reach * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "critical curve sampled only to {reach}, cutoff needs {}",
                cutoff.xi1
            )));
        }
        let propagator = LatticePropagator::new(wave, n, m)?;
        let lat = &propagator.lattice;
        let rho: Vec<f64> = lat.frequencies.iter().map(|&xi| cutoff.eval(xi)).collect();
        let modes = lat
            .frequencies
            .par_iter()
            .zip(rho.par_iter())
            .map(|(&xi, &r)| {
                if xi == 0.0 || r == 0.0 {
                    return Ok(None);
                }
                let guess = curve.interpolate(xi)?;
                critical_mode(wave, xi, m, &guess.phi).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Decomposer {
            wave: wave.clone(),
            m,
            n_cell: cell_points(m),
            cutoff,
            rho,
            modes,
            kernel: kernel_mode(wave, m)?,
            phi_prime: wave.derivative_real_form(m),
            propagator,
        })
    }

    pub fn lattice(&self) -> &SubharmonicLattice {
        &self.propagator.lattice
    }

    pub fn n(&self) -> usize {
        self.lattice().n
    }

    pub fn period(&self) -> f64 {
        self.wave.period
    }

    pub fn n_grid(&self) -> usize {
        self.n() * self.n_cell
    }

    pub fn prepare(&self, f: &PerturbationField) -> Result<Prepared> {
        if f.n() != self.n() || f.n_grid() != self.n_grid() || f.period() != self.period() {
            return Err(Error::GridMismatch {
                n_grid: f.n_grid(),
                n: self.n(),
            });
        }
        let (_, _, slices) = f.bloch_stacked(self.m)?;
        Ok(Prepared {
            slices,
            real: f.is_real(1e-14),
            norm_l2: f.norm_l2(),
            norm_l1_l2: f.norm_l1_l2(),
        })
    }

    fn to_field(&self, slices: &[Vec<C64>]) -> PerturbationField {
        PerturbationField::from_stacked(self.lattice(), self.n_cell, slices)
    }

    fn slice_parts(&self, idx: usize, w: &[C64], t: f64) -> Result<SliceParts> {
        let period = self.period();
        let prop = &self.propagator.slices[idx];
        let zero = vec![C64::new(0.0, 0.0); w.len()];
        let full = prop.apply(t, w)?;
        let xi = self.lattice().frequencies[idx];
        let rho = self.rho[idx];
        if xi == 0.0 {
            let c0 = inner(&self.kernel.phi_tilde, w, period);
            let pw: Vec<C64> = self.phi_prime.iter().map(|p| p * c0).collect();
            let p0 = prop.apply(t, &pw)?;
            let slf = full.iter().zip(&p0).map(|(a, b)| a - b).collect();
            return Ok(SliceParts {
                p0,
                phase: zero.clone(),
                sc: zero.clone(),
                slf,
                shf: zero,
                full,
            });
        }
        match &self.modes[idx] {
            Some(mode) => {
                let c = inner(&mode.phi_tilde, w, period);
                let amp = (mode.lambda * t).exp() * c * rho;
                let evolved_mode = prop.apply(t, &mode.phi)?;
                let phase = self.phi_prime.iter().map(|p| p * amp).collect();
                let sc = mode
                    .phi
                    .iter()
                    .zip(&self.phi_prime)
                    .map(|(a, b)| (a - b) * amp)
                    .collect();
                let slf = full
                    .iter()
                    .zip(&evolved_mode)
                    .map(|(a, b)| (a - b * c) * rho)
                    .collect();
                let shf = full.iter().map(|a| a * (1.0 - rho)).collect();
                Ok(SliceParts {
                    p0: zero.clone(),
                    phase,
                    sc,
                    slf,
                    shf,
                    full,
                })
            }
            None => Ok(SliceParts {
                p0: zero.clone(),
                phase: zero.clone(),
                sc: zero.clone(),
                slf: zero,
                shf: full.clone(),
                full,
            }),
        }
    }

    fn all_slice_parts(&self, prepared: &Prepared, t: f64) -> Result<Vec<SliceParts>> {
        (0..self.lattice().len())
            .into_par_iter()
            .map(|idx| self.slice_parts(idx, &prepared.slices[idx], t))
            .collect()
    }

    pub fn evolve(&self, prepared: &Prepared, t: f64) -> Result<PerturbationField> {
        let out = self.propagator.evolve_stacked(&prepared.slices, t)?;
        Ok(self.to_field(&out))
    }

    pub fn decompose(&self, prepared: &Prepared, t: f64) -> Result<DecompositionReport> {
        let sp = self.all_slice_parts(prepared, t)?;
        let pick = |g: fn(&SliceParts) -> &Vec<C64>| -> Vec<Vec<C64>> { sp.iter().map(|s| g(s).clone()).collect() };
        let parts = Parts {
            p0: self.to_field(&pick(|s| &s.p0)),
            phase: self.to_field(&pick(|s| &s.phase)),
            sc: self.to_field(&pick(|s| &s.sc)),
            slf: self.to_field(&pick(|s| &s.slf)),
            shf: self.to_field(&pick(|s| &s.shf)),
        };
        let full = self.to_field(&pick(|s| &s.full));
        let sum = parts
            .p0
            .add(&parts.phase)
            .add(&parts.sc)
            .add(&parts.slf)
            .add(&parts.shf);
        let closure_residual = sum.sub(&full).norm_l2();
        let mut norms = BTreeMap::new();
        norms.insert("full".to_string(), full.norm_l2());
        norms.insert("minus_p0".to_string(), full.sub(&parts.p0).norm_l2());
        norms.insert("phase".to_string(), parts.phase.norm_l2());
        norms.insert("sc".to_string(), parts.sc.norm_l2());
        norms.insert("slf".to_string(), parts.slf.norm_l2());
        norms.insert("shf".to_string(), parts.shf.norm_l2());
        Ok(DecompositionReport {
            n: self.n(),
            t,
            parts,
            full,
            norms,
            closure_residual,
        })
    }

    /// (1/N) <Phi~_0, f>_{L2_N}.
    pub fn kernel_coefficient(&self, prepared: &Prepared) -> C64 {
        let zi = self.lattice().zero_index();
        inner(&self.kernel.phi_tilde, &prepared.slices[zi], self.period()) / (self.n() as f64 * self.period())
    }

    pub fn project_p0(&self, prepared: &Prepared) -> PerturbationField {
        let c = self.kernel_coefficient(prepared);
        let pp: Vec<C64> = self.phi_prime.iter().map(|p| p * c).collect();
        PerturbationField::from_periodic(&pp, self.n(), self.period(), self.n_cell).expect("grid matches lattice")
    }

    /// s_{p,N}(t) f as a scalar field on [0, NT).
    pub fn phase_scalar(&self, prepared: &Prepared, t: f64) -> Result<FieldSample> {
        let period = self.period();
        let values: Vec<C64> = (0..self.lattice().len())
            .into_par_iter()
            .map(|idx| match &self.modes[idx] {
                Some(mode) => (mode.lambda * t).exp() * inner(&mode.phi_tilde, &prepared.slices[idx], period) * self.rho[idx],
                None => C64::new(0.0, 0.0),
            })
            .collect();
        let mut coeffs = BlochCoefficients::zeros(self.lattice().clone(), self.n_cell);
        for (idx, v) in values.into_iter().enumerate() {
            coeffs.set_mode(idx, 0, v);
        }
        Ok(inverse_bloch(&coeffs))
    }

    pub fn gamma(&self, prepared: &Prepared, t: f64) -> Result<ModulationField> {
        let c0 = self.kernel_coefficient(prepared);
        let s = self.phase_scalar(prepared, t)?;
        // data scale keeps roundoff from dominating when s and c0 both vanish
        let data = prepared.norm_l2 / (self.n() as f64 * self.period()).sqrt();
        let scale = s.norm_sup().max(c0.norm()).max(data).max(1e-300);
        let imag_residue = s
            .values
            .iter()
            .map(|z| z.im.abs())
            .fold(c0.im.abs(), f64::max)
            / scale;
        let values = s
            .values
            .iter()
            .map(|z| {
                let g = z + c0;
                if prepared.real {
                    C64::new(g.re, 0.0)
                } else {
                    g
                }
            })
            .collect();
        let p0 = self.project_p0(prepared);
        let phase = self.asymptotic_phase(&p0);
        Ok(ModulationField {
            n: self.n(),
            t,
            gamma: FieldSample { values, ..s },
            asymptotic_phase: phase,
            imag_residue,
        })
    }

    /// <phi', P_0 f>_{L2(0,T)} / ||phi'||^2 read off the first cell of the projected field.
    fn asymptotic_phase(&self, p0: &PerturbationField) -> f64 {
        let nc = self.n_cell;
        let (pr, pi) = fourier::split_real_imag(&self.wave.derivative_coeffs());
        let (pr, pi) = (fourier::to_grid(&pr, nc), fourier::to_grid(&pi, nc));
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for k in 0..nc {
            num += pr[k].conj() * p0.r.values[k] + pi[k].conj() * p0.i.values[k];
            den += pr[k].norm_sqr() + pi[k].norm_sqr();
        }
        if den > 0.0 {
            num.re / den
        } else {
            0.0
        }
    }

    /// phi'(x) gamma(x) on the lattice grid.
    pub fn phi_prime_times(&self, gamma: &FieldSample) -> PerturbationField {
        let pp = PerturbationField::from_periodic(&self.phi_prime, self.n(), self.period(), self.n_cell)
            .expect("grid matches lattice");
        let mul = |a: &FieldSample| FieldSample {
            values: a.values.iter().zip(&gamma.values).map(|(x, g)| x * g).collect(),
            ..a.clone()
        };
        PerturbationField {
            r: mul(&pp.r),
            i: mul(&pp.i),
        }
    }

    /// sup over cutoff-supported slices and x of rho |Phi_xi - phi'| / |xi|.
    pub fn difference_quotient_sup(&self) -> f64 {
        let nc = self.n_cell;
        let half = self.phi_prime.len() / 2;
        self.modes
            .iter()
            .zip(&self.rho)
            .zip(&self.lattice().frequencies)
            .filter_map(|((md, r), xi)| md.as_ref().map(|md| (md, *r, *xi)))
            .map(|(md, r, xi)| {
                let diff: Vec<C64> = md.phi.iter().zip(&self.phi_prime).map(|(a, b)| a - b).collect();
                let gr = fourier::to_grid(&diff[..half], nc);
                let gi = fourier::to_grid(&diff[half..], nc);
                gr.iter()
                    .zip(&gi)
                    .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt())
                    .fold(0.0, f64::max)
                    * r
                    / xi.abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn evolve(wave: &PeriodicWave, f: &PerturbationField, n: usize, t: f64, m: usize) -> Result<PerturbationField> {
    let prop = LatticePropagator::new(wave, n, m)?;
    let (lat, n_cell, slices) = f.bloch_stacked(m)?;
    if lat.n != n {
        return Err(Error::GridMismatch { n_grid: f.n_grid(), n });
    }
    let out = prop.evolve_stacked(&slices, t)?;
    Ok(PerturbationField::from_stacked(&lat, n_cell, &out))
}

pub fn project_p0n(wave: &PeriodicWave, curve: &CriticalCurve, f: &PerturbationField, n: usize) -> Result<PerturbationField> {
    let cutoff = CutoffProfile::new(curve.xi1)?;
    let d = Decomposer::new(wave, curve, cutoff, n, curve.m)?;
    Ok(d.project_p0(&d.prepare(f)?))
}

pub fn decompose(
    wave: &PeriodicWave,
    curve: &CriticalCurve,
    cutoff: CutoffProfile,
    f: &PerturbationField,
    n: usize,
    t: f64,
) -> Result<DecompositionReport> {
    let d = Decomposer::new(wave, curve, cutoff, n, curve.m)?;
    d.decompose(&d.prepare(f)?, t)
}

pub fn modulation_gamma(
    wave: &PeriodicWave,
    curve: &CriticalCurve,
    cutoff: CutoffProfile,
    f: &PerturbationField,
    n: usize,
    t: f64,
) -> Result<ModulationField> {
    let d = Decomposer::new(wave, curve, cutoff, n, curve.m)?;
    d.gamma(&d.prepare(f)?, t)
}
