//! Fourier-Galerkin Bloch operators A_xi = -I + J L_xi[phi] and their spectra.
//!
//! Vectors stack the Fourier coefficients of (w_r, w_i), each indexed l = -M..=M.

use crate::error::{Error, Result};
use crate::fourier::{self, wavenumber};
use crate::linalg::{self, CMat};
use crate::transforms::lattice;
use crate::wave::{LleParams, PeriodicWave};
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub const ZERO_MODE_TOL: f64 = 1e-8;
pub const OVERLAP_MIN: f64 = 0.5;

/// L2(0,T) inner product of stacked coefficient vectors.
pub fn inner(u: &[C64], v: &[C64], period: f64) -> C64 {
    linalg::dot(u, v) * period
}

pub fn norm(u: &[C64], period: f64) -> f64 {
    inner(u, u, period).re.max(0.0).sqrt()
}

fn overlap(u: &[C64], v: &[C64]) -> f64 {
    let d = linalg::vec_norm(u) * linalg::vec_norm(v);
    if d == 0.0 {
        0.0
    } else {
        linalg::dot(u, v).norm() / d
    }
}

/// Fourier coefficients (|k| <= 2 M_w) of 3P^2+Q^2, P^2+3Q^2, 2PQ for phi = P + iQ.
fn multipliers(coeffs: &[C64]) -> [Vec<C64>; 3] {
    let mw = (coeffs.len() - 1) / 2;
    let m1 = fourier::pointwise(&[coeffs], 2 * mw, |z| {
        C64::new(3.0 * z[0].re * z[0].re + z[0].im * z[0].im, 0.0)
    });
    let m2 = fourier::pointwise(&[coeffs], 2 * mw, |z| {
        C64::new(z[0].re * z[0].re + 3.0 * z[0].im * z[0].im, 0.0)
    });
    let m3 = fourier::pointwise(&[coeffs], 2 * mw, |z| C64::new(2.0 * z[0].re * z[0].im, 0.0));
    [m1, m2, m3]
}

pub fn assemble_raw(params: &LleParams, period: f64, coeffs: &[C64], xi: f64, m: usize) -> CMat {
    let mw = (coeffs.len() - 1) / 2;
    let [m1, m2, m3] = multipliers(coeffs);
    let nm = 2 * m + 1;
    let toe = |c: &Vec<C64>, d: i64| -> C64 {
        if d.unsigned_abs() as usize <= 2 * mw {
            c[(d + 2 * mw as i64) as usize]
        } else {
            C64::new(0.0, 0.0)
        }
    };
    let (alpha, beta) = (params.alpha, params.beta);
    Mat::from_fn(2 * nm, 2 * nm, |row, col| {
        let (br, l) = (row / nm, (row % nm) as i64 - m as i64);
        let (bc, j) = (col / nm, (col % nm) as i64 - m as i64);
        let diag = l == j;
        let symbol = if diag {
            let q = wavenumber(l, period) + xi;
            beta * q * q - alpha
        } else {
            0.0
        };
        let one = if diag { 1.0 } else { 0.0 };
        match (br, bc) {
            (0, 0) => -toe(&m3, l - j) - one,
            (0, 1) => -(toe(&m2, l - j) + symbol),
            (1, 0) => toe(&m1, l - j) + symbol,
            _ => toe(&m3, l - j) - one,
        }
    })
}

#[derive(Clone, Debug)]
pub struct BlochMatrix {
    pub xi: f64,
    pub m: usize,
    pub period: f64,
    pub entries: CMat,
}

impl BlochMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, w: &[C64]) -> Vec<C64> {
        linalg::matvec(&self.entries, w)
    }

    /// Galerkin truncation to |l| <= m_new, a principal submatrix.
    pub fn truncated(&self, m_new: usize) -> BlochMatrix {
        assert!(m_new <= self.m);
        let nm = 2 * self.m + 1;
        let nn = 2 * m_new + 1;
        let off = self.m - m_new;
        let idx = |r: usize| (r / nn) * nm + off + r % nn;
        BlochMatrix {
            xi: self.xi,
            m: m_new,
            period: self.period,
            entries: Mat::from_fn(2 * nn, 2 * nn, |i, j| self.entries[(idx(i), idx(j))]),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entries[(i, i)]).sum()
    }
}

pub fn assemble(wave: &PeriodicWave, xi: f64, m: usize) -> Result<BlochMatrix> {
    if m < wave.m {
        return Err(Error::TruncationTooSmall {
            requested: m,
            wave: wave.m,
        });
    }
    let edge = PI / wave.period;
    if !(xi.abs() <= edge * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!("xi={xi} outside [-pi/T, pi/T]")));
    }
    Ok(BlochMatrix {
        xi,
        m,
        period: wave.period,
        entries: assemble_raw(&wave.params, wave.period, &wave.coeffs, xi, m),
    })
}

fn sort_spectrum(values: &mut [C64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSlice {
    pub xi: f64,
    pub eigenvalues: Vec<C64>,
    pub max_real_part: f64,
    pub zero_mode_residual: f64,
    /// Largest move of an eigenvalue in the resolved window against the M/2 truncation.
    pub truncation_shift: f64,
    pub truncation_converged: bool,
}

/// Eigenvalues with Re > -3 whose modes are resolved by truncation `m`.
pub fn in_window(lambda: C64, m: usize, period: f64) -> bool {
    let edge = PI * m as f64 / period;
    lambda.re > -3.0 && lambda.im.abs() <= edge * edge
}

fn max_window_shift(coarse: &[C64], fine: &[C64], m_coarse: usize, period: f64) -> f64 {
    coarse
        .iter()
        .filter(|l| in_window(**l, m_coarse, period))
        .map(|l| fine.iter().map(|f| (f - l).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn spectrum(matrix: &BlochMatrix) -> Result<SpectralSlice> {
    let mut values = linalg::eig(&matrix.entries)?.values;
    sort_spectrum(&mut values);
    let shift = if matrix.m >= 2 {
        let half = matrix.truncated(matrix.m / 2);
        let coarse = linalg::eig(&half.entries)?.values;
        max_window_shift(&coarse, &values, half.m, matrix.period)
    } else {
        0.0
    };
    Ok(SpectralSlice {
        xi: matrix.xi,
        max_real_part: values[0].re,
        zero_mode_residual: values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min),
        eigenvalues: values,
        truncation_shift: shift,
        truncation_converged: shift < 1e-6,
    })
}

/// Uniform symmetric grid of n points on [-pi/T, pi/T] with `refine`-fold density near 0.
pub fn xi_grid(n: usize, refine: usize, period: f64) -> Vec<f64> {
    let n = if n % 2 == 0 { n + 1 } else { n.max(3) };
    let half = (n - 1) / 2;
    let h = PI / period / half as f64;
    let mut pts: Vec<f64> = (0..n).map(|i| (i as f64 - half as f64) * h).collect();
    let band = 5.min(half);
    for i in 0..band {
        for s in 1..refine.max(1) {
            let x = (i as f64 + s as f64 / refine as f64) * h;
            pts.push(x);
            pts.push(-x);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub xi: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub condition_i: bool,
    pub condition_ii: bool,
    pub condition_iii: bool,
    pub theta: f64,
    /// ||A_0 phi'|| / ||phi'||; absent for a constant state
    pub kernel_residual: Option<f64>,
    pub zero_eigenvalue: C64,
    pub secondary_gap: f64,
    pub zero_alignment: f64,
    pub biorthogonality: f64,
    pub delta_n_table: BTreeMap<usize, f64>,
    pub xi0: f64,
    pub delta0: f64,
    pub xi1: f64,
    pub delta1: f64,
    pub max_truncation_shift: f64,
    pub violations: Vec<Violation>,
    pub grid_size: usize,
}

struct SliceData {
    xi: f64,
    values: Vec<C64>,
    vectors: CMat,
}

fn slice_data(wave: &PeriodicWave, xi: f64, m: usize) -> Result<SliceData> {
    let a = assemble(wave, xi, m)?;
    let e = linalg::eig(&a.entries)?;
    Ok(SliceData {
        xi,
        values: e.values,
        vectors: e.vectors,
    })
}

fn column(a: &CMat, j: usize) -> Vec<C64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

fn best_overlap(data: &SliceData, reference: &[C64]) -> (usize, f64) {
    (0..data.values.len())
        .map(|j| (j, overlap(reference, &column(&data.vectors, j))))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Largest real part after removing one eigenvalue, or all of them if `skip` is None.
fn max_re_excluding(values: &[C64], skip: Option<usize>) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(_, v)| v.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Track the critical branch outward from xi = 0 through sorted samples; returns
/// per-sample branch index, or the position where separation from the rest fails.
fn track_branch(
    slices: &[SliceData],
    zero_idx: usize,
    zero_branch: usize,
    phi_prime: &[C64],
) -> (Vec<Option<usize>>, Vec<f64>) {
    let mut branch = vec![None; slices.len()];
    let mut overlaps = vec![0.0; slices.len()];
    branch[zero_idx] = Some(zero_branch);
    overlaps[zero_idx] = overlap(phi_prime, &column(&slices[zero_idx].vectors, zero_branch));
    for dir in [1i64, -1] {
        let mut reference = column(&slices[zero_idx].vectors, zero_branch);
        let mut i = zero_idx as i64 + dir;
        while i >= 0 && (i as usize) < slices.len() {
            let s = &slices[i as usize];
            let (j, ov) = best_overlap(s, &reference);
            overlaps[i as usize] = ov;
            if ov < OVERLAP_MIN {
                break;
            }
            branch[i as usize] = Some(j);
            reference = column(&s.vectors, j);
            i += dir;
        }
    }
    (branch, overlaps)
}

/// Largest radius on the sample set where the tracked branch stays above -delta1 and
/// everything else stays below it.
fn separation_radius(slices: &[SliceData], branch: &[Option<usize>], zero_idx: usize, delta1: f64) -> f64 {
    let mut radius = f64::INFINITY;
    for dir in [1i64, -1] {
        let first = zero_idx as i64 + dir;
        if first < 0 || first as usize >= slices.len() {
            continue;
        }
        let mut i = zero_idx as i64;
        let mut last_ok = 0.0;
        loop {
            let idx = i as usize;
            let ok = match branch[idx] {
                Some(j) => {
                    let s = &slices[idx];
                    s.values[j].re > -delta1 && max_re_excluding(&s.values, Some(j)) < -delta1
                }
                None => false,
            };
            if !ok {
                break;
            }
            last_ok = slices[idx].xi.abs();
            i += dir;
            if i < 0 || i as usize >= slices.len() {
                break;
            }
        }
        radius = radius.min(last_ok);
    }
    if radius.is_finite() {
        radius
    } else {
        0.0
    }
}

pub fn check_diffusive_stability(
    wave: &PeriodicWave,
    xi_grid: &[f64],
    m: usize,
    n_list: &[usize],
) -> Result<StabilityVerdict> {
    let mut grid = xi_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let zero_idx = grid
        .iter()
        .position(|&x| x == 0.0)
        .ok_or_else(|| Error::Precondition("xi grid must contain 0".into()))?;
    let slices: Vec<SliceData> = grid
        .par_iter()
        .map(|&xi| slice_data(wave, xi, m))
        .collect::<Result<_>>()?;
    let phi_prime = wave.derivative_real_form(m);
    let pp_norm = linalg::vec_norm(&phi_prime);
    let a0 = assemble(wave, 0.0, m)?;
    let kernel_residual = (pp_norm > 0.0).then(|| linalg::vec_norm(&a0.apply(&phi_prime)) / pp_norm);

    let z = &slices[zero_idx];
    let zero_branch = if pp_norm > 0.0 {
        best_overlap(z, &phi_prime).0
    } else {
        (0..z.values.len())
            .min_by(|&a, &b| z.values[a].norm().total_cmp(&z.values[b].norm()))
            .unwrap()
    };
    let lambda0 = z.values[zero_branch];
    let zero_alignment = if pp_norm > 0.0 {
        overlap(&phi_prime, &column(&z.vectors, zero_branch))
    } else {
        0.0
    };
    let secondary = max_re_excluding(&z.values, Some(zero_branch));
    let separation = z
        .values
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != zero_branch)
        .map(|(_, v)| (v - lambda0).norm())
        .fold(f64::INFINITY, f64::min);
    let biorthogonality = {
        let adj = linalg::eig(&linalg::adjoint(&a0.entries))?;
        let right = column(&z.vectors, zero_branch);
        let left = pair_left(&adj, lambda0, &right);
        overlap(&left, &right)
    };

    let mut violations = Vec::new();
    let mut theta = f64::INFINITY;
    let mut condition_i = true;
    for (i, s) in slices.iter().enumerate() {
        let mre = if i == zero_idx {
            max_re_excluding(&s.values, Some(zero_branch))
        } else {
            max_re_excluding(&s.values, None)
        };
        if !(mre < 0.0) {
            condition_i = false;
            violations.push(Violation {
                condition: "i".into(),
                xi: s.xi,
                value: mre,
            });
        }
        if i != zero_idx {
            theta = theta.min(-mre / (s.xi * s.xi));
        }
    }
    if lambda0.re > ZERO_MODE_TOL {
        condition_i = false;
        violations.push(Violation {
            condition: "i".into(),
            xi: 0.0,
            value: lambda0.re,
        });
    }
    let theta = if theta.is_finite() { theta.max(0.0) } else { 0.0 };
    let condition_ii = theta > 0.0;
    if !condition_ii {
        let worst = slices
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != zero_idx)
            .map(|(_, s)| (s.xi, max_re_excluding(&s.values, None) / (s.xi * s.xi)))
            .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        violations.push(Violation {
            condition: "ii".into(),
            xi: worst.0,
            value: worst.1,
        });
    }
    let condition_iii = lambda0.norm() <= ZERO_MODE_TOL
        && separation > 1e-6
        && zero_alignment > 1.0 - 1e-12
        && biorthogonality > 1e-8
        && kernel_residual.is_some_and(|r| r <= ZERO_MODE_TOL);
    if !condition_iii {
        violations.push(Violation {
            condition: "iii".into(),
            xi: 0.0,
            value: lambda0.norm(),
        });
    }

    let delta1 = if secondary.is_finite() { -0.5 * secondary } else { 0.0 };
    let (branch, _) = track_branch(&slices, zero_idx, zero_branch, &phi_prime);
    let xi1 = if delta1 > 0.0 {
        separation_radius(&slices, &branch, zero_idx, delta1)
    } else {
        0.0
    };
    let xi0 = 0.5 * xi1;
    let delta0 = -slices
        .iter()
        .filter(|s| s.xi.abs() >= xi0 && s.xi != 0.0)
        .map(|s| max_re_excluding(&s.values, None))
        .fold(f64::NEG_INFINITY, f64::max);

    let mut delta_n_table = BTreeMap::new();
    for &n in n_list {
        let lat = lattice(n, wave.period)?;
        let mut worst = f64::NEG_INFINITY;
        for &xi in &lat.frequencies {
            if xi == 0.0 {
                worst = worst.max(secondary);
            } else {
                let vals = linalg::eig(&assemble(wave, xi, m)?.entries)?.values;
                worst = worst.max(max_re_excluding(&vals, None));
            }
        }
        delta_n_table.insert(n, -worst);
    }

    let check: Vec<f64> = grid.iter().step_by(10).copied().collect();
    let max_truncation_shift = check
        .par_iter()
        .map(|&xi| truncation_doubling_shift(wave, xi, m))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    Ok(StabilityVerdict {
        stable: condition_i && condition_ii && condition_iii,
        condition_i,
        condition_ii,
        condition_iii,
        theta,
        kernel_residual,
        zero_eigenvalue: lambda0,
        secondary_gap: -secondary,
        zero_alignment,
        biorthogonality,
        delta_n_table,
        xi0,
        delta0,
        xi1,
        delta1,
        max_truncation_shift,
        violations,
        grid_size: grid.len(),
    })
}

/// Largest move of window eigenvalues of the M truncation when M doubles.
pub fn truncation_doubling_shift(wave: &PeriodicWave, xi: f64, m: usize) -> Result<f64> {
    let coarse = linalg::eig(&assemble(wave, xi, m)?.entries)?.values;
    let fine = linalg::eig(&assemble(wave, xi, 2 * m)?.entries)?.values;
    Ok(max_window_shift(&coarse, &fine, m, wave.period))
}

/// Left eigenvector for `lambda` from a decomposition of the adjoint, paired by
/// maximal biorthogonality with `right` among eigenvalues near conj(lambda).
fn pair_left(adj: &linalg::EigenDecomposition, lambda: C64, right: &[C64]) -> Vec<C64> {
    let target = lambda.conj();
    let dmin = adj
        .values
        .iter()
        .map(|v| (v - target).norm())
        .fold(f64::INFINITY, f64::min);
    let cutoff = 10.0 * dmin + 1e-9 * (1.0 + lambda.norm());
    let mut best = (0, -1.0);
    for (j, v) in adj.values.iter().enumerate() {
        if (v - target).norm() <= cutoff {
            let ov = overlap(&column(&adj.vectors, j), right);
            if ov > best.1 {
                best = (j, ov);
            }
        }
    }
    column(&adj.vectors, best.0)
}

/// Eigenpair of the critical branch at one Bloch frequency with fixed normalization:
/// <phi', Phi> = ||phi'||^2 and <Phi~, Phi> = 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalMode {
    pub xi: f64,
    pub lambda: C64,
    pub phi: Vec<C64>,
    pub phi_tilde: Vec<C64>,
    pub overlap: f64,
}

fn normalize_mode(xi: f64, lambda: C64, mut phi: Vec<C64>, mut psi: Vec<C64>, phi_prime: &[C64], period: f64, ov: f64) -> Result<CriticalMode> {
    let pp = inner(phi_prime, phi_prime, period);
    let proj = inner(phi_prime, &phi, period);
    if proj.norm() == 0.0 {
        return Err(Error::BranchCrossing { xi, overlap: 0.0 });
    }
    let s = pp / proj;
    phi.iter_mut().for_each(|z| *z *= s);
    let bi = inner(&psi, &phi, period);
    if bi.norm() < 1e-300 {
        return Err(Error::EigensolverFailure(format!("left/right eigenvectors orthogonal at xi={xi}")));
    }
    let s2 = 1.0 / bi.conj();
    psi.iter_mut().for_each(|z| *z *= s2);
    Ok(CriticalMode {
        xi,
        lambda,
        phi,
        phi_tilde: psi,
        overlap: ov,
    })
}

/// Exact critical eigenpair at `xi`, selected by overlap with `reference`.
pub fn critical_mode(wave: &PeriodicWave, xi: f64, m: usize, reference: &[C64]) -> Result<CriticalMode> {
    let a = assemble(wave, xi, m)?;
    let e = linalg::eig(&a.entries)?;
    let data = SliceData {
        xi,
        values: e.values,
        vectors: e.vectors,
    };
    let (j, ov) = best_overlap(&data, reference);
    if ov < OVERLAP_MIN {
        return Err(Error::BranchCrossing { xi, overlap: ov });
    }
    let lambda = data.values[j];
    let right = column(&data.vectors, j);
    let adj = linalg::eig(&linalg::adjoint(&a.entries))?;
    let left = pair_left(&adj, lambda, &right);
    normalize_mode(xi, lambda, right, left, &wave.derivative_real_form(m), wave.period, ov)
}

/// The xi = 0 mode with Phi_0 = phi' exactly and Phi~_0 normalized against it.
pub fn kernel_mode(wave: &PeriodicWave, m: usize) -> Result<CriticalMode> {
    let pp = wave.derivative_real_form(m);
    let exact = critical_mode(wave, 0.0, m, &pp)?;
    let bi = inner(&exact.phi_tilde, &pp, wave.period);
    let s = 1.0 / bi.conj();
    Ok(CriticalMode {
        xi: 0.0,
        lambda: exact.lambda,
        phi_tilde: exact.phi_tilde.iter().map(|z| z * s).collect(),
        phi: pp,
        overlap: exact.overlap,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalCurve {
    pub period: f64,
    pub m: usize,
    pub xi_samples: Vec<f64>,
    pub lambda_c: Vec<C64>,
    pub phi_xi: Vec<Vec<C64>>,
    pub phi_tilde_xi: Vec<Vec<C64>>,
    pub a: f64,
    pub d: f64,
    pub theta: f64,
    pub xi1: f64,
    pub delta1: f64,
    pub fit_residual: f64,
    pub interpolation_order: usize,
}

/// Separation constants (xi1, delta1) from an outward scan of `n_scan` points on [0, pi/T].
pub fn critical_separation(wave: &PeriodicWave, m: usize, n_scan: usize) -> Result<(f64, f64)> {
    let edge = PI / wave.period;
    let grid: Vec<f64> = (0..=n_scan).map(|i| edge * i as f64 / n_scan as f64).collect();
    let slices: Vec<SliceData> = grid
        .par_iter()
        .map(|&xi| slice_data(wave, xi, m))
        .collect::<Result<_>>()?;
    let pp = wave.derivative_real_form(m);
    let (zb, ov) = best_overlap(&slices[0], &pp);
    if ov < OVERLAP_MIN {
        return Err(Error::BranchCrossing { xi: 0.0, overlap: ov });
    }
    let delta1 = -0.5 * max_re_excluding(&slices[0].values, Some(zb));
    if !(delta1 > 0.0) {
        return Ok((0.0, delta1));
    }
    let (branch, _) = track_branch(&slices, 0, zb, &pp);
    Ok((separation_radius(&slices, &branch, 0, delta1), delta1))
}

/// -max Re of the spectrum with the critical branch removed, over an outward scan of
/// `n_scan` points on [0, pi/T]. Where tracking loses the branch nothing is removed.
pub fn noncritical_gap(wave: &PeriodicWave, m: usize, n_scan: usize) -> Result<f64> {
    let edge = PI / wave.period;
    let grid: Vec<f64> = (0..=n_scan).map(|i| edge * i as f64 / n_scan as f64).collect();
    let slices: Vec<SliceData> = grid
        .par_iter()
        .map(|&xi| slice_data(wave, xi, m))
        .collect::<Result<_>>()?;
    let pp = wave.derivative_real_form(m);
    let (zb, ov) = best_overlap(&slices[0], &pp);
    if ov < OVERLAP_MIN {
        return Err(Error::BranchCrossing { xi: 0.0, overlap: ov });
    }
    let (branch, _) = track_branch(&slices, 0, zb, &pp);
    let worst = slices
        .iter()
        .zip(&branch)
        .map(|(s, b)| max_re_excluding(&s.values, *b))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(-worst)
}

fn lstsq_small(rows: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let k = rows[0].len();
    let a = Mat::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let b = Mat::from_fn(rows.len(), 1, |i, _| rhs[i]);
    let qr = a.qr();
    use faer::linalg::solvers::SolveLstsq;
    let x = qr.solve_lstsq(&b);
    (0..k).map(|i| x[(i, 0)]).collect()
}

pub fn critical_curve(wave: &PeriodicWave, xi_max: f64, n_samples: usize, m: usize) -> Result<CriticalCurve> {
    if n_samples < 8 {
        return Err(Error::Precondition("critical curve needs at least 8 samples".into()));
    }
    let (xi1, delta1) = critical_separation(wave, m, 400)?;
    if !(xi_max > 0.0) || xi_max > xi1 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "xi_max={xi_max} must lie in (0, xi1={xi1}]"
        )));
    }
    let k = (n_samples / 2).max(4) as i64;
    let xs: Vec<f64> = (-k..=k).map(|i| xi_max * i as f64 / k as f64).collect();
    let slices: Vec<SliceData> = xs
        .par_iter()
        .map(|&xi| slice_data(wave, xi, m))
        .collect::<Result<_>>()?;
    let pp = wave.derivative_real_form(m);
    let zi = k as usize;
    let (zb, ov0) = best_overlap(&slices[zi], &pp);
    let (branch, overlaps) = track_branch(&slices, zi, zb, &pp);
    if let Some(pos) = branch.iter().position(|b| b.is_none()) {
        return Err(Error::BranchCrossing {
            xi: xs[pos],
            overlap: overlaps[pos],
        });
    }
    let modes: Vec<CriticalMode> = slices
        .par_iter()
        .zip(branch.par_iter())
        .map(|(s, b)| {
            let j = b.expect("tracked");
            let a = assemble(wave, s.xi, m)?;
            let adj = linalg::eig(&linalg::adjoint(&a.entries))?;
            let right = column(&s.vectors, j);
            let left = pair_left(&adj, s.values[j], &right);
            normalize_mode(s.xi, s.values[j], right, left, &pp, wave.period, ov0)
        })
        .collect::<Result<_>>()?;

    let lam: Vec<C64> = modes.iter().map(|md| md.lambda).collect();
    let scale = xi_max;
    let re_rows: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let s = x / scale;
            vec![s * s, s.powi(4), s.powi(6)]
        })
        .collect();
    let im_rows: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            let s = x / scale;
            vec![s, s.powi(3), s.powi(5)]
        })
        .collect();
    let re_fit = lstsq_small(&re_rows, &lam.iter().map(|l| l.re - lam[zi].re).collect::<Vec<_>>());
    let im_fit = lstsq_small(&im_rows, &lam.iter().map(|l| l.im - lam[zi].im).collect::<Vec<_>>());
    let d = -re_fit[0] / (scale * scale);
    let a = im_fit[0] / scale;
    let fit_residual = xs
        .iter()
        .zip(&lam)
        .map(|(&x, l)| {
            let s = x / scale;
            let re = re_fit[0] * s * s + re_fit[1] * s.powi(4) + re_fit[2] * s.powi(6);
            let im = im_fit[0] * s + im_fit[1] * s.powi(3) + im_fit[2] * s.powi(5);
            (C64::new(re, im) + lam[zi] - l).norm()
        })
        .fold(0.0, f64::max);
    let theta = xs
        .iter()
        .zip(&lam)
        .filter(|(x, _)| **x != 0.0)
        .map(|(x, l)| -l.re / (x * x))
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    Ok(CriticalCurve {
        period: wave.period,
        m,
        xi_samples: xs,
        lambda_c: lam,
        phi_xi: modes.iter().map(|md| md.phi.clone()).collect(),
        phi_tilde_xi: modes.into_iter().map(|md| md.phi_tilde).collect(),
        a,
        d,
        theta,
        xi1,
        delta1,
        fit_residual,
        interpolation_order: 3,
    })
}

fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            (0..xs.len())
                .filter(|&j| j != i)
                .map(|j| (x - xs[j]) / (xs[i] - xs[j]))
                .product()
        })
        .collect()
}

impl CriticalCurve {
    /// Cubic interpolation of lambda_c, Phi and Phi~ with the pairing renormalized.
    pub fn interpolate(&self, xi: f64) -> Result<CriticalMode> {
        let n = self.xi_samples.len();
        let (lo, hi) = (self.xi_samples[0], self.xi_samples[n - 1]);
        if xi < lo - 1e-14 || xi > hi + 1e-14 {
            return Err(Error::Precondition(format!("xi={xi} outside sampled range [{lo}, {hi}]")));
        }
        if let Some(i) = self.xi_samples.iter().position(|&s| s == xi) {
            return Ok(CriticalMode {
                xi,
                lambda: self.lambda_c[i],
                phi: self.phi_xi[i].clone(),
                phi_tilde: self.phi_tilde_xi[i].clone(),
                overlap: 1.0,
            });
        }
        let pos = self.xi_samples.partition_point(|&s| s < xi);
        let start = pos.saturating_sub(2).min(n.saturating_sub(4));
        let idx: Vec<usize> = (start..(start + 4).min(n)).collect();
        let w = lagrange_weights(&idx.iter().map(|&i| self.xi_samples[i]).collect::<Vec<_>>(), xi);
        let dim = self.phi_xi[0].len();
        let mix = |src: &Vec<Vec<C64>>| -> Vec<C64> {
            (0..dim)
                .map(|r| idx.iter().zip(&w).map(|(&i, &wi)| src[i][r] * wi).sum())
                .collect()
        };
        let phi = mix(&self.phi_xi);
        let mut psi = mix(&self.phi_tilde_xi);
        let lambda: C64 = idx.iter().zip(&w).map(|(&i, &wi)| self.lambda_c[i] * wi).sum();
        let bi = inner(&psi, &phi, self.period);
        let s = 1.0 / bi.conj();
        psi.iter_mut().for_each(|z| *z *= s);
        Ok(CriticalMode {
            xi,
            lambda,
            phi,
            phi_tilde: psi,
            overlap: 1.0,
        })
    }
}

/// Pi(xi) g = <Phi~_xi, g> Phi_xi.
pub fn spectral_projection(curve: &CriticalCurve, xi: f64, g: &[C64]) -> Result<Vec<C64>> {
    let mode = curve.interpolate(xi)?;
    Ok(apply_projection(&mode, g, curve.period))
}

pub fn apply_projection(mode: &CriticalMode, g: &[C64], period: f64) -> Vec<C64> {
    let c = inner(&mode.phi_tilde, g, period);
    mode.phi.iter().map(|p| p * c).collect()
}

fn shifted(matrix: &BlochMatrix, mu: f64) -> CMat {
    let n = matrix.dim();
    Mat::from_fn(n, n, |i, j| {
        let d = if i == j { C64::new(0.0, mu) } else { C64::new(0.0, 0.0) };
        d - matrix.entries[(i, j)]
    })
}

/// ||(i mu - A_xi)^{-1}||_2, or SingularShift when i mu is numerically on the spectrum.
pub fn resolvent_norm(matrix: &BlochMatrix, mu: f64) -> Result<f64> {
    let s = linalg::singular_values(&shifted(matrix, mu))?;
    let smin = *s.last().unwrap();
    if smin <= 1e-12 * s[0] {
        return Err(Error::SingularShift { mu, sigma: smin });
    }
    Ok(1.0 / smin)
}

/// Resolvent norms along the imaginary axis; shifts on the spectrum report infinity.
pub fn resolvent_scan(matrix: &BlochMatrix, mu_grid: &[f64]) -> Result<Vec<f64>> {
    mu_grid
        .par_iter()
        .map(|&mu| match resolvent_norm(matrix, mu) {
            Ok(v) => Ok(v),
            Err(Error::SingularShift { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        })
        .collect()
}
