use crate::blochop::{assemble, BlochMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::transforms::{lattice, SubharmonicLattice};
use crate::wave::PeriodicWave;
use faer::Mat;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

const EIGEN_COND_LIMIT: f64 = 1e8;

struct EigenPath {
    values: Vec<C64>,
    v: CMat,
    vinv: CMat,
    cond: f64,
}

/// e^{A_xi t} for one Bloch matrix, through a cached eigendecomposition when it is
/// well conditioned and through scaling-and-squaring otherwise.
pub struct SlicePropagator {
    pub matrix: BlochMatrix,
    eigen: Option<EigenPath>,
}

impl SlicePropagator {
    pub fn new(matrix: BlochMatrix) -> Result<Self> {
        let e = linalg::eig(&matrix.entries)?;
        let cond = linalg::cond2(&e.vectors)?;
        let eigen = if cond < EIGEN_COND_LIMIT {
            let vinv = linalg::solve(&e.vectors, &linalg::identity(matrix.dim()));
            Some(EigenPath {
                values: e.values,
                v: e.vectors,
                vinv,
                cond,
            })
        } else {
            None
        };
        Ok(SlicePropagator { matrix, eigen })
    }

    pub fn eigenvalues(&self) -> Option<&[C64]> {
        self.eigen.as_ref().map(|e| e.values.as_slice())
    }

    pub fn eigen_condition(&self) -> Option<f64> {
        self.eigen.as_ref().map(|e| e.cond)
    }

    pub fn apply_eigen(&self, t: f64, w: &[C64]) -> Option<Vec<C64>> {
        let e = self.eigen.as_ref()?;
        let mut c = linalg::matvec(&e.vinv, w);
        for (ci, l) in c.iter_mut().zip(&e.values) {
            *ci *= (l * t).exp();
        }
        Some(linalg::matvec(&e.v, &c))
    }

    pub fn exponential(&self, t: f64) -> CMat {
        let n = self.matrix.dim();
        let at = Mat::from_fn(n, n, |i, j| self.matrix.entries[(i, j)] * t);
        linalg::expm(&at)
    }

    pub fn apply_expm(&self, t: f64, w: &[C64]) -> Vec<C64> {
        linalg::matvec(&self.exponential(t), w)
    }

    pub fn apply(&self, t: f64, w: &[C64]) -> Result<Vec<C64>> {
        if t < 0.0 {
            return Err(Error::Precondition(format!("evolution time must be nonnegative, got {t}")));
        }
        if let Some(y) = self.apply_eigen(t, w) {
            return Ok(y);
        }
        let y = self.apply_expm(t, w);
        if y.iter().all(|z| z.is_finite()) {
            Ok(y)
        } else {
            Err(Error::IllConditionedExponential(format!(
                "non-finite scaling-and-squaring result at xi={} t={t}",
                self.matrix.xi
            )))
        }
    }

    /// Relative discrepancy between the two exponential paths, when both exist.
    pub fn cross_check(&self, t: f64, w: &[C64]) -> Option<f64> {
        let a = self.apply_eigen(t, w)?;
        let b = self.apply_expm(t, w);
        let diff: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        Some(linalg::vec_norm(&diff) / linalg::vec_norm(&b).max(1e-300))
    }
}

/// e^{A_xi t} w by scaling-and-squaring, cross-checked against the eigendecomposition.
pub fn propagate_slice(matrix: &BlochMatrix, t: f64, w: &[C64]) -> Result<Vec<C64>> {
    if t < 0.0 {
        return Err(Error::Precondition(format!("evolution time must be nonnegative, got {t}")));
    }
    let p = SlicePropagator::new(matrix.clone())?;
    let y = p.apply_expm(t, w);
    if y.iter().all(|z| z.is_finite()) {
        return Ok(y);
    }
    p.apply_eigen(t, w).ok_or_else(|| {
        Error::IllConditionedExponential(format!("both exponential paths failed at xi={}", matrix.xi))
    })
}

/// Propagators for every slice of the lattice Omega_N.
pub struct LatticePropagator {
    pub lattice: SubharmonicLattice,
    pub m: usize,
    pub slices: Vec<SlicePropagator>,
}

impl LatticePropagator {
    pub fn new(wave: &PeriodicWave, n: usize, m: usize) -> Result<Self> {
        let lat = lattice(n, wave.period)?;
        let slices = lat
            .frequencies
            .par_iter()
            .map(|&xi| SlicePropagator::new(assemble(wave, xi, m)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(LatticePropagator { lattice: lat, m, slices })
    }

    pub fn evolve_stacked(&self, slices: &[Vec<C64>], t: f64) -> Result<Vec<Vec<C64>>> {
        self.slices
            .par_iter()
            .zip(slices.par_iter())
            .map(|(p, w)| p.apply(t, w))
            .collect()
    }
}
