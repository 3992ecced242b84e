use crate::error::{Error, Result};
use crate::transforms::{bloch_t, inverse_bloch, BlochCoefficients, FieldSample, SubharmonicLattice};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// A two-component perturbation (v_r, v_i) over [0, NT).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationField {
    pub r: FieldSample,
    pub i: FieldSample,
}

impl PerturbationField {
    pub fn new(r: FieldSample, i: FieldSample) -> Result<Self> {
        r.check_compatible(&i)?;
        Ok(PerturbationField { r, i })
    }

    pub fn zeros(n: usize, period: f64, n_grid: usize) -> Self {
        PerturbationField {
            r: FieldSample::zeros(n, period, n_grid),
            i: FieldSample::zeros(n, period, n_grid),
        }
    }

    pub fn from_fn(
        n: usize,
        period: f64,
        n_grid: usize,
        fr: impl Fn(f64) -> f64,
        fi: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Ok(PerturbationField {
            r: FieldSample::from_fn(n, period, n_grid, |x| C64::new(fr(x), 0.0))?,
            i: FieldSample::from_fn(n, period, n_grid, |x| C64::new(fi(x), 0.0))?,
        })
    }

    pub fn n(&self) -> usize {
        self.r.n
    }

    pub fn period(&self) -> f64 {
        self.r.period
    }

    pub fn n_grid(&self) -> usize {
        self.r.n_grid
    }

    pub fn check_compatible(&self, other: &PerturbationField) -> Result<()> {
        self.r.check_compatible(&other.r)
    }

    pub fn inner(&self, other: &PerturbationField) -> C64 {
        self.r.inner(&other.r) + self.i.inner(&other.i)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.r.norm_l2().powi(2) + self.i.norm_l2().powi(2)).sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.r
            .values
            .iter()
            .zip(&self.i.values)
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt())
            .sum::<f64>()
            * self.r.dx()
    }

    /// max(||.||_{L1}, ||.||_{L2}).
    pub fn norm_l1_l2(&self) -> f64 {
        self.norm_l1().max(self.norm_l2())
    }

    pub fn norm_sup(&self) -> f64 {
        self.r
            .values
            .iter()
            .zip(&self.i.values)
            .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let s = self.norm_sup().max(1e-300);
        self.r.values.iter().chain(&self.i.values).all(|z| z.im.abs() <= tol * s)
    }

    pub fn combine(&self, a: C64, other: &PerturbationField, b: C64) -> PerturbationField {
        let mix = |x: &FieldSample, y: &FieldSample| FieldSample {
            values: x.values.iter().zip(&y.values).map(|(p, q)| a * p + b * q).collect(),
            ..x.clone()
        };
        PerturbationField {
            r: mix(&self.r, &other.r),
            i: mix(&self.i, &other.i),
        }
    }

    pub fn sub(&self, other: &PerturbationField) -> PerturbationField {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &PerturbationField) -> PerturbationField {
        self.combine(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn scaled(&self, s: C64) -> PerturbationField {
        self.combine(s, self, C64::new(0.0, 0.0))
    }

    /// Per-slice stacked coefficients (r modes |l| <= m, then i modes).
    pub fn bloch_stacked(&self, m: usize) -> Result<(SubharmonicLattice, usize, Vec<Vec<C64>>)> {
        let br = bloch_t(&self.r)?;
        let bi = bloch_t(&self.i)?;
        if 2 * m + 1 >= br.n_cell {
            return Err(Error::Precondition(format!(
                "cell resolution {} too coarse for truncation M={m}",
                br.n_cell
            )));
        }
        let slices = (0..br.lattice.len())
            .map(|s| {
                let mut v = br.truncated(s, m);
                v.extend(bi.truncated(s, m));
                v
            })
            .collect();
        Ok((br.lattice, br.n_cell, slices))
    }

    pub fn from_stacked(lattice: &SubharmonicLattice, n_cell: usize, slices: &[Vec<C64>]) -> PerturbationField {
        let half = slices[0].len() / 2;
        let mut br = BlochCoefficients::zeros(lattice.clone(), n_cell);
        let mut bi = BlochCoefficients::zeros(lattice.clone(), n_cell);
        for (s, v) in slices.iter().enumerate() {
            br.set_truncated(s, &v[..half]);
            bi.set_truncated(s, &v[half..]);
        }
        PerturbationField {
            r: inverse_bloch(&br),
            i: inverse_bloch(&bi),
        }
    }

    /// Smooth real field with random Fourier modes |k| <= N m / 2 on [0, NT), drawn from
    /// ChaCha8 seeded by `seed`, with amplitudes decaying like 1/(1 + (k/N)^2).
    /// Normalized to ||.||_{L1 cap L2} = 1.
    pub fn random_smooth(n: usize, period: f64, m: usize, seed: u64) -> Result<PerturbationField> {
        use rand::{Rng, SeedableRng};
        let n_grid = n * crate::transforms::cell_points(m);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k_max = (n * m / 2).max(1);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> FieldSample {
            let mut spec = vec![C64::new(0.0, 0.0); n_grid];
            for k in 0..=k_max {
                let amp = 1.0 / (1.0 + (k as f64 / n as f64).powi(2));
                let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * amp;
                if k == 0 {
                    spec[0] = C64::new(c.re, 0.0);
                } else {
                    spec[k] = c;
                    spec[n_grid - k] = c.conj();
                }
            }
            crate::fourier::fft_inverse(&mut spec);
            FieldSample {
                n,
                period,
                n_grid,
                values: spec.iter().map(|z| C64::new(z.re, 0.0)).collect(),
            }
        };
        let r = draw(&mut rng);
        let i = draw(&mut rng);
        let f = PerturbationField { r, i };
        let s = f.norm_l1_l2();
        Ok(f.scaled(C64::new(1.0 / s, 0.0)))
    }

    /// Galerkin projection onto slice modes |l| <= m.
    pub fn projected(&self, m: usize) -> Result<PerturbationField> {
        let (lat, n_cell, slices) = self.bloch_stacked(m)?;
        Ok(Self::from_stacked(&lat, n_cell, &slices))
    }

    /// T-periodic stacked coefficient vector sampled on an N-cell grid.
    pub fn from_periodic(coeffs: &[C64], n: usize, period: f64, n_cell: usize) -> Result<PerturbationField> {
        let half = coeffs.len() / 2;
        let sample = |c: &[C64]| -> Result<FieldSample> {
            let cell = crate::fourier::to_grid(c, n_cell);
            FieldSample::new(n, period, (0..n * n_cell).map(|k| cell[k % n_cell]).collect())
        };
        Ok(PerturbationField {
            r: sample(&coeffs[..half])?,
            i: sample(&coeffs[half..])?,
        })
    }
}
