//! Subharmonic Bloch transform on [0, NT) and its inverse.
//!
//! Forward convention: g^(z) = int_0^{NT} exp(-i z y) g(y) dy, approximated by the DFT
//! scaled by NT/n_grid. The DFT frequency 2 pi k/(NT) = xi_j + 2 pi l/T is assigned to
//! slice j, mode l, so B_T(g)(xi_j, x) = sum_l g^(xi_j + 2 pi l/T) exp(2 pi i l x/T).

use crate::error::{Error, Result};
use crate::fourier::{fft_forward, fft_inverse};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicLattice {
    pub n: usize,
    pub period: f64,
    pub indices: Vec<i64>,
    pub frequencies: Vec<f64>,
    pub spacing: f64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// 2 pi j/(NT) evaluated on the reduced fraction j/N, so nested lattices share bits.
pub fn lattice_frequency(j: i64, n: usize, period: f64) -> f64 {
    let g = gcd(j.unsigned_abs(), n as u64).max(1);
    let (jr, nr) = (j / g as i64, n as u64 / g);
    2.0 * PI * jr as f64 / (nr as f64 * period)
}

pub fn lattice(n: usize, period: f64) -> Result<SubharmonicLattice> {
    if n < 1 || !(period > 0.0) {
        return Err(Error::InvalidParams(format!("lattice needs N >= 1 and T > 0, got N={n} T={period}")));
    }
    let n_i = n as i64;
    let indices: Vec<i64> = if n % 2 == 0 {
        (-n_i / 2..n_i / 2).collect()
    } else {
        (-(n_i - 1) / 2..=(n_i - 1) / 2).collect()
    };
    let frequencies = indices.iter().map(|&j| lattice_frequency(j, n, period)).collect();
    Ok(SubharmonicLattice {
        n,
        period,
        indices,
        frequencies,
        spacing: 2.0 * PI / (n as f64 * period),
    })
}

impl SubharmonicLattice {
    pub fn zero_index(&self) -> usize {
        self.indices.iter().position(|&j| j == 0).expect("0 is in every lattice")
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Per-cell resolution used for fields on a lattice: a power of two >= 4M + 2.
pub fn cell_points(m: usize) -> usize {
    (4 * m + 2).next_power_of_two()
}

/// Complex scalar samples over [0, NT) at x_k = k NT/n_grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub period: f64,
    pub n_grid: usize,
    #[serde(with = "complex_pairs")]
    pub values: Vec<C64>,
}

impl FieldSample {
    pub fn new(n: usize, period: f64, values: Vec<C64>) -> Result<Self> {
        let n_grid = values.len();
        if n == 0 || n_grid == 0 || n_grid % n != 0 {
            return Err(Error::GridMismatch { n_grid, n });
        }
        Ok(FieldSample {
            n,
            period,
            n_grid,
            values,
        })
    }

    pub fn from_fn(n: usize, period: f64, n_grid: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        let h = n as f64 * period / n_grid as f64;
        Self::new(n, period, (0..n_grid).map(|k| f(k as f64 * h)).collect())
    }

    pub fn zeros(n: usize, period: f64, n_grid: usize) -> Self {
        FieldSample {
            n,
            period,
            n_grid,
            values: vec![C64::new(0.0, 0.0); n_grid],
        }
    }

    pub fn n_cell(&self) -> usize {
        self.n_grid / self.n
    }

    pub fn dx(&self) -> f64 {
        self.n as f64 * self.period / self.n_grid as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_grid).map(|k| k as f64 * self.dx()).collect()
    }

    /// L2(0, NT) inner product by the trapezoid rule (exact for trigonometric polynomials).
    pub fn inner(&self, other: &FieldSample) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.dx()
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.dx()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn check_compatible(&self, other: &FieldSample) -> Result<()> {
        if self.n != other.n || self.n_grid != other.n_grid || self.period != other.period {
            return Err(Error::GridMismatch {
                n_grid: other.n_grid,
                n: self.n,
            });
        }
        Ok(())
    }

    /// Spectral interpolation onto a grid `factor` times finer.
    pub fn upsampled(&self, factor: usize) -> FieldSample {
        let n = self.n_grid;
        let big = n * factor;
        let mut spec = self.values.clone();
        fft_forward(&mut spec);
        let mut out = vec![C64::new(0.0, 0.0); big];
        for (k, v) in spec.iter().enumerate() {
            let ks = if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
            out[ks.rem_euclid(big as i64) as usize] = *v;
        }
        fft_inverse(&mut out);
        let s = 1.0 / n as f64;
        FieldSample {
            n: self.n,
            period: self.period,
            n_grid: big,
            values: out.into_iter().map(|v| v * s).collect(),
        }
    }
}

/// B_T(g)(xi_j, .) for every lattice slice, as n_cell Fourier modes l in [-n_cell/2, n_cell/2).
#[derive(Clone, Debug, PartialEq)]
pub struct BlochCoefficients {
    pub lattice: SubharmonicLattice,
    pub n_cell: usize,
    pub per_xi: Vec<Vec<C64>>,
}

impl BlochCoefficients {
    pub fn zeros(lattice: SubharmonicLattice, n_cell: usize) -> Self {
        let per_xi = vec![vec![C64::new(0.0, 0.0); n_cell]; lattice.len()];
        BlochCoefficients {
            lattice,
            n_cell,
            per_xi,
        }
    }

    pub fn mode(&self, slice: usize, l: i64) -> C64 {
        let h = (self.n_cell / 2) as i64;
        if l < -h || l >= h {
            C64::new(0.0, 0.0)
        } else {
            self.per_xi[slice][(l + h) as usize]
        }
    }

    pub fn set_mode(&mut self, slice: usize, l: i64, v: C64) {
        let h = (self.n_cell / 2) as i64;
        assert!(l >= -h && l < h, "mode {l} outside the cell resolution");
        self.per_xi[slice][(l + h) as usize] = v;
    }

    /// Modes |l| <= m of one slice.
    pub fn truncated(&self, slice: usize, m: usize) -> Vec<C64> {
        (-(m as i64)..=m as i64).map(|l| self.mode(slice, l)).collect()
    }

    pub fn set_truncated(&mut self, slice: usize, coeffs: &[C64]) {
        let m = (coeffs.len() - 1) / 2;
        self.per_xi[slice].iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (i, c) in coeffs.iter().enumerate() {
            self.set_mode(slice, i as i64 - m as i64, *c);
        }
    }

    /// Values of B_T(g)(xi_j, x) on the cell grid x = r T/n_cell.
    pub fn slice_values(&self, slice: usize) -> Vec<C64> {
        let n = self.n_cell;
        let h = (n / 2) as i64;
        let mut buf = vec![C64::new(0.0, 0.0); n];
        for (i, v) in self.per_xi[slice].iter().enumerate() {
            buf[(i as i64 - h).rem_euclid(n as i64) as usize] = *v;
        }
        fft_inverse(&mut buf);
        buf
    }

    /// L2(0,T) inner product of two slices.
    pub fn slice_inner(&self, other: &BlochCoefficients, slice: usize) -> C64 {
        self.per_xi[slice]
            .iter()
            .zip(&other.per_xi[slice])
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.lattice.period
    }

    pub fn to_dump(&self) -> BlochDump {
        BlochDump {
            n: self.lattice.n,
            period: self.lattice.period,
            n_cell: self.n_cell,
            slices: self
                .lattice
                .indices
                .iter()
                .zip(&self.per_xi)
                .map(|(j, c)| (j.to_string(), c.iter().map(|z| [z.re, z.im]).collect()))
                .collect(),
        }
    }
}

/// JSON form of Bloch coefficients keyed by the lattice index j.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlochDump {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub period: f64,
    pub n_cell: usize,
    pub slices: std::collections::BTreeMap<String, Vec<[f64; 2]>>,
}

fn slice_mode_of(k: usize, n: usize, n_grid: usize, lat: &SubharmonicLattice) -> (usize, i64) {
    // k = j + N l (mod n_grid) with l in [-n_cell/2, n_cell/2)
    let n_cell = (n_grid / n) as i64;
    let kk = k as i64;
    let j_res = kk.rem_euclid(n as i64);
    let slice = lat
        .indices
        .iter()
        .position(|&j| j.rem_euclid(n as i64) == j_res)
        .expect("residue class present");
    let j = lat.indices[slice];
    let l = ((kk - j) / n as i64).rem_euclid(n_cell);
    let l = if l >= n_cell / 2 { l - n_cell } else { l };
    (slice, l)
}

pub fn bloch_t(g: &FieldSample) -> Result<BlochCoefficients> {
    if g.n == 0 || g.n_grid % g.n != 0 {
        return Err(Error::GridMismatch {
            n_grid: g.n_grid,
            n: g.n,
        });
    }
    let lat = lattice(g.n, g.period)?;
    let n_cell = g.n_cell();
    let mut spec = g.values.clone();
    fft_forward(&mut spec);
    let scale = g.n as f64 * g.period / g.n_grid as f64;
    let mut out = BlochCoefficients::zeros(lat, n_cell);
    for (k, v) in spec.iter().enumerate() {
        let (slice, l) = slice_mode_of(k, g.n, g.n_grid, &out.lattice);
        out.set_mode(slice, l, v * scale);
    }
    Ok(out)
}

pub fn inverse_bloch(coeffs: &BlochCoefficients) -> FieldSample {
    let lat = &coeffs.lattice;
    let n = lat.n;
    let n_grid = n * coeffs.n_cell;
    let scale = n_grid as f64 / (n as f64 * lat.period);
    let mut spec = vec![C64::new(0.0, 0.0); n_grid];
    let h = (coeffs.n_cell / 2) as i64;
    for (slice, &j) in lat.indices.iter().enumerate() {
        for (i, v) in coeffs.per_xi[slice].iter().enumerate() {
            let l = i as i64 - h;
            let k = (j + n as i64 * l).rem_euclid(n_grid as i64) as usize;
            spec[k] = v * scale;
        }
    }
    fft_inverse(&mut spec);
    let s = 1.0 / n_grid as f64;
    FieldSample {
        n,
        period: lat.period,
        n_grid,
        values: spec.into_iter().map(|v| v * s).collect(),
    }
}

/// Both sides of <f, g>_{L2(0,NT)} = (1/(N T^2)) sum_xi <B_T f, B_T g>_{L2(0,T)}.
pub fn parseval_subharmonic(f: &FieldSample, g: &FieldSample) -> Result<(C64, C64)> {
    f.check_compatible(g)?;
    let lhs = f.inner(g);
    let (bf, bg) = (bloch_t(f)?, bloch_t(g)?);
    let sum: C64 = (0..bf.lattice.len()).map(|s| bf.slice_inner(&bg, s)).sum();
    let rhs = sum / (f.n as f64 * f.period * f.period);
    Ok((lhs, rhs))
}

#[derive(Clone, Debug)]
pub struct ProductIdentity {
    /// max over slices and modes of |B_T(fg) - f B_T(g)|, relative to max |B_T(fg)|.
    pub max_error: f64,
    pub inner_full: C64,
    pub inner_cell: C64,
}

impl ProductIdentity {
    pub fn inner_error(&self) -> f64 {
        (self.inner_full - self.inner_cell).norm() / self.inner_full.norm().max(1e-300)
    }
}

/// Checks B_T(fg) = f B_T(g) and <f, g>_{L2(0,NT)} = (1/T) <f, B_T(g)(0, .)>_{L2(0,T)}
/// for a T-periodic `f` sampled on one cell (f.n == 1). Both fields are first
/// interpolated onto a twice finer grid so the product is not aliased.
pub fn product_identity_check(f: &FieldSample, g: &FieldSample) -> Result<ProductIdentity> {
    if f.n != 1 || f.n_grid * g.n != g.n_grid || f.period != g.period {
        return Err(Error::GridMismatch {
            n_grid: g.n_grid,
            n: g.n,
        });
    }
    let f2 = f.upsampled(2);
    let g2 = g.upsampled(2);
    let n_cell = f2.n_grid;
    let fg = FieldSample {
        values: g2
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| f2.values[k % n_cell] * v)
            .collect(),
        ..g2.clone()
    };
    let lhs = bloch_t(&fg)?;
    let bg = bloch_t(&g2)?;
    let mut max_err: f64 = 0.0;
    let mut max_ref: f64 = 0.0;
    for s in 0..lhs.lattice.len() {
        let vals = bg.slice_values(s);
        let prod: Vec<C64> = vals.iter().zip(&f2.values).map(|(a, b)| a * b).collect();
        let mut spec = prod;
        fft_forward(&mut spec);
        let h = (n_cell / 2) as i64;
        for l in -h..h {
            let rhs = spec[l.rem_euclid(n_cell as i64) as usize] / n_cell as f64;
            let lv = lhs.mode(s, l);
            max_err = max_err.max((lv - rhs).norm());
            max_ref = max_ref.max(lv.norm());
        }
    }
    let g_tiled_inner = {
        let ft = FieldSample {
            values: (0..g2.n_grid).map(|k| f2.values[k % n_cell]).collect(),
            ..g2.clone()
        };
        ft.inner(&g2)
    };
    let mut fc = f2.values.clone();
    fft_forward(&mut fc);
    let zero = bg.lattice.zero_index();
    let h = (n_cell / 2) as i64;
    let inner_cell: C64 = (-h..h)
        .map(|l| (fc[l.rem_euclid(n_cell as i64) as usize] / n_cell as f64).conj() * bg.mode(zero, l))
        .sum::<C64>()
        * f.period
        / f.period;
    Ok(ProductIdentity {
        max_error: if max_ref > 0.0 { max_err / max_ref } else { max_err },
        inner_full: g_tiled_inner,
        inner_cell,
    })
}

/// Windowed surrogate for the continuum Bloch transform: `v` on [0, N_win T) must
/// vanish to 1e-10 of its sup norm at the window edge.
pub fn bloch_localized(v: &FieldSample) -> Result<BlochCoefficients> {
    let leak = window_leak(v);
    if leak > 1e-10 {
        return Err(Error::WindowLeak { leak, t: 0.0 });
    }
    bloch_t(v)
}

/// Edge magnitude relative to the sup norm, over the first and last 1% of the window.
pub fn window_leak(v: &FieldSample) -> f64 {
    let sup = v.norm_sup();
    if sup == 0.0 {
        return 0.0;
    }
    let w = (v.n_grid / 100).max(1);
    let edge = v.values[..w]
        .iter()
        .chain(&v.values[v.n_grid - w..])
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    edge / sup
}

pub(crate) mod complex_pairs {
    use num_complex::Complex64 as C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|p| C64::new(p[0], p[1])).collect())
    }
}
