//! Truncated Fourier series on one period, stored symmetrically as k = -M..=M.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub fn fft_forward(values: &mut [C64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(values.len()).process(values);
}

pub fn fft_inverse(values: &mut [C64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(values.len()).process(values);
}

/// Smallest power of two that holds an alias-free cubic product of modes |k| <= m.
pub fn padded_len(m: usize) -> usize {
    (4 * m + 2).next_power_of_two()
}

pub fn wavenumber(k: i64, period: f64) -> f64 {
    2.0 * PI * k as f64 / period
}

/// Sample sum_k c_k exp(2 pi i k j / n) for j = 0..n.
pub fn to_grid(coeffs: &[C64], n: usize) -> Vec<C64> {
    let m = (coeffs.len() - 1) / 2;
    assert!(n > 2 * m, "grid too coarse for the series");
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (idx, c) in coeffs.iter().enumerate() {
        let k = idx as i64 - m as i64;
        buf[k.rem_euclid(n as i64) as usize] = *c;
    }
    fft_inverse(&mut buf);
    buf
}

/// Fourier coefficients |k| <= m of grid samples over one period.
pub fn from_grid(values: &[C64], m: usize) -> Vec<C64> {
    let n = values.len();
    assert!(n > 2 * m, "grid too coarse for the requested modes");
    let mut buf = values.to_vec();
    fft_forward(&mut buf);
    let scale = 1.0 / n as f64;
    (-(m as i64)..=m as i64)
        .map(|k| buf[k.rem_euclid(n as i64) as usize] * scale)
        .collect()
}

pub fn derivative(coeffs: &[C64], period: f64) -> Vec<C64> {
    let m = (coeffs.len() - 1) / 2;
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| C64::new(0.0, wavenumber(idx as i64 - m as i64, period)) * c)
        .collect()
}

/// Coefficients of the real and imaginary parts of the function with coefficients `c`.
pub fn split_real_imag(c: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let n = c.len();
    let re = (0..n)
        .map(|i| (c[i] + c[n - 1 - i].conj()) * 0.5)
        .collect();
    let im = (0..n)
        .map(|i| (c[i] - c[n - 1 - i].conj()) * C64::new(0.0, -0.5))
        .collect();
    (re, im)
}

/// Coefficients |k| <= m_out of a pointwise expression of several series.
pub fn pointwise<F>(inputs: &[&[C64]], m_out: usize, f: F) -> Vec<C64>
where
    F: Fn(&[C64]) -> C64,
{
    let m_in = inputs.iter().map(|c| (c.len() - 1) / 2).max().unwrap_or(0);
    let n = padded_len(m_in.max(m_out));
    let grids: Vec<Vec<C64>> = inputs.iter().map(|c| to_grid(c, n)).collect();
    let mut scratch = vec![C64::new(0.0, 0.0); inputs.len()];
    let out: Vec<C64> = (0..n)
        .map(|j| {
            for (s, g) in scratch.iter_mut().zip(&grids) {
                *s = g[j];
            }
            f(&scratch)
        })
        .collect();
    from_grid(&out, m_out)
}

/// Sum of c_k exp(i k 2 pi x / T) at arbitrary points.
pub fn eval_series(coeffs: &[C64], period: f64, x: f64) -> C64 {
    let m = (coeffs.len() - 1) as i64 / 2;
    let w = 2.0 * PI * x / period;
    let mut acc = C64::new(0.0, 0.0);
    for (idx, c) in coeffs.iter().enumerate() {
        let k = idx as i64 - m;
        acc += c * C64::from_polar(1.0, w * k as f64);
    }
    acc
}

pub fn resize(coeffs: &[C64], m_new: usize) -> Vec<C64> {
    let m = (coeffs.len() - 1) / 2;
    (-(m_new as i64)..=m_new as i64)
        .map(|k| {
            if k.unsigned_abs() as usize <= m {
                coeffs[(k + m as i64) as usize]
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect()
}
