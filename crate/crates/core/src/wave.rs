//! Constant and periodic stationary solutions of the Lugiato-Lefever profile equation
//!
//!   -i beta phi'' - (1 + i alpha) phi + i |phi|^2 phi + F = 0.

use crate::blochop::assemble_raw;
use crate::error::{Error, Result};
use crate::fourier::{self, wavenumber};
use crate::linalg::{self, CMat};
use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LleParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

impl LleParams {
    pub fn new(alpha: f64, beta: f64, f: f64) -> Result<Self> {
        let p = LleParams { alpha, beta, f };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.abs() != 1.0 {
            return Err(Error::InvalidParams(format!("beta must be +1 or -1, got {}", self.beta)));
        }
        if !(self.f >= 0.0) || !self.f.is_finite() || !self.alpha.is_finite() {
            return Err(Error::InvalidParams(format!(
                "need finite alpha and F >= 0, got alpha={} F={}",
                self.alpha, self.f
            )));
        }
        Ok(())
    }
}

/// All constant solutions for given parameters, ordered by |phi|^2.
#[derive(Clone, Debug)]
pub struct ConstantStates {
    pub rho_roots: Vec<f64>,
    pub states: Vec<C64>,
}

impl ConstantStates {
    /// The branch connected to rho = 0 as F -> 0.
    pub fn selected(&self) -> C64 {
        self.states[0]
    }
}

fn cubic(alpha: f64, f2: f64, rho: f64) -> f64 {
    rho * (1.0 + (alpha - rho) * (alpha - rho)) - f2
}

fn bisect(alpha: f64, f2: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut glo = cubic(alpha, f2, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = cubic(alpha, f2, mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn constant_state(params: &LleParams) -> Result<ConstantStates> {
    params.validate()?;
    let (alpha, f2) = (params.alpha, params.f * params.f);
    if f2 == 0.0 {
        return Ok(ConstantStates {
            rho_roots: vec![0.0],
            states: vec![C64::new(0.0, 0.0)],
        });
    }
    // rho(1 + (alpha - rho)^2) >= rho, so every root lies in [0, F^2].
    let mut knots = vec![0.0];
    let disc = 4.0 * alpha * alpha - 3.0 * (1.0 + alpha * alpha);
    if disc > 0.0 {
        for r in [(2.0 * alpha - disc.sqrt()) / 3.0, (2.0 * alpha + disc.sqrt()) / 3.0] {
            if r > 0.0 && r < f2 {
                knots.push(r);
            }
        }
    }
    knots.push(f2);
    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ga, gb) = (cubic(alpha, f2, a), cubic(alpha, f2, b));
        if gb == 0.0 {
            roots.push(b);
        } else if (ga < 0.0) != (gb < 0.0) {
            roots.push(bisect(alpha, f2, a, b));
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    let states = roots
        .iter()
        .map(|&rho| C64::new(params.f, 0.0) / C64::new(1.0, alpha - rho))
        .collect();
    Ok(ConstantStates {
        rho_roots: roots,
        states,
    })
}

/// Data of the small-amplitude branch bifurcating from the constant state
/// at F1^2 = (1 - alpha)^2 + 1 with beta = -1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationSeed {
    pub alpha: f64,
    pub mu: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    pub k_c: f64,
}

impl BifurcationSeed {
    pub fn new(alpha: f64, mu: f64) -> Result<Self> {
        if !(alpha < 41.0 / 30.0) {
            return Err(Error::InvalidParams(format!("alpha must be below 41/30, got {alpha}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
        }
        let f1 = ((1.0 - alpha).powi(2) + 1.0).sqrt();
        Ok(BifurcationSeed {
            alpha,
            mu,
            f1,
            k_c: (2.0 - alpha).sqrt(),
        })
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.k_c
    }

    pub fn pump(&self) -> f64 {
        (self.f1 * self.f1 + self.mu).sqrt()
    }

    /// Complex amplitude multiplying cos(k_c x) mu^{1/2}.
    pub fn harmonic_coefficient(&self) -> C64 {
        let a = self.alpha;
        C64::new(3.0 * a, 3.0 * (2.0 - a)) / (self.f1 * (41.0 - 30.0 * a).sqrt())
    }

    pub fn params(&self) -> LleParams {
        LleParams {
            alpha: self.alpha,
            beta: -1.0,
            f: self.pump(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicWave {
    pub params: LleParams,
    pub period: f64,
    pub m: usize,
    pub coeffs: Vec<C64>,
    pub residual_norm: f64,
    pub even: bool,
}

pub fn bifurcation_seed(alpha: f64, mu: f64, m: usize) -> Result<PeriodicWave> {
    let seed = BifurcationSeed::new(alpha, mu)?;
    if m < 1 {
        return Err(Error::InvalidParams("M must be at least 1".into()));
    }
    let params = seed.params();
    let base = constant_state(&params)?.selected();
    let half = seed.harmonic_coefficient() * (0.5 * mu.sqrt());
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * m + 1];
    coeffs[m] = base;
    coeffs[m - 1] = half;
    coeffs[m + 1] = half;
    let mut wave = PeriodicWave {
        params,
        period: seed.period(),
        m,
        coeffs,
        residual_norm: 0.0,
        even: true,
    };
    wave.residual_norm = wave.collocation_residual();
    Ok(wave)
}

impl PeriodicWave {
    pub fn constant(params: LleParams, value: C64, period: f64, m: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * m + 1];
        coeffs[m] = value;
        let mut wave = PeriodicWave {
            params,
            period,
            m,
            coeffs,
            residual_norm: 0.0,
            even: true,
        };
        wave.residual_norm = wave.collocation_residual();
        wave
    }

    pub fn coeff(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.m {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.m as i64) as usize]
        }
    }

    pub fn evaluate(&self, xs: &[f64]) -> Vec<C64> {
        xs.iter()
            .map(|&x| fourier::eval_series(&self.coeffs, self.period, x))
            .collect()
    }

    pub fn evaluate_derivative(&self, xs: &[f64]) -> Vec<C64> {
        let d = self.derivative_coeffs();
        xs.iter()
            .map(|&x| fourier::eval_series(&d, self.period, x))
            .collect()
    }

    pub fn derivative_coeffs(&self) -> Vec<C64> {
        fourier::derivative(&self.coeffs, self.period)
    }

    /// Stacked coefficients (phi_r, phi_i) padded to truncation `m`.
    pub fn real_form(&self, m: usize) -> Vec<C64> {
        real_form(&fourier::resize(&self.coeffs, m))
    }

    /// Stacked coefficients of (phi_r', phi_i') padded to truncation `m`.
    pub fn derivative_real_form(&self, m: usize) -> Vec<C64> {
        real_form(&fourier::resize(&self.derivative_coeffs(), m))
    }

    /// Sup norm of the profile residual on a grid at least four times finer than 2M+1.
    pub fn collocation_residual(&self) -> f64 {
        let n = (4 * (2 * self.m + 1)).next_power_of_two();
        profile_residual_on_grid(&self.params, self.period, &self.coeffs, n)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// T times the period average of the profile equation; the phi'' term averages to zero.
    pub fn energy_identity(&self) -> f64 {
        let (alpha, f) = (self.params.alpha, self.params.f);
        let avg = fourier::pointwise(&[&self.coeffs], 0, |z| {
            let p = z[0];
            -C64::new(1.0, alpha) * p + C64::new(0.0, p.norm_sqr()) * p
        })[0]
            + f;
        self.period * avg.norm()
    }

    pub fn max_tail(&self) -> f64 {
        let half = (self.m / 2) as i64;
        (-(self.m as i64)..=self.m as i64)
            .filter(|k| k.abs() > half)
            .map(|k| self.coeff(k).norm())
            .fold(0.0, f64::max)
    }

    pub fn resized(&self, m: usize) -> PeriodicWave {
        PeriodicWave {
            coeffs: fourier::resize(&self.coeffs, m),
            m,
            ..self.clone()
        }
    }

    pub fn to_file(&self) -> WaveFile {
        WaveFile {
            alpha: self.params.alpha,
            beta: self.params.beta,
            f: self.params.f,
            period: self.period,
            m: self.m,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            residual_norm: self.residual_norm,
            even: self.even,
        }
    }

    pub fn from_file(file: &WaveFile) -> Result<Self> {
        let params = LleParams::new(file.alpha, file.beta, file.f)?;
        if file.coeffs.len() != 2 * file.m + 1 {
            return Err(Error::Format(format!(
                "expected {} coefficients for M={}, found {}",
                2 * file.m + 1,
                file.m,
                file.coeffs.len()
            )));
        }
        if !(file.period > 0.0) {
            return Err(Error::Format(format!("period must be positive, got {}", file.period)));
        }
        Ok(PeriodicWave {
            params,
            period: file.period,
            m: file.m,
            coeffs: file.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect(),
            residual_norm: file.residual_norm,
            even: file.even,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("wave serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: WaveFile = serde_json::from_str(s)?;
        Self::from_file(&file)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveFile {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub coeffs: Vec<[f64; 2]>,
    pub residual_norm: f64,
    pub even: bool,
}

/// Coefficients of a complex function -> stacked coefficients of its real and imaginary parts.
pub fn real_form(c: &[C64]) -> Vec<C64> {
    let (r, i) = fourier::split_real_imag(c);
    r.into_iter().chain(i).collect()
}

/// Inverse of [`real_form`].
pub fn complex_form(v: &[C64]) -> Vec<C64> {
    let n = v.len() / 2;
    (0..n).map(|k| v[k] + C64::new(0.0, 1.0) * v[n + k]).collect()
}

fn profile_residual_on_grid(params: &LleParams, period: f64, coeffs: &[C64], n: usize) -> Vec<C64> {
    let m = (coeffs.len() - 1) / 2;
    let second: Vec<C64> = coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let kap = wavenumber(idx as i64 - m as i64, period);
            -c * (kap * kap)
        })
        .collect();
    let phi = fourier::to_grid(coeffs, n);
    let phi2 = fourier::to_grid(&second, n);
    let (alpha, beta, f) = (params.alpha, params.beta, params.f);
    phi.iter()
        .zip(&phi2)
        .map(|(&p, &pxx)| {
            C64::new(0.0, -beta) * pxx - C64::new(1.0, alpha) * p
                + C64::new(0.0, p.norm_sqr()) * p
                + f
        })
        .collect()
}

/// Galerkin residual coefficients |k| <= M with an alias-free cubic term.
fn galerkin_residual(params: &LleParams, period: f64, coeffs: &[C64]) -> Vec<C64> {
    let m = (coeffs.len() - 1) / 2;
    let cubic = fourier::pointwise(&[coeffs], m, |z| C64::new(0.0, z[0].norm_sqr()) * z[0]);
    let (alpha, beta) = (params.alpha, params.beta);
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, &c)| {
            let k = idx as i64 - m as i64;
            let kap = wavenumber(k, period);
            let mut r = C64::new(0.0, beta * kap * kap) * c - C64::new(1.0, alpha) * c + cubic[idx];
            if k == 0 {
                r += params.f;
            }
            r
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub adaptive: bool,
    pub tail_tol: f64,
    pub m_max: usize,
    pub cond_limit: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-11,
            max_iter: 50,
            adaptive: true,
            tail_tol: 1e-12,
            m_max: 512,
            cond_limit: 1e12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub wave: PeriodicWave,
    /// Collocation residual before each iteration, across all truncation levels.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub truncations: Vec<usize>,
}

pub fn newton_solve(seed: &PeriodicWave, tol: f64, max_iter: usize) -> Result<PeriodicWave> {
    let opts = NewtonOptions {
        tol,
        max_iter,
        ..NewtonOptions::default()
    };
    Ok(newton_solve_with(seed, &opts)?.wave)
}

pub fn newton_solve_with(seed: &PeriodicWave, opts: &NewtonOptions) -> Result<NewtonReport> {
    seed.params.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    if seed.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParams("seed has non-finite coefficients".into()));
    }
    let even = seed.even || is_even(&seed.coeffs, 1e-12);
    let mut current = seed.clone();
    current.even = even;
    let mut history = Vec::new();
    let mut truncations = Vec::new();
    let mut total = 0;
    loop {
        truncations.push(current.m);
        let (coeffs, iters) = newton_fixed_m(&current, seed, even, opts, &mut history)?;
        total += iters;
        current.coeffs = coeffs;
        if even {
            symmetrize(&mut current.coeffs);
        }
        current.residual_norm = current.collocation_residual();
        if !opts.adaptive || current.max_tail() < opts.tail_tol || 2 * current.m > opts.m_max {
            break;
        }
        current = current.resized(2 * current.m);
    }
    if current.residual_norm > opts.tol {
        return Err(Error::NoConvergence {
            iterations: total,
            residual: current.residual_norm,
        });
    }
    Ok(NewtonReport {
        wave: current,
        residual_history: history,
        iterations: total,
        truncations,
    })
}

fn is_even(c: &[C64], tol: f64) -> bool {
    let n = c.len();
    let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    (0..n).all(|i| (c[i] - c[n - 1 - i]).norm() <= tol * scale)
}

fn symmetrize(c: &mut [C64]) {
    let n = c.len();
    for i in 0..n / 2 {
        let avg = (c[i] + c[n - 1 - i]) * 0.5;
        c[i] = avg;
        c[n - 1 - i] = avg;
    }
}

fn newton_fixed_m(
    start: &PeriodicWave,
    seed: &PeriodicWave,
    even: bool,
    opts: &NewtonOptions,
    history: &mut Vec<f64>,
) -> Result<(Vec<C64>, usize)> {
    let m = start.m;
    let mut u = real_form(&start.coeffs);
    let seed_u = real_form(&fourier::resize(&seed.coeffs, m));
    let seed_dir = real_form(&fourier::resize(&seed.derivative_coeffs(), m));
    let mut best = (f64::INFINITY, u.clone());
    for it in 0..=opts.max_iter {
        let coeffs = complex_form(&u);
        let colloc = PeriodicWave {
            coeffs: coeffs.clone(),
            ..start.clone()
        }
        .collocation_residual();
        history.push(colloc);
        if colloc < best.0 {
            best = (colloc, u.clone());
        }
        if colloc <= 0.01 * opts.tol {
            return Ok((coeffs, it));
        }
        if it == opts.max_iter {
            break;
        }
        let res = real_form(&galerkin_residual(&start.params, start.period, &coeffs));
        let a0 = assemble_raw(&start.params, start.period, &coeffs, 0.0, m);
        let delta = if even {
            even_step(&a0, &res, m, opts.cond_limit)?
        } else {
            bordered_step(&a0, &res, &seed_dir, &u, &seed_u, opts.cond_limit)?
        };
        let step_norm = linalg::vec_norm(&delta);
        for (ui, di) in u.iter_mut().zip(&delta) {
            *ui += di;
        }
        if step_norm <= 1e-15 * linalg::vec_norm(&u) {
            // Stagnated at roundoff; accept the best iterate if it meets the tolerance.
            let coeffs = complex_form(&u);
            let colloc = PeriodicWave {
                coeffs: coeffs.clone(),
                ..start.clone()
            }
            .collocation_residual();
            history.push(colloc);
            if colloc <= opts.tol {
                return Ok((coeffs, it + 1));
            }
        }
    }
    if best.0 <= opts.tol {
        return Ok((complex_form(&best.1), opts.max_iter));
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: best.0,
    })
}

fn even_step(a0: &CMat, res: &[C64], m: usize, cond_limit: f64) -> Result<Vec<C64>> {
    let nm = 2 * m + 1;
    let half = m + 1;
    let dim = 2 * half;
    let full_index = |comp: usize, k: i64| comp * nm + (k + m as i64) as usize;
    let reduced = Mat::from_fn(dim, dim, |row, col| {
        let (cr, kr) = (row / half, (row % half) as i64);
        let (cc, kc) = (col / half, (col % half) as i64);
        let mut v = a0[(full_index(cr, kr), full_index(cc, kc))];
        if kc > 0 {
            v += a0[(full_index(cr, kr), full_index(cc, -kc))];
        }
        v
    });
    check_conditioning(&reduced, cond_limit)?;
    let rhs: Vec<C64> = (0..dim)
        .map(|row| -res[full_index(row / half, (row % half) as i64)])
        .collect();
    let x = linalg::solve_vec(&reduced, &rhs);
    let mut delta = vec![C64::new(0.0, 0.0); 2 * nm];
    for row in 0..dim {
        let (comp, k) = (row / half, (row % half) as i64);
        delta[full_index(comp, k)] = x[row];
        delta[full_index(comp, -k)] = x[row];
    }
    Ok(delta)
}

fn bordered_step(
    a0: &CMat,
    res: &[C64],
    dir: &[C64],
    u: &[C64],
    seed_u: &[C64],
    cond_limit: f64,
) -> Result<Vec<C64>> {
    let n = a0.nrows();
    let scale = linalg::vec_norm(dir).max(1e-300);
    let bordered = Mat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => a0[(i, j)],
        (true, false) => dir[i] / scale,
        (false, true) => dir[j].conj() / scale,
        (false, false) => C64::new(0.0, 0.0),
    });
    check_conditioning(&bordered, cond_limit)?;
    let phase: C64 = dir
        .iter()
        .zip(u.iter().zip(seed_u))
        .map(|(d, (a, b))| d.conj() * (a - b))
        .sum::<C64>()
        / scale;
    let mut rhs: Vec<C64> = res.iter().map(|r| -r).collect();
    rhs.push(-phase);
    let mut x = linalg::solve_vec(&bordered, &rhs);
    x.truncate(n);
    Ok(x)
}

fn check_conditioning(a: &CMat, limit: f64) -> Result<()> {
    let cond = linalg::cond2(a)?;
    if !(cond < limit) {
        return Err(Error::SingularJacobian { cond });
    }
    Ok(())
}
