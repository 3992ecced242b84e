//! Gaussian lattice sums over Omega_N, their integrals over [-pi/T, pi/T], and the gaps between them.

pub mod extended;
pub mod quad;

use crate::error::{Error, Result};
use crate::transforms::lattice;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use extended::{sum_plain_extended, sum_weighted_extended};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSumInput {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub period: f64,
    pub d: f64,
    pub t: f64,
}

impl GaussianSumInput {
    pub fn new(n: usize, period: f64, d: f64, t: f64) -> Result<Self> {
        if n < 1 || !(period > 0.0) || !(d > 0.0) || !(t > 0.0) || !(period * d * t).is_finite() {
            return Err(Error::InvalidParams(format!(
                "lattice sums need N >= 1 and positive T, d, t; got N={n} T={period} d={d} t={t}"
            )));
        }
        Ok(GaussianSumInput { n, period, d, t })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.period)
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.n, self.t)
    }
}

/// Compensated summation.
pub fn kahan_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for x in terms {
        let y = x - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

fn lattice_sum(input: &GaussianSumInput, weight: impl Fn(f64) -> f64) -> f64 {
    let lat = lattice(input.n, input.period).expect("validated input");
    let s = 2.0 * (input.d * input.t);
    let sum = kahan_sum(
        lat.frequencies
            .iter()
            .filter(|&&xi| xi != 0.0)
            .map(|&xi| weight(xi) * (-s * xi * xi).exp()),
    );
    sum * input.spacing()
}

/// (2 pi / NT) sum over Omega_N \ {0} of exp(-2 d xi^2 t).
pub fn sum_plain(input: &GaussianSumInput) -> f64 {
    lattice_sum(input, |_| 1.0)
}

/// (2 pi / NT) sum over Omega_N of xi^2 exp(-2 d xi^2 t).
pub fn sum_weighted(input: &GaussianSumInput) -> f64 {
    lattice_sum(input, |xi| xi * xi)
}

fn check_positive(period: f64, d: f64, t: f64) -> Result<()> {
    if !(period > 0.0) || !(d > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "integrals need T, d > 0 and t >= 0; got T={period} d={d} t={t}"
        )));
    }
    Ok(())
}

/// Integral of exp(-2 d xi^2 t) over [-pi/T, pi/T].
pub fn integral_plain(period: f64, d: f64, t: f64) -> Result<f64> {
    check_positive(period, d, t)?;
    let a = PI / period;
    let s = 2.0 * (d * t);
    if s == 0.0 {
        return Ok(2.0 * a);
    }
    Ok((PI / s).sqrt() * libm::erf(a * s.sqrt()))
}

/// Integral of xi^2 exp(-2 d xi^2 t) over [-pi/T, pi/T].
pub fn integral_weighted(period: f64, d: f64, t: f64) -> Result<f64> {
    check_positive(period, d, t)?;
    let a = PI / period;
    let s = 2.0 * (d * t);
    let x = s * a * a;
    if x < 1.0 {
        // 2 sum_k (-s)^k a^{2k+3} / (k! (2k+3)); the closed form cancels here
        let mut term = a.powi(3);
        let mut terms = Vec::new();
        for k in 0..60 {
            let v = term / (2 * k + 3) as f64;
            terms.push(v);
            if v.abs() < 1e-18 * terms[0].abs() {
                break;
            }
            term *= -x / (k + 1) as f64;
        }
        return Ok(2.0 * kahan_sum(terms));
    }
    Ok(0.5 * PI.sqrt() / s.powf(1.5) * libm::erf(a * s.sqrt()) - a / s * (-x).exp())
}

/// Upper bound on the whole-line integral minus the truncated one, valid for both integrands.
pub fn tail_bound(period: f64, d: f64, t: f64) -> f64 {
    let a = PI / period;
    (-2.0 * d * PI * PI * t / (period * period)).exp() * (1.0 + a) / (2.0 * d * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Weighted,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Weighted => "weighted",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "appendix")]
    Appendix,
    #[serde(rename = "outside-appendix-regime")]
    Outside,
}

impl Regime {
    pub fn of(n: usize, t: f64) -> Regime {
        if n >= 2 && t >= 1.0 {
            Regime::Appendix
        } else {
            Regime::Outside
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Appendix => "appendix",
            Regime::Outside => "outside-appendix-regime",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub variant: Variant,
    pub sum_value: f64,
    pub integral_value: f64,
    pub gap: f64,
    /// gap N (plain) or gap N (1+t) (weighted)
    pub bound_const: f64,
    /// Cell-wise bound: spacing times the total variation of the integrand (plus the
    /// omitted xi = 0 term for the plain sum).
    pub variation_bound: f64,
    /// |F_N(t) - integral of H| after the substitution z = xi sqrt(t).
    pub rescaled_gap: f64,
    /// rescaled_gap N / sqrt(t)
    pub rescaled_const: f64,
    pub regime: Regime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessPair {
    pub plain: SharpnessRecord,
    pub weighted: SharpnessRecord,
}

/// Both sharpness records at one (N, t).
pub fn sharpness_gap(period: f64, d: f64, n: usize, t: f64) -> Result<SharpnessPair> {
    let input = GaussianSumInput::new(n, period, d, t)?;
    let dxi = input.spacing();
    let a = PI / period;
    let s = 2.0 * (d * t);
    let regime = input.regime();
    let nf = n as f64;

    let sp = sum_plain(&input);
    let ip = integral_plain(period, d, t)?;
    let gp = (sp - ip).abs();
    let tv_plain = 2.0 * (1.0 - (-s * a * a).exp());
    let plain = SharpnessRecord {
        n,
        t,
        variant: Variant::Plain,
        sum_value: sp,
        integral_value: ip,
        gap: gp,
        bound_const: gp * nf,
        variation_bound: dxi * (1.0 + tv_plain),
        rescaled_gap: t.sqrt() * gp,
        rescaled_const: gp * nf,
        regime,
    };

    let sw = sum_weighted(&input);
    let iw = integral_weighted(period, d, t)?;
    let gw = (sw - iw).abs();
    let g_edge = a * a * (-s * a * a).exp();
    let g_max = if s * a * a >= 1.0 { 1.0 / (s * std::f64::consts::E) } else { g_edge };
    let weighted = SharpnessRecord {
        n,
        t,
        variant: Variant::Weighted,
        sum_value: sw,
        integral_value: iw,
        gap: gw,
        bound_const: gw * nf * (1.0 + t),
        variation_bound: dxi * (4.0 * g_max - 2.0 * g_edge),
        rescaled_gap: t.powf(1.5) * gw,
        rescaled_const: t * gw * nf,
        regime,
    };
    Ok(SharpnessPair { plain, weighted })
}

/// Records over the (N, t) grid, N outer, t inner, plain before weighted.
pub fn sharpness_sweep(period: f64, d: f64, n_list: &[usize], t_list: &[f64]) -> Result<Vec<SharpnessRecord>> {
    let cells: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| t_list.iter().map(move |&t| (n, t)))
        .collect();
    let pairs = cells
        .par_iter()
        .map(|&(n, t)| sharpness_gap(period, d, n, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().flat_map(|p| [p.plain, p.weighted]).collect())
}

/// Least-squares slope of log(gap) against log(N) for one variant at one t, over positive gaps.
pub fn gap_slope(records: &[SharpnessRecord], variant: Variant, t: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.variant == variant && r.t == t && r.gap > 0.0)
        .map(|r| ((r.n as f64).ln(), r.gap.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBounds {
    /// sup of sum_plain (1+t)^{1/2}
    pub sup_plain: f64,
    pub argmax_plain: (usize, f64),
    /// sup of sum_weighted (1+t)^{3/2}
    pub sup_weighted: f64,
    pub argmax_weighted: (usize, f64),
    /// 2 pi^3 / T^3
    pub small_time_limit: f64,
    /// largest sum_weighted over grid times t <= T^2/(2 d pi^2)
    pub small_time_max: f64,
    pub small_time_ok: bool,
    /// largest sum_plain minus integral_plain (non-positive when the comparison holds)
    pub max_monotone_excess: f64,
    pub monotone_ok: bool,
}

pub fn uniform_bound_check(period: f64, d: f64, n_list: &[usize], t_grid: &[f64]) -> Result<UniformBounds> {
    if n_list.is_empty() || t_grid.is_empty() {
        return Err(Error::InvalidParams("uniform bound check needs nonempty grids".into()));
    }
    let cells: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| t_grid.iter().map(move |&t| (n, t)))
        .collect();
    let vals = cells
        .par_iter()
        .map(|&(n, t)| -> Result<(f64, f64, f64)> {
            let inp = GaussianSumInput::new(n, period, d, t)?;
            Ok((sum_plain(&inp), sum_weighted(&inp), integral_plain(period, d, t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let t_small = period * period / (2.0 * d * PI * PI);
    let mut out = UniformBounds {
        sup_plain: 0.0,
        argmax_plain: cells[0],
        sup_weighted: 0.0,
        argmax_weighted: cells[0],
        small_time_limit: 2.0 * PI.powi(3) / period.powi(3),
        small_time_max: 0.0,
        small_time_ok: true,
        max_monotone_excess: f64::NEG_INFINITY,
        monotone_ok: true,
    };
    for (&(n, t), &(sp, sw, ip)) in cells.iter().zip(&vals) {
        let p = sp * (1.0 + t).sqrt();
        if p > out.sup_plain {
            out.sup_plain = p;
            out.argmax_plain = (n, t);
        }
        let w = sw * (1.0 + t).powf(1.5);
        if w > out.sup_weighted {
            out.sup_weighted = w;
            out.argmax_weighted = (n, t);
        }
        if t <= t_small {
            out.small_time_max = out.small_time_max.max(sw);
        }
        out.max_monotone_excess = out.max_monotone_excess.max(sp - ip);
    }
    out.small_time_ok = out.small_time_max <= out.small_time_limit;
    out.monotone_ok = out.max_monotone_excess <= 0.0;
    Ok(out)
}

/// t* = 3 N^2 T^2 / (16 d pi^2), where the differential inequality for F_N turns negative.
pub fn crossover_time(period: f64, d: f64, n: usize) -> f64 {
    let nt = n as f64 * period;
    3.0 * nt * nt / (16.0 * d * PI * PI)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub t_star: f64,
    pub times: Vec<f64>,
    /// F_N(t) = t^{3/2} sum_weighted
    pub f_values: Vec<f64>,
    pub t_max_observed: f64,
    /// finite-difference F_N' < 0 at every grid time beyond t*
    pub decreasing_beyond_t_star: bool,
    /// max over the grid of (F_N' - t^{-1}(3/2 - 8 d pi^2 t/(N^2 T^2)) F_N) t / F_N
    pub max_inequality_excess: f64,
}

pub fn f_n(period: f64, d: f64, n: usize, t: f64) -> Result<f64> {
    Ok(t.powf(1.5) * sum_weighted(&GaussianSumInput::new(n, period, d, t)?))
}

/// F_N on a log grid over [t*/100, 20 t*] with centred differences.
pub fn crossover_diagnostics(period: f64, d: f64, n: usize) -> Result<CrossoverReport> {
    if n < 2 {
        return Err(Error::Precondition(format!("crossover needs N >= 2, got {n}")));
    }
    let t_star = crossover_time(period, d, n);
    let k = 400;
    let (lo, hi) = (0.01 * t_star, 20.0 * t_star);
    let times: Vec<f64> = (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect();
    let f_values = times
        .iter()
        .map(|&t| f_n(period, d, n, t))
        .collect::<Result<Vec<_>>>()?;
    let nt = n as f64 * period;
    let mut decreasing = true;
    let mut excess = f64::NEG_INFINITY;
    for (&t, &f) in times.iter().zip(&f_values) {
        let h = 1e-4 * t;
        let fd = (f_n(period, d, n, t + h)? - f_n(period, d, n, t - h)?) / (2.0 * h);
        let rhs = (1.5 - 8.0 * d * PI * PI * t / (nt * nt)) * f / t;
        if f > 0.0 {
            excess = excess.max((fd - rhs) * t / f);
        }
        if t > t_star && !(fd < 0.0) {
            decreasing = false;
        }
    }
    let imax = f_values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > f_values[b] { i } else { b });
    Ok(CrossoverReport {
        n,
        t_star,
        t_max_observed: times[imax],
        times,
        f_values,
        decreasing_beyond_t_star: decreasing,
        max_inequality_excess: excess,
    })
}
