//! Reference lattice sums in software floating point.

use super::GaussianSumInput;
use crate::transforms::lattice;
use astro_float::{BigFloat, Consts, Radix, RoundingMode};

/// Working precision in bits (about 57 decimal digits).
pub const PRECISION: usize = 192;
const RM: RoundingMode = RoundingMode::ToEven;

fn to_f64(x: &BigFloat, cc: &mut Consts) -> f64 {
    x.format(Radix::Dec, RM, cc)
        .ok()
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap_or(f64::NAN)
}

fn lattice_sum(input: &GaussianSumInput, weighted: bool) -> (f64, String) {
    let p = PRECISION;
    let mut cc = Consts::new().expect("constant cache");
    let lat = lattice(input.n, input.period).expect("validated input");
    let pi = cc.pi(p, RM);
    let two = BigFloat::from_f64(2.0, p);
    let nt = BigFloat::from_f64(input.n as f64, p).mul(&BigFloat::from_f64(input.period, p), p, RM);
    let dxi = two.mul(&pi, p, RM).div(&nt, p, RM);
    let two_dt = two
        .mul(&BigFloat::from_f64(input.d, p), p, RM)
        .mul(&BigFloat::from_f64(input.t, p), p, RM);
    let mut acc = BigFloat::from_f64(0.0, p);
    for &j in lat.indices.iter().filter(|&&j| j != 0) {
        let xi = dxi.mul(&BigFloat::from_f64(j as f64, p), p, RM);
        let xi2 = xi.mul(&xi, p, RM);
        let e = two_dt.mul(&xi2, p, RM).neg().exp(p, RM, &mut cc);
        let term = if weighted { xi2.mul(&e, p, RM) } else { e };
        acc = acc.add(&term, p, RM);
    }
    let total = acc.mul(&dxi, p, RM);
    let text = total.format(Radix::Dec, RM, &mut cc).unwrap_or_default();
    (to_f64(&total, &mut cc), text)
}

/// (2 pi / NT) sum over Omega_N \ {0} of exp(-2 d xi^2 t), as (rounded, decimal string).
pub fn sum_plain_extended(input: &GaussianSumInput) -> (f64, String) {
    lattice_sum(input, false)
}

/// (2 pi / NT) sum over Omega_N of xi^2 exp(-2 d xi^2 t), as (rounded, decimal string).
pub fn sum_weighted_extended(input: &GaussianSumInput) -> (f64, String) {
    lattice_sum(input, true)
}
