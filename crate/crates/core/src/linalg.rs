//! Dense complex linear algebra on top of faer.

use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as C64;

pub type CMat = Mat<C64>;

pub fn zeros(n: usize, m: usize) -> CMat {
    Mat::zeros(n, m)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn adjoint(a: &CMat) -> CMat {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![C64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

/// Linear combination sum_k c_k A_k of equally sized matrices.
pub fn combine(terms: &[(C64, &CMat)]) -> CMat {
    let (n, m) = (terms[0].1.nrows(), terms[0].1.ncols());
    Mat::from_fn(n, m, |i, j| terms.iter().map(|(c, a)| c * a[(i, j)]).sum())
}

/// Induced 1-norm (max column sum).
pub fn norm1(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: CMat,
}

pub fn eig(a: &CMat) -> Result<EigenDecomposition> {
    let e = a
        .as_ref()
        .eigen()
        .map_err(|err| Error::EigensolverFailure(format!("{err:?}")))?;
    let values: Vec<C64> = e.S().column_vector().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolverFailure("non-finite eigenvalue".into()));
    }
    Ok(EigenDecomposition {
        values,
        vectors: e.U().to_owned(),
    })
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    let mut s = a
        .as_ref()
        .singular_values()
        .map_err(|err| Error::EigensolverFailure(format!("{err:?}")))?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

pub fn cond2(a: &CMat) -> Result<f64> {
    let s = singular_values(a)?;
    let smin = *s.last().unwrap_or(&0.0);
    Ok(if smin > 0.0 { s[0] / smin } else { f64::INFINITY })
}

pub fn solve(a: &CMat, b: &CMat) -> CMat {
    a.partial_piv_lu().solve(b)
}

pub fn solve_vec(a: &CMat, b: &[C64]) -> Vec<C64> {
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = solve(a, &rhs);
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152e0;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Matrix exponential by scaling and squaring with diagonal Pade approximants.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let id = identity(n);
    let nrm = norm1(a);
    for &(m, theta) in &THETA {
        if nrm <= theta {
            let b: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let a2 = matmul(a, a);
            let mut powers = vec![id.clone(), a2.clone()];
            while powers.len() <= m / 2 {
                let next = matmul(powers.last().unwrap(), &a2);
                powers.push(next);
            }
            let odd: Vec<(C64, &CMat)> = (0..=m / 2).map(|k| (re(b[2 * k + 1]), &powers[k])).collect();
            let even: Vec<(C64, &CMat)> = (0..=m / 2).map(|k| (re(b[2 * k]), &powers[k])).collect();
            let u = matmul(a, &combine(&odd));
            let v = combine(&even);
            return pade_solve(&u, &v);
        }
    }
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a1 = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let b = &PADE13;
    let a2 = matmul(&a1, &a1);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);
    let inner_u = combine(&[(re(b[13]), &a6), (re(b[11]), &a4), (re(b[9]), &a2)]);
    let u = matmul(
        &a1,
        &combine(&[
            (re(1.0), &matmul(&a6, &inner_u)),
            (re(b[7]), &a6),
            (re(b[5]), &a4),
            (re(b[3]), &a2),
            (re(b[1]), &id),
        ]),
    );
    let inner_v = combine(&[(re(b[12]), &a6), (re(b[10]), &a4), (re(b[8]), &a2)]);
    let v = combine(&[
        (re(1.0), &matmul(&a6, &inner_v)),
        (re(b[6]), &a6),
        (re(b[4]), &a4),
        (re(b[2]), &a2),
        (re(b[0]), &id),
    ]);
    let mut r = pade_solve(&u, &v);
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}

fn pade_solve(u: &CMat, v: &CMat) -> CMat {
    let p = combine(&[(re(1.0), v), (re(1.0), u)]);
    let q = combine(&[(re(1.0), v), (re(-1.0), u)]);
    solve(&q, &p)
}
