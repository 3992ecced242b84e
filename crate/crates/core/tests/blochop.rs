use lle_bloch::blochop::*;
use lle_bloch::linalg;
use lle_bloch::wave::*;
use lle_bloch::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn wave() -> &'static PeriodicWave {
    static W: OnceLock<PeriodicWave> = OnceLock::new();
    W.get_or_init(|| newton_solve(&bifurcation_seed(1.0, 0.01, 32).unwrap(), 1e-11, 50).unwrap())
}

fn constant_wave(alpha: f64, f: f64, period: f64, m: usize) -> PeriodicWave {
    let p = LleParams::new(alpha, -1.0, f).unwrap();
    PeriodicWave::constant(p, constant_state(&p).unwrap().selected(), period, m)
}

// lambda = -1 +- sqrt(-(s + rho)(s + 3 rho)), s = beta q^2 - alpha
fn dispersion(rho: f64, alpha: f64, q: f64) -> [C64; 2] {
    let s = -q * q - alpha;
    let r = C64::new(-(s + rho) * (s + 3.0 * rho), 0.0).sqrt();
    [C64::new(-1.0, 0.0) + r, C64::new(-1.0, 0.0) - r]
}

// Largest distance from a point of `want` to its greedily matched partner in `got`.
fn match_distance(got: &[C64], want: &[C64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let mut used = vec![false; got.len()];
    let mut worst: f64 = 0.0;
    for b in want {
        let (j, d) = got
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, a)| (j, (a - b).norm() / (1.0 + b.norm())))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

#[test]
fn constant_state_spectrum_matches_the_dispersion_relation() {
    let (alpha, f, period, m) = (1.0, 2.0, 2.0 * PI, 6);
    let w = constant_wave(alpha, f, period, m);
    let rho = w.coeff(0).norm_sqr();
    for xi in [0.0, 0.13, -0.4, 0.5] {
        let got = spectrum(&assemble(&w, xi, m).unwrap()).unwrap().eigenvalues;
        let want: Vec<C64> = (-(m as i64)..=m as i64)
            .flat_map(|l| dispersion(rho, alpha, 2.0 * PI * l as f64 / period + xi))
            .collect();
        let d = match_distance(&got, &want);
        // at xi = 0 the l = +-1 blocks have s + rho = 0, a Jordan block with sqrt(eps) sensitivity
        let tol = if xi == 0.0 { 1e-7 } else { 1e-9 };
        assert!(d < tol, "xi={xi}: mismatch {d:e}");
    }
}

#[test]
fn modulationally_unstable_state_fails_condition_one_at_the_band_peak() {
    // rho = 2 for alpha = 1, F = 2; peak growth -1 + rho = 1 at q^2 = 2 rho - alpha = 3
    let w = constant_wave(1.0, 2.0, 2.0 * PI, 8);
    let grid = xi_grid(201, 4, w.period);
    let v = check_diffusive_stability(&w, &grid, 8, &[]).unwrap();
    assert!(!v.stable && !v.condition_i);
    let worst = v
        .violations
        .iter()
        .filter(|x| x.condition == "i")
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    let xi_peak = 3f64.sqrt() - 2.0;
    assert!((worst.xi.abs() - xi_peak.abs()).abs() < 0.01, "offending xi {}", worst.xi);
    assert!((worst.value - 1.0).abs() < 1e-3);
    for viol in v.violations.iter().filter(|x| x.condition == "i" && x.xi != 0.0).take(20) {
        let oracle = (-8i64..=8)
            .flat_map(|l| dispersion(2.0, 1.0, l as f64 + viol.xi))
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((viol.value - oracle).abs() < 1e-9, "xi={}: {} vs {oracle}", viol.xi, viol.value);
    }
}

#[test]
fn trace_is_minus_the_dimension() {
    let w = wave();
    for xi in [0.0, 0.2, -0.5] {
        let a = assemble(w, xi, 40).unwrap();
        let tr = a.trace();
        assert!((tr.re + a.dim() as f64).abs() < 1e-10 && tr.im == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn spectra_at_opposite_xi_are_conjugate(xi in -0.5f64..0.5) {
        let w = wave();
        let a = spectrum(&assemble(w, xi, w.m).unwrap()).unwrap().eigenvalues;
        let b: Vec<C64> = spectrum(&assemble(w, -xi, w.m).unwrap()).unwrap().eigenvalues.iter().map(|z| z.conj()).collect();
        let d = match_distance(&a, &b);
        prop_assert!(d < 1e-8, "mismatch {:e}", d);
    }

    #[test]
    fn truncation_is_a_principal_submatrix(xi in -0.5f64..0.5, m_new in 32usize..40) {
        let w = wave();
        let big = assemble(w, xi, 40).unwrap();
        let direct = assemble(w, xi, m_new).unwrap();
        let cut = big.truncated(m_new);
        prop_assert_eq!(cut.entries, direct.entries);
    }
}

#[test]
fn kernel_of_the_periodic_wave_is_its_derivative() {
    let w = wave();
    let a = assemble(w, 0.0, w.m).unwrap();
    let pp = w.derivative_real_form(w.m);
    let r = linalg::vec_norm(&a.apply(&pp)) / linalg::vec_norm(&pp);
    assert!(r <= 1e-8, "||A_0 phi'|| / ||phi'|| = {r:e}");
}

#[test]
fn verdict_for_the_small_amplitude_wave() {
    let w = wave();
    let v = check_diffusive_stability(w, &xi_grid(201, 4, w.period), w.m, &[1, 2, 4]).unwrap();
    assert!(v.stable, "{:?}", v.violations);
    assert!(v.theta > 0.0);
    assert!(v.kernel_residual.unwrap() <= 1e-8);
    assert!(v.max_truncation_shift <= 1e-6);
    assert!(v.xi1 > 0.0 && v.delta1 > 0.0);
    assert_eq!(v.delta_n_table.len(), 3);
}

#[test]
fn xi_grid_is_sorted_symmetric_and_hits_the_edges() {
    let g = xi_grid(201, 4, 2.0 * PI);
    assert!(g.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(*g.first().unwrap(), -0.5);
    assert_eq!(*g.last().unwrap(), 0.5);
    assert!(g.contains(&0.0));
    for x in &g {
        assert!(g.iter().any(|y| (y + x).abs() < 1e-15));
    }
}

#[test]
fn critical_mode_is_an_eigenpair_with_the_fixed_normalization() {
    let w = wave();
    let m = w.m;
    let pp = w.derivative_real_form(m);
    let mode = critical_mode(w, 0.05, m, &pp).unwrap();
    let a = assemble(w, 0.05, m).unwrap();
    let res: Vec<C64> = a.apply(&mode.phi).iter().zip(&mode.phi).map(|(x, y)| x - mode.lambda * y).collect();
    assert!(linalg::vec_norm(&res) < 1e-9 * linalg::vec_norm(&mode.phi));
    let pn = inner(&pp, &pp, w.period);
    assert!((inner(&pp, &mode.phi, w.period) - pn).norm() < 1e-10 * pn.norm());
    assert!((inner(&mode.phi_tilde, &mode.phi, w.period) - 1.0).norm() < 1e-10);
    let k = kernel_mode(w, m).unwrap();
    assert_eq!(k.phi, pp);
    assert!((inner(&k.phi_tilde, &k.phi, w.period) - 1.0).norm() < 1e-10);
}

#[test]
fn critical_curve_coefficients_match_finite_differences() {
    let w = wave();
    let v = check_diffusive_stability(w, &xi_grid(201, 4, w.period), w.m, &[]).unwrap();
    let c = critical_curve(w, v.xi1, 32, w.m).unwrap();
    assert!(c.d > 0.0);
    assert!(c.a.abs() <= 1e-6);
    // independent second difference of the branch eigenvalue at small xi
    let h = 1e-3;
    let pp = w.derivative_real_form(w.m);
    let lp = critical_mode(w, h, w.m, &pp).unwrap().lambda;
    let lm = critical_mode(w, -h, w.m, &pp).unwrap().lambda;
    let d_fd = -(lp.re + lm.re) / (2.0 * h * h);
    assert!((c.d - d_fd).abs() < 1e-3 * c.d, "d = {} vs {d_fd}", c.d);
    let interp = c.interpolate(0.5 * c.xi1).unwrap();
    let exact = critical_mode(w, 0.5 * c.xi1, w.m, &pp).unwrap();
    assert!((interp.lambda - exact.lambda).norm() < 1e-6);
}

#[test]
fn assembly_rejects_bad_arguments() {
    let w = wave();
    assert!(matches!(assemble(w, 0.0, w.m - 1), Err(Error::TruncationTooSmall { .. })));
    assert!(matches!(assemble(w, 0.6, w.m), Err(Error::Precondition(_))));
}

#[test]
fn resolvent_norm_of_a_normal_block_is_the_inverse_distance() {
    // constant state with alpha = 1, F small: the spectrum is known, and at xi = 0
    // the l = 0 block alone bounds the resolvent from below
    let w = constant_wave(1.0, 0.3, 2.0 * PI, 4);
    let a = assemble(&w, 0.0, 4).unwrap();
    let ev = spectrum(&a).unwrap().eigenvalues;
    let mu = 0.7;
    let dist = ev.iter().map(|z| (z - C64::new(0.0, mu)).norm()).fold(f64::INFINITY, f64::min);
    let r = resolvent_norm(&a, mu).unwrap();
    assert!(r >= 1.0 / dist * (1.0 - 1e-10));
}
