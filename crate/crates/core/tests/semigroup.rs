use lle_bloch::blochop::{self, CriticalCurve};
use lle_bloch::semigroup::*;
use lle_bloch::transforms::{cell_points, FieldSample};
use lle_bloch::wave::*;
use lle_bloch::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;

struct Setup {
    wave: PeriodicWave,
    curve: CriticalCurve,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let wave = newton_solve(&bifurcation_seed(1.0, 0.1, 32).unwrap(), 1e-11, 50).unwrap();
        let v = blochop::check_diffusive_stability(&wave, &blochop::xi_grid(201, 4, wave.period), wave.m, &[]).unwrap();
        let curve = blochop::critical_curve(&wave, v.xi1, 32, wave.m).unwrap();
        Setup { wave, curve }
    })
}

fn rel_diff(a: &PerturbationField, b: &PerturbationField) -> f64 {
    a.sub(b).norm_l2() / b.norm_l2().max(1e-300)
}

// 2x2 real generator of w_t = (i beta q^2 - 1 - i alpha) w + i (2 |phi|^2 w + phi^2 conj(w))
fn constant_generator(phi: C64, alpha: f64, beta: f64, q: f64) -> [[f64; 2]; 2] {
    let act = |w: C64| C64::new(-1.0, beta * q * q - alpha) * w + C64::new(0.0, 1.0) * (2.0 * phi.norm_sqr() * w + phi * phi * w.conj());
    let c1 = act(C64::new(1.0, 0.0));
    let c2 = act(C64::new(0.0, 1.0));
    [[c1.re, c2.re], [c1.im, c2.im]]
}

fn expm2(a: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    // scaling and squaring with a long Taylor series
    let s = 20;
    let h = t / (1u64 << s) as f64;
    let mul = |x: [[f64; 2]; 2], y: [[f64; 2]; 2]| {
        let mut z = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        z
    };
    let mut e = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = e;
    for k in 1..20 {
        term = mul(term, a);
        term = [[term[0][0] * h / k as f64, term[0][1] * h / k as f64], [term[1][0] * h / k as f64, term[1][1] * h / k as f64]];
        for i in 0..2 {
            for j in 0..2 {
                e[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        e = mul(e, e);
    }
    e
}

#[test]
fn constant_state_evolution_matches_the_two_by_two_exponential() {
    let p = LleParams::new(1.0, -1.0, 0.8).unwrap();
    let phi = constant_state(&p).unwrap().selected();
    let (n, m, period) = (2usize, 4usize, 2.0 * PI);
    let w = PeriodicWave::constant(p, phi, period, m);
    let q = 2.0 * PI * 3.0 / (n as f64 * period);
    let n_grid = n * cell_points(m);
    let f = PerturbationField::from_fn(n, period, n_grid, |x| (q * x).cos(), |_| 0.0).unwrap();
    let t = 1.7;
    let u = evolve(&w, &f, n, t, m).unwrap();
    let e = expm2(constant_generator(phi, 1.0, -1.0, q), t);
    let want = PerturbationField::from_fn(n, period, n_grid, |x| e[0][0] * (q * x).cos(), |x| e[1][0] * (q * x).cos()).unwrap();
    assert!(rel_diff(&u, &want) < 1e-10, "{}", rel_diff(&u, &want));
}

#[test]
fn evolution_is_a_semigroup() {
    let s = setup();
    let f = PerturbationField::random_smooth(3, s.wave.period, s.wave.m, 11).unwrap();
    let m = s.wave.m;
    let a = evolve(&s.wave, &evolve(&s.wave, &f, 3, 1.25, m).unwrap(), 3, 2.5, m).unwrap();
    let b = evolve(&s.wave, &f, 3, 3.75, m).unwrap();
    assert!(rel_diff(&a, &b) < 1e-10);
    let zero = evolve(&s.wave, &f, 3, 0.0, m).unwrap();
    assert!(rel_diff(&zero, &f.projected(m).unwrap()) < 1e-13);
}

#[test]
fn kernel_projection_is_idempotent_and_fixes_the_derivative() {
    let s = setup();
    let cutoff = CutoffProfile::for_curve(&s.curve).unwrap();
    let n = 4;
    let dec = Decomposer::new(&s.wave, &s.curve, cutoff, n, s.curve.m).unwrap();
    let f = PerturbationField::random_smooth(n, s.wave.period, s.curve.m, 5).unwrap();
    let p = dec.project_p0(&dec.prepare(&f).unwrap());
    let pp = dec.project_p0(&dec.prepare(&p).unwrap());
    assert!(rel_diff(&pp, &p) < 1e-10);
    let dphi = PerturbationField::from_periodic(&s.wave.derivative_real_form(s.curve.m), n, s.wave.period, cell_points(s.curve.m)).unwrap();
    let prep = dec.prepare(&dphi).unwrap();
    assert!((dec.kernel_coefficient(&prep) - 1.0).norm() < 1e-10);
    assert!(rel_diff(&dec.project_p0(&prep), &dphi) < 1e-10);
    // the kernel direction is stationary
    let later = dec.evolve(&prep, 7.0).unwrap();
    assert!(rel_diff(&later, &dphi) < 1e-9);
}

#[test]
fn five_parts_close_for_an_odd_lattice() {
    let s = setup();
    let cutoff = CutoffProfile::for_curve(&s.curve).unwrap();
    let f = PerturbationField::random_smooth(3, s.wave.period, s.curve.m, 9).unwrap();
    for t in [0.0, 2.0, 20.0] {
        let r = decompose(&s.wave, &s.curve, cutoff, &f, 3, t).unwrap();
        let p = &r.parts;
        let sum = p.p0.add(&p.phase).add(&p.sc).add(&p.slf).add(&p.shf);
        assert!(sum.sub(&r.full).norm_l2() <= 1e-8 * f.norm_l2());
        assert!(r.closure_residual <= 1e-8);
        for k in ["full", "minus_p0", "phase", "sc", "slf", "shf"] {
            assert!(r.norms.contains_key(k), "missing norm {k}");
        }
    }
}

#[test]
fn modulation_of_real_data_is_real() {
    let s = setup();
    let cutoff = CutoffProfile::for_curve(&s.curve).unwrap();
    let f = gaussian_bump(4, s.wave.period, 4 * cell_points(s.curve.m)).unwrap();
    let g = modulation_gamma(&s.wave, &s.curve, cutoff, &f, 4, 10.0).unwrap();
    assert!(g.gamma.values.iter().all(|z| z.im == 0.0));
    assert!(g.imag_residue < 1e-10);
    assert_eq!(g.gamma.n, 4);
}

#[test]
fn decomposer_rejects_a_cutoff_beyond_the_curve() {
    let s = setup();
    let too_wide = CutoffProfile::new(2.0 * s.curve.xi1).unwrap();
    assert!(matches!(Decomposer::new(&s.wave, &s.curve, too_wide, 2, s.curve.m), Err(Error::Precondition(_))));
    let cutoff = CutoffProfile::for_curve(&s.curve).unwrap();
    let dec = Decomposer::new(&s.wave, &s.curve, cutoff, 2, s.curve.m).unwrap();
    let wrong = gaussian_bump(3, s.wave.period, 3 * cell_points(s.curve.m)).unwrap();
    assert!(dec.prepare(&wrong).is_err());
}

proptest! {
    #[test]
    fn cutoff_is_a_smooth_even_partition(xi1 in 0.01f64..2.0, x in -3.0f64..3.0) {
        let c = CutoffProfile::new(xi1).unwrap();
        let r = c.eval(x * xi1);
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(r, c.eval(-x * xi1));
        if x.abs() <= 0.5 { prop_assert_eq!(r, 1.0); }
        if x.abs() >= 1.0 { prop_assert_eq!(r, 0.0); }
        // monotone in |xi|
        prop_assert!(c.eval((x.abs() + 0.01) * xi1) <= r);
    }

    #[test]
    fn power_fit_recovers_exponent_and_prefactor(p in 0.1f64..3.0, c in 0.01f64..100.0) {
        let times: Vec<f64> = (0..40).map(|k| 10f64.powf(k as f64 / 13.0)).collect();
        let norms: Vec<f64> = times.iter().map(|t| c * (1.0 + t).powf(-p)).collect();
        let fit = decay_fit(&times, &norms, FitModel::Power, (1.0, 1e3)).unwrap();
        prop_assert!((fit.fitted_exponent - p).abs() < 1e-10);
        prop_assert!((fit.prefactor - c).abs() < 1e-9 * c);
        prop_assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn exponential_fit_recovers_the_rate(r in 0.001f64..1.0) {
        let times: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let norms: Vec<f64> = times.iter().map(|t| 2.0 * (-r * t).exp()).collect();
        let fit = decay_fit(&times, &norms, FitModel::Exponential, (0.0, 29.0)).unwrap();
        prop_assert!((fit.fitted_exponent - r).abs() < 1e-10);
    }
}

#[test]
fn degenerate_fits_are_refused() {
    let times: Vec<f64> = (0..20).map(|k| 10.0 + k as f64 * 0.1).collect();
    let norms: Vec<f64> = times.iter().map(|t| 1.0 / t).collect();
    assert!(matches!(decay_fit(&times, &norms, FitModel::Power, (10.0, 12.0)), Err(Error::DegenerateFit(_))));
    assert!(matches!(decay_fit(&times[..5], &norms[..5], FitModel::Power, (0.0, 1e9)), Err(Error::DegenerateFit(_))));
    let mut bad = norms.clone();
    bad[3] = 0.0;
    assert!(matches!(decay_fit(&times, &bad, FitModel::Exponential, (0.0, 1e9)), Err(Error::DegenerateFit(_))));
    assert!(matches!(decay_fit(&times, &norms[..3], FitModel::Power, (0.0, 1e9)), Err(Error::InvalidParams(_))));
}

#[test]
fn whitham_solution_is_the_moving_heat_kernel() {
    // a Gaussian of variance v0 spreads to v0 + 2 d t and is carried with speed -a
    let (n, period) = (64usize, 2.0 * PI);
    let len = n as f64 * period;
    let (a, d, v0, t) = (0.3, 2.0, 4.0, 5.0);
    let s0 = FieldSample::from_fn(n, period, n * 32, |x| C64::new((-(x - 0.5 * len).powi(2) / (2.0 * v0)).exp(), 0.0)).unwrap();
    let w = whitham_solution(a, d, &s0, t).unwrap();
    let v = v0 + 2.0 * d * t;
    let want = FieldSample::from_fn(n, period, n * 32, |x| {
        C64::new((v0 / v).sqrt() * (-(x + a * t - 0.5 * len).powi(2) / (2.0 * v)).exp(), 0.0)
    })
    .unwrap();
    let err = w.values.iter().zip(&want.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err:e}");
    assert!(matches!(whitham_solution(a, 0.0, &s0, t), Err(Error::Precondition(_))));
}

#[test]
fn sweep_data_families_are_normalized() {
    let f = gaussian_bump(8, 2.0 * PI, 8 * 64).unwrap();
    assert!((f.norm_l1_l2() - 1.0).abs() < 1e-14);
    assert!(f.is_real(0.0));
    let r1 = PerturbationField::random_smooth(4, 2.0 * PI, 16, 42).unwrap();
    let r2 = PerturbationField::random_smooth(4, 2.0 * PI, 16, 42).unwrap();
    let r3 = PerturbationField::random_smooth(4, 2.0 * PI, 16, 43).unwrap();
    assert_eq!(r1, r2);
    assert_ne!(r1, r3);
    assert!((r1.norm_l1_l2() - 1.0).abs() < 1e-14);
    assert!(r1.is_real(0.0));
}

#[test]
fn fit_windows_follow_the_crossover_scale() {
    let d = 2.0;
    let (lo, hi) = fit_window(8, 2.0 * PI, d);
    assert_eq!(lo, 5.0);
    assert!((hi - 0.5 * 64.0 / d).abs() < 1e-12);
    assert_eq!(crossover_time(8, 2.0 * PI, d), hi);
    assert!((localized_fit_start(2.0, 0.2) - 1.0 / (2.0 * 0.01)).abs() < 1e-12);
    assert_eq!(localized_fit_start(1.0, 10.0), 5.0);
}

#[test]
fn leak_measures_the_window_edge() {
    let len = 16.0 * 2.0 * PI;
    let f = PerturbationField::from_fn(16, 2.0 * PI, 16 * 32, |x| (-(x - 0.5 * len).powi(2) / 4.0).exp(), |_| 0.0).unwrap();
    assert!(field_leak(&f) < LEAK_TOL);
    let g = PerturbationField::from_fn(16, 2.0 * PI, 16 * 32, |_| 1.0, |_| 0.0).unwrap();
    assert!((field_leak(&g) - 1.0).abs() < 1e-14);
}
