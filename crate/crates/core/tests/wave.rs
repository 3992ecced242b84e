use lle_bloch::wave::*;
use lle_bloch::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

// Profile residual evaluated pointwise from the series, independent of the FFT grid code.
fn pointwise_residual(w: &PeriodicWave, x: f64) -> f64 {
    let (mut phi, mut phi_xx) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for k in -(w.m as i64)..=w.m as i64 {
        let kap = 2.0 * PI * k as f64 / w.period;
        let e = C64::from_polar(1.0, kap * x);
        phi += w.coeff(k) * e;
        phi_xx -= w.coeff(k) * e * kap * kap;
    }
    let p = w.params;
    let r = C64::new(0.0, -p.beta) * phi_xx - C64::new(1.0, p.alpha) * phi + C64::new(0.0, phi.norm_sqr()) * phi + p.f;
    r.norm()
}

fn solved(mu: f64) -> PeriodicWave {
    newton_solve(&bifurcation_seed(1.0, mu, 32).unwrap(), 1e-11, 50).unwrap()
}

#[test]
fn constant_states_satisfy_the_algebraic_equation() {
    let p = LleParams::new(3.0, -1.0, 2.0).unwrap();
    let cs = constant_state(&p).unwrap();
    // rho (1 + (3 - rho)^2) = 4 has three positive roots
    assert_eq!(cs.rho_roots.len(), 3);
    assert!(cs.rho_roots.windows(2).all(|w| w[0] < w[1]));
    for (rho, phi) in cs.rho_roots.iter().zip(&cs.states) {
        assert!((phi.norm_sqr() - rho).abs() < 1e-12 * rho.max(1.0));
        let r = -C64::new(1.0, 3.0) * phi + C64::new(0.0, phi.norm_sqr()) * phi + 2.0;
        assert!(r.norm() < 1e-12, "residual {}", r.norm());
    }
    assert_eq!(cs.selected(), cs.states[0]);
}

#[test]
fn zero_pump_gives_the_zero_state() {
    let cs = constant_state(&LleParams::new(0.5, 1.0, 0.0).unwrap()).unwrap();
    assert_eq!(cs.states, vec![C64::new(0.0, 0.0)]);
}

proptest! {
    #[test]
    fn every_reported_constant_state_solves_the_equation(alpha in -3.0f64..4.0, f in 0.01f64..3.0) {
        let p = LleParams::new(alpha, -1.0, f).unwrap();
        let cs = constant_state(&p).unwrap();
        prop_assert!(!cs.states.is_empty() && cs.states.len() <= 3);
        for phi in &cs.states {
            let r = -C64::new(1.0, alpha) * phi + C64::new(0.0, phi.norm_sqr()) * phi + f;
            prop_assert!(r.norm() < 1e-10 * (1.0 + f), "residual {}", r.norm());
        }
    }

    #[test]
    fn wave_json_round_trip_is_bit_faithful(
        re in proptest::collection::vec(-1e3f64..1e3, 9),
        im in proptest::collection::vec(-1e-7f64..1e-7, 9),
        period in 0.1f64..100.0,
    ) {
        let p = LleParams::new(1.0, -1.0, 1.5).unwrap();
        let mut w = PeriodicWave::constant(p, C64::new(0.0, 0.0), period, 4);
        w.coeffs = re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect();
        let back = PeriodicWave::from_json(&w.to_json()).unwrap();
        prop_assert_eq!(back.period.to_bits(), w.period.to_bits());
        for (a, b) in back.coeffs.iter().zip(&w.coeffs) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        prop_assert_eq!(back.residual_norm.to_bits(), w.residual_norm.to_bits());
    }
}

#[test]
fn wave_file_has_the_documented_fields() {
    let w = solved(0.01);
    let v: serde_json::Value = serde_json::from_str(&w.to_json()).unwrap();
    for k in ["alpha", "beta", "F", "T", "M", "coeffs", "residual_norm", "even"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    assert_eq!(v["coeffs"].as_array().unwrap().len(), 2 * w.m + 1);
}

#[test]
fn newton_wave_solves_the_profile_equation_pointwise() {
    let w = solved(0.01);
    let worst = (0..97)
        .map(|i| pointwise_residual(&w, w.period * (i as f64 + 0.37) / 97.0))
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "pointwise residual {worst:e}");
    assert!(w.collocation_residual() <= 1e-10);
    assert!(w.energy_identity() <= 1e-10);
    assert!(w.even);
    assert!((w.period - 2.0 * PI).abs() < 1e-14);
}

#[test]
fn small_amplitude_harmonic_matches_the_expansion() {
    // first harmonic c_1 + c_-1 against the leading-order amplitude times mu^{1/2}
    for mu in [1e-3, 1e-2] {
        let w = solved(mu);
        let seed = BifurcationSeed::new(1.0, mu).unwrap();
        let want = seed.harmonic_coefficient() * mu.sqrt();
        let got = w.coeff(1) + w.coeff(-1);
        let rel = (got - want).norm() / want.norm();
        assert!(rel < 0.1, "mu={mu}: relative error {rel}");
    }
}

#[test]
fn bifurcation_seed_data() {
    let s = BifurcationSeed::new(1.0, 0.01).unwrap();
    assert!((s.f1 - 1.0).abs() < 1e-15);
    assert!((s.k_c - 1.0).abs() < 1e-15);
    assert!((s.pump() - 1.01f64.sqrt()).abs() < 1e-15);
    // 3(alpha + i(2 - alpha)) / (F1 sqrt(41 - 30 alpha)) at alpha = 1
    let c = s.harmonic_coefficient();
    assert!((c - C64::new(3.0, 3.0) / 11f64.sqrt()).norm() < 1e-15);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(matches!(LleParams::new(1.0, 0.5, 1.0), Err(Error::InvalidParams(_))));
    assert!(matches!(LleParams::new(1.0, -1.0, -1.0), Err(Error::InvalidParams(_))));
    assert!(matches!(LleParams::new(f64::NAN, -1.0, 1.0), Err(Error::InvalidParams(_))));
    assert!(matches!(BifurcationSeed::new(1.5, 0.01), Err(Error::InvalidParams(_))));
    assert!(matches!(BifurcationSeed::new(1.0, 0.0), Err(Error::InvalidParams(_))));
    assert!(matches!(bifurcation_seed(1.0, 0.01, 0), Err(Error::InvalidParams(_))));
    let seed = bifurcation_seed(1.0, 0.01, 8).unwrap();
    assert!(matches!(newton_solve(&seed, -1.0, 10), Err(Error::InvalidParams(_))));
    assert!(PeriodicWave::from_json("{\"alpha\": 1}").is_err());
}

#[test]
fn newton_reports_its_history_and_truncation() {
    let seed = bifurcation_seed(1.0, 0.01, 16).unwrap();
    let rep = newton_solve_with(&seed, &NewtonOptions::default()).unwrap();
    assert!(rep.iterations >= 1);
    assert!(rep.residual_history.first().unwrap() > rep.residual_history.last().unwrap());
    assert!(rep.wave.max_tail() < 1e-12);
    assert!(rep.truncations.iter().all(|&m| m >= 16));
}

#[test]
fn resizing_pads_and_truncates_coefficients() {
    let w = solved(0.01);
    let big = w.resized(2 * w.m);
    assert_eq!(big.coeffs.len(), 4 * w.m + 1);
    for k in -(w.m as i64)..=w.m as i64 {
        assert_eq!(big.coeff(k), w.coeff(k));
    }
    assert_eq!(big.coeff(w.m as i64 + 1), C64::new(0.0, 0.0));
}
