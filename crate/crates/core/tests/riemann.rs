use lle_bloch::riemann::quad::integrate;
use lle_bloch::riemann::*;
use lle_bloch::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn kahan_recovers_what_naive_summation_loses() {
    let mut terms = vec![1.0];
    terms.extend(std::iter::repeat(1e-16).take(10_000));
    let naive: f64 = terms.iter().sum();
    assert_eq!(naive, 1.0);
    assert!((kahan_sum(terms) - (1.0 + 1e-12)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn closed_form_integrals_match_adaptive_quadrature(period in 0.5f64..10.0, d in 0.1f64..5.0, t in 0.0f64..200.0) {
        let a = PI / period;
        let s = 2.0 * d * t;
        let qp = integrate(|x| (-s * x * x).exp(), -a, a, 1e-14);
        let qw = integrate(|x| x * x * (-s * x * x).exp(), -a, a, 1e-14);
        let ip = integral_plain(period, d, t).unwrap();
        let iw = integral_weighted(period, d, t).unwrap();
        prop_assert!((ip - qp).abs() <= 1e-12 * qp.abs().max(1e-300), "plain {} vs {}", ip, qp);
        prop_assert!((iw - qw).abs() <= 1e-11 * qw.abs().max(1e-300), "weighted {} vs {}", iw, qw);
    }

    #[test]
    fn sums_depend_on_d_and_t_only_through_their_product(n in 1usize..200, period in 0.5f64..10.0, d in 0.1f64..5.0, t in 0.01f64..100.0) {
        let a = GaussianSumInput::new(n, period, d, t).unwrap();
        let b = GaussianSumInput::new(n, period, 2.0 * d, 0.5 * t).unwrap();
        prop_assert_eq!(sum_plain(&a).to_bits(), sum_plain(&b).to_bits());
        prop_assert_eq!(sum_weighted(&a).to_bits(), sum_weighted(&b).to_bits());
    }

    #[test]
    fn plain_sum_never_exceeds_its_integral(n in 1usize..300, d in 0.1f64..5.0, t in 0.01f64..100.0) {
        let inp = GaussianSumInput::new(n, 2.0 * PI, d, t).unwrap();
        prop_assert!(sum_plain(&inp) <= integral_plain(2.0 * PI, d, t).unwrap());
    }
}

#[test]
fn extended_precision_agrees_with_hardware_sums() {
    for (n, t) in [(2usize, 1.0), (16, 3.0), (128, 0.5), (512, 40.0)] {
        let inp = GaussianSumInput::new(n, 2.0 * PI, 1.0, t).unwrap();
        for (hw, (ext, text)) in [(sum_plain(&inp), sum_plain_extended(&inp)), (sum_weighted(&inp), sum_weighted_extended(&inp))] {
            let digits = -((hw - ext).abs() / ext.abs()).max(1e-17).log10();
            assert!(digits >= 12.0, "N={n} t={t}: {digits} digits ({hw} vs {text})");
            assert!(text.len() > 20);
        }
    }
}

#[test]
fn small_lattices_have_closed_forms() {
    let (period, d, t) = (2.0 * PI, 0.7, 1.3);
    let one = GaussianSumInput::new(1, period, d, t).unwrap();
    assert_eq!(sum_plain(&one), 0.0);
    assert_eq!(sum_weighted(&one), 0.0);
    let two = GaussianSumInput::new(2, period, d, t).unwrap();
    let a = PI / period;
    let e = (-2.0 * d * t * a * a).exp();
    assert!((sum_plain(&two) - a * e).abs() < 1e-15);
    assert!((sum_weighted(&two) - a.powi(3) * e).abs() < 1e-15);
}

#[test]
fn plain_gap_decays_like_one_over_n() {
    let ns = [8usize, 16, 32, 64, 128];
    let recs = sharpness_sweep(2.0 * PI, 1.0, &ns, &[1.0, 4.0]).unwrap();
    assert_eq!(recs.len(), 2 * ns.len() * 2);
    for t in [1.0, 4.0] {
        let slope = gap_slope(&recs, Variant::Plain, t).unwrap();
        assert!((slope + 1.0).abs() < 0.1, "t={t}: slope {slope}");
    }
    for r in &recs {
        assert_eq!(r.regime, Regime::Appendix);
        assert!(r.gap <= r.variation_bound * (1.0 + 1e-12), "{r:?}");
    }
}

#[test]
fn weighted_sum_is_a_trapezoid_rule() {
    // the integrand is even and vanishes nowhere at the edges, so the one-sided
    // lattice sum equals the trapezoid rule and the gap is second order
    let ns = [8usize, 16, 32, 64];
    let recs = sharpness_sweep(2.0 * PI, 1.0, &ns, &[1.0]).unwrap();
    let slope = gap_slope(&recs, Variant::Weighted, 1.0).unwrap();
    assert!((slope + 2.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn regimes_and_crossover() {
    assert_eq!(Regime::of(1, 5.0), Regime::Outside);
    assert_eq!(Regime::of(4, 0.5), Regime::Outside);
    assert_eq!(Regime::of(4, 1.0).as_str(), "appendix");
    assert_eq!(Regime::Outside.as_str(), "outside-appendix-regime");
    let (period, d, n) = (2.0 * PI, 1.3, 8usize);
    let ts = crossover_time(period, d, n);
    assert!((ts - 3.0 * 64.0 * period * period / (16.0 * d * PI * PI)).abs() < 1e-12 * ts);
    let rep = crossover_diagnostics(period, d, n).unwrap();
    assert!(rep.decreasing_beyond_t_star);
    assert!(rep.max_inequality_excess <= 1e-6);
    assert!(matches!(crossover_diagnostics(period, d, 1), Err(Error::Precondition(_))));
}

#[test]
fn uniform_bounds_hold_on_a_grid() {
    let ns: Vec<usize> = (1..=64).collect();
    let ts: Vec<f64> = (0..60).map(|k| 10f64.powf(-2.0 + k as f64 / 12.0)).collect();
    let b = uniform_bound_check(2.0 * PI, 1.0, &ns, &ts).unwrap();
    assert!(b.small_time_ok && b.monotone_ok);
    assert!(b.sup_plain.is_finite() && b.sup_weighted.is_finite());
    assert!(uniform_bound_check(2.0 * PI, 1.0, &[], &ts).is_err());
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(matches!(GaussianSumInput::new(0, 1.0, 1.0, 1.0), Err(Error::InvalidParams(_))));
    assert!(GaussianSumInput::new(2, -1.0, 1.0, 1.0).is_err());
    assert!(GaussianSumInput::new(2, 1.0, 0.0, 1.0).is_err());
    assert!(GaussianSumInput::new(2, 1.0, 1.0, f64::NAN).is_err());
    assert!(integral_plain(1.0, -1.0, 1.0).is_err());
    assert!(sharpness_gap(1.0, 1.0, 0, 1.0).is_err());
}
