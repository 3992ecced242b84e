use lle_bloch::transforms::*;
use lle_bloch::{Error, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn sample(n: usize, period: f64, n_cell: usize, vals: &[(f64, f64)]) -> FieldSample {
    FieldSample::new(n, period, vals.iter().take(n * n_cell).map(|&(a, b)| C64::new(a, b)).collect()).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn subharmonic_parseval(n in prop::sample::select(vec![1usize, 2, 3, 4, 8, 16, 32]), v in values(2 * 32 * 16), period in 0.5f64..10.0) {
        let f = sample(n, period, 16, &v[..n * 16]);
        let g = sample(n, period, 16, &v[32 * 16..32 * 16 + n * 16]);
        let (lhs, rhs) = parseval_subharmonic(&f, &g).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-11, "N={}: {} vs {}", n, lhs, rhs);
    }

    #[test]
    fn inverse_representation(n in prop::sample::select(vec![1usize, 2, 3, 4, 8, 16, 32]), v in values(32 * 16)) {
        let g = sample(n, 2.0 * PI, 16, &v);
        let back = inverse_bloch(&bloch_t(&g).unwrap());
        let scale = g.norm_sup();
        for (a, b) in back.values.iter().zip(&g.values) {
            prop_assert!((a - b).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn product_identities(n in prop::sample::select(vec![1usize, 2, 3, 4, 8, 16, 32]), v in values(33 * 16)) {
        // a band-limited periodic factor keeps the product resolved on the doubled grid
        let f = FieldSample::from_fn(1, 2.0 * PI, 16, |x| {
            C64::new(v[0].0 + v[1].0 * x.cos() + v[2].0 * (2.0 * x).sin(), v[0].1 + v[1].1 * (3.0 * x).cos())
        }).unwrap();
        let g = sample(n, 2.0 * PI, 16, &v[16..]);
        let p = product_identity_check(&f, &g).unwrap();
        prop_assert!(p.max_error < 1e-11, "B(fg) = f B(g): {}", p.max_error);
        prop_assert!(p.inner_error() < 1e-11, "inner product identity: {}", p.inner_error());
    }

    #[test]
    fn bloch_transform_is_linear(v in values(4 * 16), w in values(4 * 16), a in -2.0f64..2.0) {
        let f = sample(4, 1.0, 16, &v);
        let g = sample(4, 1.0, 16, &w);
        let h = FieldSample::new(4, 1.0, f.values.iter().zip(&g.values).map(|(x, y)| x * a + y).collect()).unwrap();
        let (bf, bg, bh) = (bloch_t(&f).unwrap(), bloch_t(&g).unwrap(), bloch_t(&h).unwrap());
        for s in 0..4 {
            for l in -8..8 {
                let want = bf.mode(s, l) * a + bg.mode(s, l);
                prop_assert!((bh.mode(s, l) - want).norm() < 1e-12 * (1.0 + want.norm()));
            }
        }
    }
}

#[test]
fn plane_wave_lands_in_one_slice_and_mode() {
    // exp(i (xi_j + 2 pi l / T) x) on [0, NT): one nonzero coefficient equal to NT
    let (n, period, n_cell) = (4usize, 2.0, 16usize);
    let (j, l) = (1i64, 3i64);
    let z = 2.0 * PI * j as f64 / (n as f64 * period) + 2.0 * PI * l as f64 / period;
    let g = FieldSample::from_fn(n, period, n * n_cell, |x| C64::from_polar(1.0, z * x)).unwrap();
    let b = bloch_t(&g).unwrap();
    let slice = b.lattice.indices.iter().position(|&k| k == j).unwrap();
    assert!((b.mode(slice, l) - C64::new(n as f64 * period, 0.0)).norm() < 1e-12);
    let total: f64 = (0..n)
        .flat_map(|s| (-(n_cell as i64) / 2..n_cell as i64 / 2).map(move |m| (s, m)))
        .filter(|&(s, m)| (s, m) != (slice, l))
        .map(|(s, m)| b.mode(s, m).norm())
        .sum();
    assert!(total < 1e-11);
}

#[test]
fn lattice_layout() {
    let l1 = lattice(1, 2.0 * PI).unwrap();
    assert_eq!(l1.indices, vec![0]);
    let l4 = lattice(4, 2.0 * PI).unwrap();
    assert_eq!(l4.indices, vec![-2, -1, 0, 1]);
    assert_eq!(l4.frequencies[0], -0.5);
    assert_eq!(l4.zero_index(), 2);
    let l3 = lattice(3, 1.0).unwrap();
    assert_eq!(l3.indices, vec![-1, 0, 1]);
    assert!((l3.spacing - 2.0 * PI / 3.0).abs() < 1e-15);
    assert!(matches!(lattice(0, 1.0), Err(Error::InvalidParams(_))));
}

proptest! {
    #[test]
    fn nested_lattices_share_frequencies_bitwise(k in 0u32..6, j in -16i64..16, period in 0.1f64..20.0) {
        let n = 1usize << k;
        prop_assert_eq!(
            lattice_frequency(j, n, period).to_bits(),
            lattice_frequency(2 * j, 2 * n, period).to_bits()
        );
    }
}

#[test]
fn grid_must_divide_into_cells() {
    let g = FieldSample { n: 3, period: 1.0, n_grid: 16, values: vec![C64::new(0.0, 0.0); 16] };
    assert!(matches!(bloch_t(&g), Err(Error::GridMismatch { .. })));
    assert!(FieldSample::new(3, 1.0, vec![C64::new(0.0, 0.0); 16]).is_err());
}

#[test]
fn window_leak_and_localized_transform() {
    let len = 64.0 * 2.0 * PI;
    let tight = FieldSample::from_fn(64, 2.0 * PI, 64 * 16, |x| C64::new((-(x - 0.5 * len).powi(2) / 8.0).exp(), 0.0)).unwrap();
    assert!(window_leak(&tight) < 1e-10);
    assert!(bloch_localized(&tight).is_ok());
    let wide = FieldSample::from_fn(64, 2.0 * PI, 64 * 16, |x| C64::new((-(x - 0.5 * len).powi(2) / 2e4).exp(), 0.0)).unwrap();
    assert!(window_leak(&wide) > 1e-10);
    assert!(matches!(bloch_localized(&wide), Err(Error::WindowLeak { .. })));
}

#[test]
fn field_json_carries_its_header() {
    let g = FieldSample::from_fn(2, 3.0, 8, |x| C64::new(x, -x)).unwrap();
    let v: serde_json::Value = serde_json::to_value(&g).unwrap();
    assert_eq!(v["N"], 2);
    assert_eq!(v["T"], 3.0);
    assert_eq!(v["n_grid"], 8);
    let back: FieldSample = serde_json::from_value(v).unwrap();
    assert_eq!(back, g);
}

#[test]
fn bloch_dump_is_keyed_by_slice_index() {
    let g = FieldSample::from_fn(4, 1.0, 32, |x| C64::new((2.0 * PI * x).cos(), 0.0)).unwrap();
    let dump = serde_json::to_value(bloch_t(&g).unwrap().to_dump()).unwrap();
    let text = dump.to_string();
    for j in ["-2", "-1", "0", "1"] {
        assert!(text.contains(&format!("\"{j}\"")), "missing slice {j} in {text}");
    }
}

#[test]
fn cell_points_cover_the_truncation() {
    for m in [1usize, 7, 32, 33] {
        let c = cell_points(m);
        assert!(c >= 4 * m + 2 && c.is_power_of_two());
    }
}
