//! Property tests over randomly drawn parameters and data.

use crate::caputo::FracGrid;
use crate::cli::{field_table, parse_field_csv};
use crate::laplace::{forward_laplace, ForwardOptions};
use crate::mlf::{ml, ml_integral, ml_series, MLParams};
use crate::multiplier::{evolve_hom, GridSpec, MultiplierSymbol, StateField};
use num_complex::Complex64;
use proptest::prelude::*;

fn field(grid: GridSpec, values: &[f64]) -> StateField {
    StateField::new(
        grid,
        0.0,
        values.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relaxation_is_completely_monotone(alpha in 0.1f64..0.99, x in 0.0f64..200.0, dx in 0.01f64..50.0) {
        let e = |x: f64, j| ml(alpha, 1.0, -x, j).unwrap();
        let (a, b) = (e(x, 0), e(x + dx, 0));
        prop_assert!(a > 0.0 && b > 0.0 && b <= a * (1.0 + 1e-12));
        // (−1)^j d^j/dx^j E(−x) ≥ 0
        prop_assert!(e(x + dx, 1) >= 0.0);
        prop_assert!(e(x + dx, 2) >= 0.0);
        prop_assert!(a <= 1.0 + 1e-14);
    }

    #[test]
    fn series_and_integral_agree_near_switch(alpha in 0.2f64..0.95, beta_frac in 0.05f64..0.95, z in -5.0f64..-2.0, j in 0usize..3) {
        let p = MLParams::new(alpha, beta_frac * (1.0 + alpha)).unwrap();
        let s = ml_series(p, z, j).unwrap().value;
        let i = ml_integral(p, z, j).unwrap().value;
        prop_assert!((s - i).abs() <= 1e-8 * s.abs().max(1e-3), "{s} vs {i}");
    }

    #[test]
    fn l1_weights(r in 0.01f64..0.99, steps in 2usize..400) {
        let g = FracGrid::new(r, 1.0, steps).unwrap();
        let b = g.weights();
        prop_assert!((b[0] - 1.0).abs() < 1e-15);
        prop_assert!(b.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        let total: f64 = b.iter().take(steps).sum();
        prop_assert!((total - (steps as f64).powf(1.0 - r)).abs() <= 1e-9 * total);
    }

    #[test]
    fn evolution_keeps_real_data_real_and_decays(
        values in proptest::collection::vec(-1.0f64..1.0, 32),
        r in 0.1f64..0.95,
        k in 0.0f64..5.0,
        t1 in 0.01f64..2.0,
        dt in 0.01f64..2.0,
    ) {
        let grid = GridSpec::line(32, 4.0).unwrap();
        let u0 = field(grid, &values);
        let a = MultiplierSymbol::laplacian(k);
        let u1 = evolve_hom(&u0, &a, r, t1).unwrap();
        let u2 = evolve_hom(&u0, &a, r, t1 + dt).unwrap();
        let scale = u0.norm_l2().max(1e-300);
        prop_assert!(u1.max_imag() <= 1e-13 * u0.values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300));
        prop_assert!(u1.norm_l2() <= u0.norm_l2() * (1.0 + 1e-12));
        prop_assert!(u2.norm_l2() <= u1.norm_l2() + 1e-12 * scale);
    }

    #[test]
    fn evolution_is_deterministic(values in proptest::collection::vec(-1.0f64..1.0, 16), r in 0.1f64..0.95, t in 0.0f64..3.0) {
        let grid = GridSpec::line(16, 3.0).unwrap();
        let u0 = field(grid, &values);
        let a = MultiplierSymbol::laplacian(1.0);
        let x = evolve_hom(&u0, &a, r, t).unwrap();
        let y = evolve_hom(&u0, &a, r, t).unwrap();
        prop_assert_eq!(field_table(&x).render(), field_table(&y).render());
    }

    #[test]
    fn field_csv_round_trip(
        re in proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 16),
        im in proptest::collection::vec(-1e300f64..1e300, 16),
        t in 0.0f64..1e6,
        half_width in 1e-3f64..1e3,
    ) {
        let grid = GridSpec::new(2, 4, half_width).unwrap();
        let values = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let f = StateField::new(grid, t, values).unwrap();
        let text = field_table(&f).render();
        let back = parse_field_csv(&text, "mem").unwrap();
        prop_assert_eq!(field_table(&back).render(), text);
        prop_assert_eq!(back, f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn forward_transform_matches_closed_form(alpha in 0.3f64..0.95, s in 1.0f64..4.0) {
        let f = |t: f64| if t == 0.0 { 1.0 } else { ml(alpha, 1.0, -t.powf(alpha), 0).unwrap() };
        let v = forward_laplace(&f, Complex64::new(s, 0.0), 40.0, &ForwardOptions::default()).unwrap();
        let exact = s.powf(alpha - 1.0) / (s.powf(alpha) + 1.0);
        prop_assert!((v.value.re - exact).abs() <= 1e-9 * exact, "{} vs {exact}", v.value.re);
        prop_assert!(v.value.im.abs() <= 1e-12);
    }
}
