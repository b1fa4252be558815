use lieavg_core::quadrature::{cumulative, simpson};
use proptest::prelude::*;

#[test]
fn cubic_exact_at_even_nodes() {
    let h = 0.1;
    let f: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
    let c = cumulative(&f, h);
    for (i, v) in c.iter().enumerate() {
        let exact = (i as f64 * h).powi(4) / 4.0;
        // Even nodes are Simpson-exact; the half panel errs by f'''·h⁴/24.
        let tol = if i % 2 == 0 { 1e-15 } else { 0.26 * h.powi(4) };
        assert!((v - exact).abs() < tol, "{i}: {v} vs {exact}");
    }
    assert!((simpson(&f, h) - 0.25).abs() < 1e-15);
}

#[test]
fn odd_interval_count_is_exact_for_quadratics() {
    let h = 0.1;
    let f: Vec<f64> = (0..=9).map(|i| (i as f64 * h).powi(2)).collect();
    let exact = 0.9f64.powi(3) / 3.0;
    assert!((simpson(&f, h) - exact).abs() < 1e-14);
    assert!((cumulative(&f, h)[9] - exact).abs() < 1e-14);
}

#[test]
fn degenerate_grids() {
    assert_eq!(simpson(&[], 0.1), 0.0);
    assert_eq!(simpson(&[3.0], 0.1), 0.0);
    assert_eq!(cumulative(&[1.0, 3.0], 0.5), vec![0.0, 1.0]);
}

proptest! {
    #[test]
    fn last_prefix_equals_total(v in prop::collection::vec(-5.0f64..5.0, 3..60), h in 0.01f64..1.0) {
        let c = cumulative(&v, h);
        let s = simpson(&v, h);
        prop_assert!((c[v.len() - 1] - s).abs() <= 1e-12 * (1.0 + s.abs()));
    }

    #[test]
    fn linear_in_the_integrand(v in prop::collection::vec(-5.0f64..5.0, 3..40), a in -3.0f64..3.0) {
        let scaled: Vec<f64> = v.iter().map(|x| a * x).collect();
        let c = cumulative(&v, 0.1);
        let d = cumulative(&scaled, 0.1);
        for (x, y) in c.iter().zip(&d) {
            prop_assert!((a * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}
