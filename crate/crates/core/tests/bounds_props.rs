mod common;

use causal_subsets::bounds::{
    binary_bound, figure1_table, real_bound, required_k, vc_upper, write_figure1_csv, BoundSpec, ClassSpec, Variant,
};
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Full), Just(Variant::SqrtOnly)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn binary_bound_monotonicity(k in 200u64..1_000_000, h in 1.0f64..50.0, eta in 0.001f64..0.9, v in variant()) {
        let b = |k, h, eta| binary_bound(&BoundSpec::new(k, h, eta).with_variant(v)).unwrap();
        let base = b(k, h, eta);
        prop_assert!(b(k + 1, h, eta) < base);
        prop_assert!(b(k, h * 1.01, eta) > base);
        prop_assert!(b(k, h, eta * 0.99) > base);
        let full = binary_bound(&BoundSpec::new(k, h, eta)).unwrap();
        let half = binary_bound(&BoundSpec::new(k, h, eta).with_variant(Variant::SqrtOnly)).unwrap();
        prop_assert!((full - 2.0 * half).abs() <= 1e-15 * full);
    }

    #[test]
    fn real_bound_scales_with_the_range(k in 100u64..100_000, h in 1.0f64..30.0, eta in 0.01f64..0.5, a in -5.0f64..5.0, w in 0.1f64..10.0) {
        let unit = real_bound(&BoundSpec::new(k, h, eta)).unwrap();
        let scaled = real_bound(&BoundSpec::new(k, h, eta).with_range(a, a + w)).unwrap();
        prop_assert!((scaled - w * unit).abs() <= 1e-12 * scaled);
    }

    #[test]
    fn required_k_is_the_threshold(h in 1.0f64..40.0, eta in 0.01f64..0.5, eps in 0.2f64..3.0, v in variant()) {
        let k = required_k(h, eta, eps, v).unwrap();
        let b = |k| binary_bound(&BoundSpec::new(k, h, eta).with_variant(v)).unwrap();
        prop_assert!(b(k) <= eps);
        if k > (h.ceil() as u64).max(1) {
            prop_assert!(b(k - 1) > eps);
        }
    }
}

#[test]
fn required_k_matches_scan_on_small_cases() {
    for h in [1.0, 2.5, 7.0, 12.0] {
        for eta in [0.05, 0.2] {
            for eps in [0.8, 1.2, 3.0, 100.0] {
                for v in [Variant::Full, Variant::SqrtOnly] {
                    assert_eq!(required_k(h, eta, eps, v).unwrap(), common::required_k_scan(h, eta, eps, v));
                }
            }
        }
    }
}

#[test]
fn vc_upper_examples() {
    assert!((vc_upper(&ClassSpec::Dag { n: 10 }) - (10.0 * 10f64.log2() + 45.0)).abs() < 1e-12);
    assert_eq!(vc_upper(&ClassSpec::Direction { n: 7 }), 6.0);
    assert_eq!(vc_upper(&ClassSpec::PathCorr { n: 4, h_override: Some(3.0) }), 3.0);
}

#[test]
fn figure_table_csv_has_one_row_per_n() {
    let rows = figure1_table(10, 30, 0.1, 0.1).unwrap();
    let mut buf = Vec::new();
    write_figure1_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,required_k_full,required_k_sqrt_only,possible_tests,ratio_full,ratio_sqrt_only"
    );
    assert_eq!(lines.count(), 21);
    assert_eq!(rows[0].possible_tests, 360);
}
