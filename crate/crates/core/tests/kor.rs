use proptest::prelude::*;
use reccoord::kor::{cascade_key, equal_key, prorate_key, Key, CASCADE_EPS};

fn offers() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..10.0f64], 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn activations_respect_caps_and_request(o in offers(), request in 0.0..50.0f64) {
        for key in Key::ALL {
            let a = key.apply(&o, request);
            prop_assert_eq!(a.len(), o.len());
            for (x, c) in a.iter().zip(&o) {
                prop_assert!(*x >= 0.0 && *x <= *c + 1e-12, "{key}: {x} vs cap {c}");
            }
            prop_assert!(a.iter().sum::<f64>() <= request + 1e-9, "{key}");
        }
    }

    #[test]
    fn permutation_equivariant(o in offers(), request in 0.0..50.0f64, rot in 0usize..12) {
        let n = o.len();
        let r = rot % n;
        let rotated: Vec<f64> = (0..n).map(|i| o[(i + r) % n]).collect();
        for key in Key::ALL {
            let a = key.apply(&o, request);
            let b = key.apply(&rotated, request);
            for i in 0..n {
                prop_assert!((b[i] - a[(i + r) % n]).abs() <= 1e-9, "{key}");
            }
        }
    }

    #[test]
    fn cascade_dispatches_everything_it_can(o in offers(), request in 0.0..50.0f64) {
        let total: f64 = cascade_key(&o, request).iter().sum();
        let want = request.min(o.iter().filter(|&&c| c > CASCADE_EPS).sum());
        prop_assert!((total - want).abs() <= 1e-9, "{total} vs {want}");
    }

    #[test]
    fn cascade_dominates_equal(o in offers(), request in 0.0..50.0f64) {
        let c = cascade_key(&o, request);
        let e = equal_key(&o, request);
        for (x, y) in c.iter().zip(&e) {
            prop_assert!(*x >= *y - 1e-9);
        }
    }

    #[test]
    fn prorate_fills_when_short(o in offers(), request in 0.0..50.0f64) {
        let total: f64 = o.iter().sum();
        let a: f64 = prorate_key(&o, request).iter().sum();
        prop_assert!((a - request.min(total)).abs() <= 1e-9 * total.max(1.0));
    }
}

#[test]
fn worked_examples() {
    let o = [2.0, 8.0, 8.0];
    assert_eq!(cascade_key(&o, 10.0), vec![2.0, 4.0, 4.0]);
    assert_eq!(prorate_key(&o, 9.0), vec![1.0, 4.0, 4.0]);
    assert_eq!(equal_key(&o, 3.0), vec![1.0, 1.0, 1.0]);
    assert_eq!(equal_key(&[0.0, 4.0], 3.0), vec![0.0, 3.0]);
    assert_eq!(cascade_key(&o, 100.0), vec![2.0, 8.0, 8.0]);
    for key in Key::ALL {
        assert_eq!(key.apply(&[0.0, 0.0], 5.0), vec![0.0, 0.0]);
        assert_eq!(key.apply(&o, 0.0), vec![0.0; 3]);
        assert_eq!(key.name().parse::<Key>(), Ok(key));
    }
}
