use guidespec_core::intervals::{Interval, IntervalSet};
use guidespec_core::spectra::essential_spectrum_union;
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = Interval> {
    (0i32..20, 0i32..6, any::<bool>(), any::<bool>()).prop_map(|(lo, len, lc, hc)| Interval {
        lo: lo as f64,
        hi: (lo + len) as f64,
        lo_closed: lc,
        hi_closed: hc,
    })
}

fn set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec(interval(), 0..5).prop_map(IntervalSet::from_intervals)
}

/// Half-integers hit every endpoint and every gap between them.
fn probes() -> impl Iterator<Item = f64> {
    (-2..=52).map(|k| k as f64 / 2.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn set_operations_are_pointwise(a in set(), b in set()) {
        let (u, i, d) = (a.union(&b), a.intersection(&b), a.difference(&b));
        for x in probes() {
            prop_assert_eq!(u.contains(x), a.contains(x) || b.contains(x), "union at {}", x);
            prop_assert_eq!(i.contains(x), a.contains(x) && b.contains(x), "intersection at {}", x);
            prop_assert_eq!(d.contains(x), a.contains(x) && !b.contains(x), "difference at {}", x);
        }
        prop_assert!(d.is_disjoint(&b));
        prop_assert_eq!(a.union(&b), b.union(&a));
    }

    #[test]
    fn normal_form_is_sorted_and_separated(a in set()) {
        let parts = a.intervals();
        prop_assert!(parts.iter().all(|p| !p.is_empty()));
        for w in parts.windows(2) {
            let touching = w[0].hi == w[1].lo && (w[0].hi_closed || w[1].lo_closed);
            prop_assert!(w[0].hi <= w[1].lo && !touching);
        }
        prop_assert_eq!(IntervalSet::from_intervals(parts.iter().copied()), a.clone());
    }

    #[test]
    fn complement_partitions_the_window(a in set(), lo in 0i32..10, len in 1i32..15) {
        let window = Interval::closed(lo as f64, (lo + len) as f64);
        let c = a.complement_within(window);
        for x in probes() {
            let inside = window.contains(x);
            prop_assert_eq!(c.contains(x), inside && !a.contains(x), "at {}", x);
        }
    }

    #[test]
    fn union_formula_verifies(a in set(), b in set(), ca in 0i32..25, cb in 0i32..25) {
        let u = essential_spectrum_union(&a, ca as f64, &b, cb as f64);
        prop_assert!(u.verify());
        prop_assert!(u.sigma_ad.is_disjoint(&u.sigma_es0));
        prop_assert_eq!(u.ceiling_mismatch, ca != cb);
        for x in probes() {
            if x > u.trust_ceiling {
                prop_assert!(!u.sigma_es.contains(x));
            }
        }
    }
}

#[test]
fn distance_to_a_set() {
    let s = IntervalSet::from_intervals([Interval::closed(1.0, 2.0), Interval::closed(5.0, 6.0)]);
    assert_eq!(s.distance(1.5), 0.0);
    assert_eq!(s.distance(3.0), 1.0);
    assert_eq!(s.distance(4.5), 0.5);
    assert_eq!(IntervalSet::empty().distance(0.0), f64::INFINITY);
}
