//! Finite unions of real intervals with explicit endpoint closure.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn point(x: f64) -> Self {
        Self::closed(x, x)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    /// Distance from `x` to the closure.
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = match self.lo.partial_cmp(&other.lo) {
            Some(Ordering::Greater) => (self.lo, self.lo_closed),
            Some(Ordering::Less) => (other.lo, other.lo_closed),
            _ => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Less) => (self.hi, self.hi_closed),
            Some(Ordering::Greater) => (other.hi, other.hi_closed),
            _ => (self.hi, self.hi_closed && other.hi_closed),
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Sorted, pairwise disjoint, non-adjacent intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

/// Whether `a` (left) and `b` (right, `b.lo >= a.lo`) overlap or touch.
fn joins(a: &Interval, b: &Interval) -> bool {
    b.lo < a.hi || (b.lo == a.hi && (a.hi_closed || b.lo_closed))
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(items: I) -> Self {
        let mut parts: Vec<Interval> = items.into_iter().filter(|i| !i.is_empty()).collect();
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut out: Vec<Interval> = Vec::with_capacity(parts.len());
        for iv in parts {
            match out.last_mut() {
                Some(last) if joins(last, &iv) => {
                    if iv.lo == last.lo {
                        last.lo_closed |= iv.lo_closed;
                    }
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                        last.hi_closed = iv.hi_closed;
                    } else if iv.hi == last.hi {
                        last.hi_closed |= iv.hi_closed;
                    }
                }
                _ => out.push(iv),
            }
        }
        IntervalSet { parts: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|i| i.contains(x))
    }

    pub fn distance(&self, x: f64) -> f64 {
        self.parts.iter().map(|i| i.distance(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.parts.iter().chain(&other.parts).copied())
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let c = a.intersect(b);
                if !c.is_empty() {
                    out.push(c);
                }
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Complement within `window`.
    pub fn complement_within(&self, window: Interval) -> IntervalSet {
        let mut out = Vec::new();
        let mut cursor = window.lo;
        let mut cursor_closed = window.lo_closed;
        for p in &self.parts {
            let piece = Interval { lo: cursor, hi: p.lo, lo_closed: cursor_closed, hi_closed: !p.lo_closed };
            let clipped = piece.intersect(&window);
            if !clipped.is_empty() {
                out.push(clipped);
            }
            if p.hi > cursor || (p.hi == cursor && p.hi_closed) {
                cursor = p.hi;
                cursor_closed = !p.hi_closed;
            }
        }
        let tail = Interval { lo: cursor, hi: window.hi, lo_closed: cursor_closed, hi_closed: window.hi_closed };
        let clipped = tail.intersect(&window);
        if !clipped.is_empty() {
            out.push(clipped);
        }
        IntervalSet::from_intervals(out)
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.parts {
            let rest = other.complement_within(*a);
            out.extend(rest.parts);
        }
        IntervalSet::from_intervals(out)
    }

    /// Restriction to `(-∞, ceiling]`.
    pub fn clip_above(&self, ceiling: f64) -> IntervalSet {
        self.intersection(&IntervalSet::from_intervals([Interval::closed(f64::NEG_INFINITY, ceiling)]))
    }

    pub fn is_disjoint(&self, other: &IntervalSet) -> bool {
        self.intersection(other).is_empty()
    }

    /// Each interval widened by `delta` on both sides.
    pub fn inflated(&self, delta: f64) -> IntervalSet {
        IntervalSet::from_intervals(self.parts.iter().map(|i| Interval::closed(i.lo - delta, i.hi + delta)))
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("∅");
        }
        let s: Vec<String> = self.parts.iter().map(|i| i.to_string()).collect();
        f.write_str(&s.join(" ∪ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::from_intervals(items.iter().map(|&(a, b)| Interval::closed(a, b)))
    }

    #[test]
    fn merging() {
        assert!(set(&[]).is_empty());
        assert_eq!(set(&[(1.0, 2.0)]).intervals(), &[Interval::closed(1.0, 2.0)]);
        assert_eq!(set(&[(1.0, 2.0), (1.5, 3.0)]), set(&[(1.0, 3.0)]));
        assert_eq!(set(&[(2.0, 3.0), (0.0, 1.0)]).len(), 2);
        assert_eq!(set(&[(0.0, 1.0), (1.0, 2.0)]), set(&[(0.0, 2.0)]));
        let open_touch = IntervalSet::from_intervals([
            Interval { lo: 0.0, hi: 1.0, lo_closed: true, hi_closed: false },
            Interval { lo: 1.0, hi: 2.0, lo_closed: false, hi_closed: true },
        ]);
        assert_eq!(open_touch.len(), 2);
    }

    #[test]
    fn union_and_difference() {
        let s0 = set(&[(0.0, 1.0), (2.0, 3.0)]);
        let s1 = set(&[(1.4, 1.6)]);
        assert_eq!(s0.union(&s1).len(), 3);
        assert_eq!(s1.difference(&s0), s1);

        let s0 = set(&[(0.0, 1.0)]);
        let s1 = set(&[(0.9, 1.2)]);
        let ad = s1.difference(&s0);
        assert_eq!(ad.intervals(), &[Interval { lo: 1.0, hi: 1.2, lo_closed: false, hi_closed: true }]);
        assert!(ad.is_disjoint(&s0));
        assert_eq!(s0.union(&s1), set(&[(0.0, 1.2)]));
        assert!(set(&[(0.2, 0.5)]).difference(&s0).is_empty());
    }

    #[test]
    fn complement() {
        let s = set(&[(1.0, 2.0), (3.0, 4.0)]);
        let gaps = s.complement_within(Interval::closed(0.0, 5.0));
        assert_eq!(
            gaps.intervals(),
            &[
                Interval { lo: 0.0, hi: 1.0, lo_closed: true, hi_closed: false },
                Interval { lo: 2.0, hi: 3.0, lo_closed: false, hi_closed: false },
                Interval { lo: 4.0, hi: 5.0, lo_closed: false, hi_closed: true },
            ]
        );
        assert!(set(&[(0.0, 10.0)]).complement_within(Interval::closed(0.0, 5.0)).is_empty());
    }

    fn arb_set() -> impl Strategy<Value = IntervalSet> {
        prop::collection::vec((0i32..40, 0i32..6), 0..6).prop_map(|v| {
            IntervalSet::from_intervals(v.into_iter().map(|(a, w)| Interval::closed(a as f64 * 0.5, (a + w) as f64 * 0.5)))
        })
    }

    proptest! {
        #[test]
        fn set_algebra_laws(a in arb_set(), b in arb_set(), x in 0i32..50) {
            let x = x as f64 * 0.25 + 0.125;
            let u = a.union(&b);
            prop_assert_eq!(u.contains(x), a.contains(x) || b.contains(x));
            let d = b.difference(&a);
            prop_assert_eq!(d.contains(x), b.contains(x) && !a.contains(x));
            prop_assert!(d.is_disjoint(&a));
            prop_assert_eq!(d.union(&a), u.clone());
            for w in u.intervals().windows(2) {
                prop_assert!(w[0].hi < w[1].lo);
            }
        }
    }
}
