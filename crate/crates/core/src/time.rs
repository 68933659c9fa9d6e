//! Nanosecond timestamps and closed-interval set algebra.
//!
//! Every annotation and detection in this crate is a closed interval of
//! nanoseconds. Interval sets are kept sorted, disjoint and merged (touching
//! intervals are coalesced), so durations and set operations behave like
//! Lebesgue measure on the time axis: a point interval has zero duration.

use std::fmt;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};

use crate::error::{Error, Result};

pub const NS_PER_SEC: i64 = 1_000_000_000;

/// Signed nanoseconds since 1970-01-01T00:00:00Z. Covers 1677–2262, which
/// comfortably includes the 1970–2100 range required for mission data.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp {
    ns: i64,
}

impl Timestamp {
    pub const fn from_ns(ns: i64) -> Self {
        Timestamp { ns }
    }

    pub const fn ns(self) -> i64 {
        self.ns
    }

    /// Parse an ISO-8601 UTC timestamp (`YYYY-MM-DDThh:mm:ss[.n{1..9}]Z`).
    pub fn parse_iso(s: &str) -> Result<Self> {
        if !s.ends_with('Z') {
            return Err(Error::InvalidTimestamp(s.to_string()));
        }
        let dt = DateTime::parse_from_rfc3339(s).map_err(|_| Error::InvalidTimestamp(s.to_string()))?;
        let ns = dt
            .timestamp_nanos_opt()
            .ok_or_else(|| Error::InvalidTimestamp(s.to_string()))?;
        Ok(Timestamp::from_ns(ns))
    }

    /// Canonical ISO-8601 form: subseconds rendered in groups of three
    /// digits, only when non-zero. Writing then re-parsing is lossless.
    pub fn to_iso(self) -> String {
        Utc.timestamp_nanos(self.ns)
            .to_rfc3339_opts(SecondsFormat::AutoSi, true)
    }

    /// Round down to an integer multiple of `resolution_ns` (epoch-anchored).
    pub fn floor_to(self, resolution_ns: i64) -> Timestamp {
        Timestamp::from_ns(self.ns.div_euclid(resolution_ns) * resolution_ns)
    }

    /// Round up to an integer multiple of `resolution_ns` (epoch-anchored).
    pub fn ceil_to(self, resolution_ns: i64) -> Timestamp {
        let q = self.ns.div_euclid(resolution_ns);
        if q * resolution_ns == self.ns {
            self
        } else {
            Timestamp::from_ns((q + 1) * resolution_ns)
        }
    }

    pub fn offset(self, delta_ns: i64) -> Timestamp {
        Timestamp::from_ns(self.ns + delta_ns)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Timestamp({} = {})", self.ns, self.to_iso())
    }
}

/// A closed interval `[start, end]` with `start <= end`.
/// `start == end` is a point event.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    start: Timestamp,
    end: Timestamp,
}

impl TimeInterval {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self> {
        if end < start {
            return Err(Error::validation(format!(
                "interval end {} precedes start {}",
                end, start
            )));
        }
        Ok(TimeInterval { start, end })
    }

    pub fn point(at: Timestamp) -> Self {
        TimeInterval { start: at, end: at }
    }

    pub fn from_ns(start_ns: i64, end_ns: i64) -> Result<Self> {
        TimeInterval::new(Timestamp::from_ns(start_ns), Timestamp::from_ns(end_ns))
    }

    pub const fn start(&self) -> Timestamp {
        self.start
    }

    pub const fn end(&self) -> Timestamp {
        self.end
    }

    pub fn duration_ns(&self) -> i64 {
        self.end.ns() - self.start.ns()
    }

    pub fn is_point(&self) -> bool {
        self.start == self.end
    }

    /// Closed ranges intersect iff they share at least one nanosecond,
    /// so `[0,10]` and `[10,20]` do intersect.
    pub fn intersects(&self, other: &TimeInterval) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn intersection(&self, other: &TimeInterval) -> Option<TimeInterval> {
        if self.intersects(other) {
            Some(TimeInterval {
                start: self.start.max(other.start),
                end: self.end.min(other.end),
            })
        } else {
            None
        }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn hull(&self, other: &TimeInterval) -> TimeInterval {
        TimeInterval {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    /// Widen a point interval to 1 ns; longer intervals pass through.
    pub fn point_adjusted(&self) -> TimeInterval {
        if self.is_point() {
            TimeInterval {
                start: self.start,
                end: self.end.offset(1),
            }
        } else {
            *self
        }
    }
}

impl fmt::Debug for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start.ns(), self.end.ns())
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// A sorted, disjoint, merged set of closed intervals. No two members
/// intersect or touch; this is the canonical form produced by all set
/// operations.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    intervals: Vec<TimeInterval>,
}

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet::default()
    }

    pub fn singleton(interval: TimeInterval) -> Self {
        IntervalSet {
            intervals: vec![interval],
        }
    }

    /// Normalize an arbitrary collection: sort by start and merge every
    /// overlapping or touching pair.
    pub fn from_intervals<I: IntoIterator<Item = TimeInterval>>(intervals: I) -> Self {
        let mut v: Vec<TimeInterval> = intervals.into_iter().collect();
        v.sort_by_key(|iv| (iv.start(), iv.end()));
        let mut merged: Vec<TimeInterval> = Vec::with_capacity(v.len());
        for iv in v {
            match merged.last_mut() {
                Some(last) if iv.start() <= last.end() => {
                    if iv.end() > last.end() {
                        *last = TimeInterval {
                            start: last.start(),
                            end: iv.end(),
                        };
                    }
                }
                _ => merged.push(iv),
            }
        }
        IntervalSet { intervals: merged }
    }

    pub fn intervals(&self) -> &[TimeInterval] {
        &self.intervals
    }

    pub fn iter(&self) -> impl Iterator<Item = &TimeInterval> {
        self.intervals.iter()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn hull(&self) -> Option<TimeInterval> {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(first), Some(last)) => Some(TimeInterval {
                start: first.start(),
                end: last.end(),
            }),
            _ => None,
        }
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        IntervalSet::from_intervals(self.iter().chain(other.iter()).copied())
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            if let Some(iv) = a.intersection(b) {
                out.push(iv);
            }
            if a.end() <= b.end() {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Measure-theoretic difference: zero-width subtrahend pieces are
    /// skipped and zero-width residues of a cut are dropped, so
    /// `[0,10] \ [2,4]` is `{[0,2],[4,10]}` and `[0,10] \ [3,3]` is `[0,10]`.
    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let mut j = 0;
        for iv in &self.intervals {
            let mut cur_start = iv.start();
            let cur_end = iv.end();
            while j < other.intervals.len() && other.intervals[j].end() < cur_start {
                j += 1;
            }
            let mut k = j;
            let mut alive = true;
            while k < other.intervals.len() && other.intervals[k].start() <= cur_end {
                let cut = &other.intervals[k];
                if !cut.is_point() {
                    if cut.start() > cur_start {
                        out.push(TimeInterval {
                            start: cur_start,
                            end: cut.start().min(cur_end),
                        });
                    }
                    if cut.end() >= cur_end {
                        alive = false;
                        break;
                    }
                    cur_start = cur_start.max(cut.end());
                }
                k += 1;
            }
            if alive && (cur_start < cur_end || (iv.is_point() && cur_start == cur_end)) {
                out.push(TimeInterval {
                    start: cur_start,
                    end: cur_end,
                });
            }
        }
        // Residues may touch each other only through dropped zero-width
        // pieces; touching residues of one source interval cannot occur.
        IntervalSet { intervals: out }
    }

    /// Total measure in nanoseconds; a point interval contributes 0.
    pub fn total_duration_ns(&self) -> i64 {
        self.intervals.iter().map(|iv| iv.duration_ns()).sum()
    }

    pub fn intersects(&self, probe: &TimeInterval) -> bool {
        !self.overlapping(probe).is_empty()
    }

    /// Member intervals intersecting `probe`, as a contiguous slice.
    pub fn overlapping(&self, probe: &TimeInterval) -> &[TimeInterval] {
        let lo = self
            .intervals
            .partition_point(|iv| iv.end() < probe.start());
        let hi = self
            .intervals
            .partition_point(|iv| iv.start() <= probe.end());
        &self.intervals[lo..hi]
    }

    pub fn clamp_to(&self, window: &TimeInterval) -> IntervalSet {
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .filter_map(|iv| iv.intersection(window))
                .collect(),
        }
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.intervals).finish()
    }
}

impl FromIterator<TimeInterval> for IntervalSet {
    fn from_iter<I: IntoIterator<Item = TimeInterval>>(iter: I) -> Self {
        IntervalSet::from_intervals(iter)
    }
}

/// Minimal disjoint-merged set covering exactly `a ∪ b`.
pub fn interval_union(a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
    a.union(b)
}

/// True iff the closed ranges share at least one nanosecond.
pub fn interval_intersects(a: &TimeInterval, b: &TimeInterval) -> bool {
    a.intersects(b)
}

/// Sum over intervals of `end - start` in nanoseconds.
pub fn total_duration(s: &IntervalSet) -> i64 {
    s.total_duration_ns()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(a: i64, b: i64) -> TimeInterval {
        TimeInterval::from_ns(a, b).unwrap()
    }

    fn set(pairs: &[(i64, i64)]) -> IntervalSet {
        IntervalSet::from_intervals(pairs.iter().map(|&(a, b)| iv(a, b)))
    }

    #[test]
    fn union_merges_overlap() {
        assert_eq!(set(&[(10, 20)]).union(&set(&[(15, 30)])), set(&[(10, 30)]));
    }

    #[test]
    fn union_identity_with_point() {
        assert_eq!(IntervalSet::new().union(&set(&[(5, 5)])), set(&[(5, 5)]));
    }

    #[test]
    fn union_keeps_gaps() {
        assert_eq!(
            set(&[(0, 1), (3, 4)]).union(&set(&[(2, 2)])),
            set(&[(0, 1), (2, 2), (3, 4)])
        );
    }

    #[test]
    fn union_merges_touching() {
        assert_eq!(set(&[(0, 10)]).union(&set(&[(10, 20)])), set(&[(0, 20)]));
    }

    #[test]
    fn intersects_closed_touch() {
        assert!(interval_intersects(&iv(0, 10), &iv(10, 20)));
        assert!(!interval_intersects(&iv(0, 10), &iv(11, 20)));
        assert!(interval_intersects(&iv(5, 5), &iv(0, 10)));
    }

    #[test]
    fn duration_sums() {
        assert_eq!(total_duration(&set(&[(0, 5), (10, 12)])), 7);
        assert_eq!(total_duration(&IntervalSet::new()), 0);
        assert_eq!(total_duration(&set(&[(3, 3)])), 0);
    }

    #[test]
    fn subtract_cuts_interior() {
        assert_eq!(
            set(&[(0, 10)]).subtract(&set(&[(2, 4)])),
            set(&[(0, 2), (4, 10)])
        );
        assert_eq!(set(&[(0, 10)]).subtract(&set(&[(3, 3)])), set(&[(0, 10)]));
        assert_eq!(set(&[(0, 10)]).subtract(&set(&[(0, 10)])), set(&[]));
        assert_eq!(set(&[(5, 5)]).subtract(&set(&[(0, 4)])), set(&[(5, 5)]));
        assert_eq!(set(&[(5, 5)]).subtract(&set(&[(0, 6)])), set(&[]));
        assert_eq!(set(&[(2, 4)]).subtract(&set(&[(0, 3)])), set(&[(3, 4)]));
    }

    #[test]
    fn overlapping_slice() {
        let s = set(&[(0, 5), (10, 15), (20, 25)]);
        assert_eq!(s.overlapping(&iv(6, 9)), &[] as &[TimeInterval]);
        assert_eq!(s.overlapping(&iv(5, 10)), &[iv(0, 5), iv(10, 15)]);
        assert!(s.intersects(&iv(25, 30)));
        assert!(!s.intersects(&iv(26, 30)));
    }

    #[test]
    fn timestamp_rounding() {
        let res = 10 * NS_PER_SEC;
        let t = Timestamp::parse_iso("2000-01-01T08:10:12Z").unwrap();
        assert_eq!(t.floor_to(res), Timestamp::parse_iso("2000-01-01T08:10:10Z").unwrap());
        assert_eq!(t.ceil_to(res), Timestamp::parse_iso("2000-01-01T08:10:20Z").unwrap());
        let on_grid = Timestamp::parse_iso("2000-01-01T08:10:20Z").unwrap();
        assert_eq!(on_grid.floor_to(res), on_grid);
        assert_eq!(on_grid.ceil_to(res), on_grid);
        // negative epochs round toward minus infinity
        let neg = Timestamp::from_ns(-12);
        assert_eq!(neg.floor_to(10).ns(), -20);
        assert_eq!(neg.ceil_to(10).ns(), -10);
    }

    #[test]
    fn timestamp_iso_round_trip() {
        for s in [
            "1970-01-01T00:00:00Z",
            "2000-01-02T00:00:00Z",
            "2099-12-31T23:59:59.999999999Z",
            "2014-07-01T12:34:56.123Z",
        ] {
            let t = Timestamp::parse_iso(s).unwrap();
            assert_eq!(t.to_iso(), s);
            assert_eq!(Timestamp::parse_iso(&t.to_iso()).unwrap(), t);
        }
        assert!(Timestamp::parse_iso("2000-01-02 00:00:00").is_err());
        assert!(Timestamp::parse_iso("2000-01-02T00:00:00+01:00").is_err());
    }

    prop_compose! {
        fn arb_set()(pairs in prop::collection::vec((0i64..500, 0i64..50), 0..12)) -> IntervalSet {
            IntervalSet::from_intervals(pairs.into_iter().map(|(a, len)| iv(a, a + len)))
        }
    }

    proptest! {
        #[test]
        fn union_idempotent_commutative_associative(a in arb_set(), b in arb_set(), c in arb_set()) {
            prop_assert_eq!(a.union(&a), a.clone());
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
        }

        #[test]
        fn inclusion_exclusion_duration(a in arb_set(), b in arb_set()) {
            let lhs = total_duration(&a.union(&b)) + total_duration(&a.intersection(&b));
            prop_assert_eq!(lhs, total_duration(&a) + total_duration(&b));
        }

        #[test]
        fn subtract_disjoint_from_subtrahend(a in arb_set(), b in arb_set()) {
            let d = a.subtract(&b);
            prop_assert_eq!(total_duration(&d) + total_duration(&a.intersection(&b)), total_duration(&a));
            // subtraction result never overlaps the subtrahend by positive measure
            prop_assert_eq!(total_duration(&d.intersection(&b)), 0);
        }
    }
}
