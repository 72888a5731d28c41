//! Arcs and finite interval unions on the circle ℝ/ℤ, represented on [0, 1].
//!
//! Pieces are closed intervals. A set that wraps through 0 is stored as two
//! pieces, one ending at 1 and one starting at 0; no stored piece crosses the
//! seam. Pieces closer than [`MERGE_EPS`] are merged on canonicalization.
//!
//! Degenerate pieces `[p, p]` are allowed so that point targets can be
//! intersected and tested for containment. They carry no measure and are
//! ignored by [`IntervalUnion::complement`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pieces whose gap is at most this wide are merged.
pub const MERGE_EPS: f64 = 1e-15;

/// Distance between two points of ℝ/ℤ given by representatives in [0, 1).
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

/// The ball `B(center, radius)` on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    center: f64,
    radius: f64,
}

impl Arc {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&center) {
            return Err(Error::invalid("center", format!("{center} not in [0, 1)")));
        }
        if !(radius > 0.0 && radius <= 0.5) {
            return Err(Error::invalid("radius", format!("{radius} not in (0, 1/2]")));
        }
        Ok(Arc { center, radius })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Closed-arc membership.
    pub fn contains(&self, p: f64) -> bool {
        circular_distance(self.center, p) <= self.radius
    }

    /// Pieces of the arc in [0, 1]; one piece, or two when it wraps.
    fn pieces(&self) -> [Option<Interval>; 2] {
        let lo = self.center - self.radius;
        let hi = self.center + self.radius;
        if lo < 0.0 {
            [Some(Interval::raw(0.0, hi)), Some(Interval::raw(lo + 1.0, 1.0))]
        } else if hi > 1.0 {
            [Some(Interval::raw(0.0, hi - 1.0)), Some(Interval::raw(lo, 1.0))]
        } else {
            [Some(Interval::raw(lo, hi)), None]
        }
    }
}

/// A closed piece `[lo, hi]` with `0 ≤ lo ≤ hi ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::invalid(
                "interval",
                format!("[{lo}, {hi}] is not a piece of [0, 1]"),
            ));
        }
        Ok(Interval { lo, hi })
    }

    #[inline]
    pub(crate) fn raw(lo: f64, hi: f64) -> Self {
        debug_assert!(0.0 <= lo && lo <= hi && hi <= 1.0, "[{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

#[inline]
fn touches(hi: f64, next_lo: f64) -> bool {
    next_lo - hi <= MERGE_EPS
}

/// Canonical finite union of closed pieces of [0, 1].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntervalUnion {
    pieces: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion { pieces: Vec::new() }
    }

    pub fn full() -> Self {
        IntervalUnion {
            pieces: vec![Interval::raw(0.0, 1.0)],
        }
    }

    /// Canonicalizes an arbitrary list of pieces.
    pub fn from_intervals(pieces: impl IntoIterator<Item = Interval>) -> Self {
        let mut pieces: Vec<Interval> = pieces.into_iter().collect();
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        Self::merge_sorted(pieces)
    }

    /// Validates and canonicalizes `(lo, hi)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let pieces = pairs
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_intervals(pieces))
    }

    /// Points as degenerate pieces.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        let pieces = points
            .iter()
            .map(|&p| Interval::new(p, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_intervals(pieces))
    }

    /// Pieces already sorted, disjoint and separated by more than `MERGE_EPS`.
    pub(crate) fn from_canonical(pieces: Vec<Interval>) -> Self {
        debug_assert!(pieces.windows(2).all(|w| !touches(w[0].hi, w[1].lo)));
        IntervalUnion { pieces }
    }

    fn merge_sorted(sorted: Vec<Interval>) -> Self {
        let mut out: Vec<Interval> = Vec::with_capacity(sorted.len());
        for p in sorted {
            match out.last_mut() {
                Some(last) if touches(last.hi, p.lo) => {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                    }
                }
                _ => out.push(p),
            }
        }
        IntervalUnion { pieces: out }
    }

    pub fn pieces(&self) -> &[Interval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(Interval::len).fold(0.0, |a, b| a + b)
    }

    /// Number of connected components on the circle: a piece ending at 1 and
    /// one starting at 0 count once.
    pub fn circular_piece_count(&self) -> usize {
        let n = self.pieces.len();
        if n >= 2 && self.pieces[0].lo == 0.0 && self.pieces[n - 1].hi == 1.0 {
            n - 1
        } else {
            n
        }
    }

    pub fn contains_point(&self, p: f64) -> bool {
        let idx = self.pieces.partition_point(|q| q.lo <= p);
        idx > 0 && self.pieces[idx - 1].contains(p)
    }

    /// Closure of the complement. Degenerate pieces are ignored.
    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.pieces.len() + 1);
        let mut cursor = 0.0;
        let mut started = false;
        for p in self.pieces.iter().filter(|p| !p.is_degenerate()) {
            if !started {
                if p.lo > 0.0 {
                    out.push(Interval::raw(0.0, p.lo));
                }
                started = true;
            } else {
                out.push(Interval::raw(cursor, p.lo));
            }
            cursor = p.hi;
        }
        if !started {
            return Self::full();
        }
        if cursor < 1.0 {
            out.push(Interval::raw(cursor, 1.0));
        }
        IntervalUnion { pieces: out }
    }

    /// Set intersection. Two positive-length pieces that only touch contribute
    /// nothing; a degenerate piece survives if the other piece contains it.
    pub fn intersect(&self, other: &Self) -> Self {
        let (a, b) = (&self.pieces, &other.pieces);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let (p, q) = (a[i], b[j]);
            let lo = p.lo.max(q.lo);
            let hi = p.hi.min(q.hi);
            if hi > lo || (lo == hi && (p.is_degenerate() || q.is_degenerate())) {
                out.push(Interval::raw(lo, hi));
            }
            if p.hi < q.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::merge_sorted(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_intervals(self.pieces.iter().chain(&other.pieces).copied())
    }

    /// `target ⊆ self`, closed-endpoint convention.
    pub fn covers(&self, target: &Self) -> bool {
        target.pieces.iter().all(|t| {
            let idx = self.pieces.partition_point(|q| q.lo <= t.lo);
            idx > 0 && {
                let q = self.pieces[idx - 1];
                q.lo <= t.lo && t.hi <= q.hi
            }
        })
    }
}

/// Canonical union of a list of arcs.
pub fn arcs_to_union(arcs: &[Arc]) -> IntervalUnion {
    IntervalUnion::from_intervals(arcs.iter().flat_map(|a| a.pieces().into_iter().flatten()))
}
