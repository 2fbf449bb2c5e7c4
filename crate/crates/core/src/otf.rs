//! On-the-fly searchers: no build phase, they work directly on the sorted array.
//!
//! Interpolation search and TIP read the dataset's first and last keys for
//! free (they are part of the dataset summary); every other key read counts
//! as a probe.

use crate::search::SearchIndex;
use crate::types::{Key, ProbeCounter, SearchBound, SortedDataset};

/// Plain lower-bound bisection. Returns the exact `[lb, lb + 1)` bound.
#[inline]
pub fn binary_search(data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
    let records = data.records();
    let mut pos = 0;
    let mut len = records.len();
    while len > 0 {
        let half = len / 2;
        probes.hit();
        if records[pos + half].key < key {
            pos += half + 1;
            len -= half + 1;
        } else {
            len = half;
        }
    }
    SearchBound::exact(pos, records.len())
}

/// Bracket state shared by the interpolating searchers.
///
/// Invariant: `keys[l] < key <= keys[r]`, so the lower bound lies in `(l, r]`.
struct Bracket {
    l: usize,
    kl: Key,
    r: usize,
    kr: Key,
}

impl Bracket {
    /// Settles the trivial cases; `Err` carries the final bound.
    #[inline(always)]
    fn open(data: &SortedDataset, key: Key) -> Result<Bracket, SearchBound> {
        let n = data.len();
        if n == 0 {
            return Err(SearchBound::new(0, 0));
        }
        let (kl, kr) = (data.key(0), data.key(n - 1));
        if key <= kl {
            return Err(SearchBound::exact(0, n));
        }
        if key > kr {
            return Err(SearchBound::exact(n, n));
        }
        Ok(Bracket { l: 0, kl, r: n - 1, kr })
    }

    #[inline(always)]
    fn settled(&self) -> bool {
        self.r - self.l <= 1
    }

    /// Clamps a predicted position strictly inside the bracket so each probe shrinks it.
    #[inline(always)]
    fn interior(&self, predicted: usize) -> usize {
        predicted.clamp(self.l + 1, self.r - 1)
    }

    /// Linear interpolation between the bracket ends.
    #[inline(always)]
    fn linear(&self, key: Key) -> usize {
        let span = (self.r - self.l) as f64;
        let offset = (key - self.kl) as f64 * span / (self.kr - self.kl) as f64;
        self.l + offset as usize
    }

    /// Probes `pos` and narrows. Returns the replaced endpoint.
    #[inline(always)]
    fn probe(&mut self, data: &SortedDataset, key: Key, pos: usize, probes: &mut ProbeCounter) -> (usize, Key) {
        probes.hit();
        let v = data.key(pos);
        if v < key {
            let old = (self.l, self.kl);
            self.l = pos;
            self.kl = v;
            old
        } else {
            let old = (self.r, self.kr);
            self.r = pos;
            self.kr = v;
            old
        }
    }
}

/// Textbook interpolation search narrowed to the exact lower bound.
///
/// Each round predicts
/// `pos = l + (key - keys[l]) * (r - l) / (keys[r] - keys[l])`
/// and forces the probe strictly inside the bracket, so the bracket shrinks
/// by at least one slot per round. On skewed data this degrades towards a
/// linear scan but always terminates.
#[inline]
pub fn interpolation_search(data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
    let mut b = match Bracket::open(data, key) {
        Ok(b) => b,
        Err(bound) => return bound,
    };
    while !b.settled() {
        let pos = b.interior(b.linear(key));
        b.probe(data, key, pos, probes);
    }
    SearchBound::exact(b.r, data.len())
}

/// Relative threshold below which a three-point fit is treated as a line.
pub const TIP_DEGENERACY: f64 = 1.0 / (1u64 << 40) as f64;

/// Evaluates the curve `y = a + b / (x - c)` through three points at `x`.
///
/// Points are `(key, position)` with strictly increasing keys. Returns `None`
/// when the points are (numerically) collinear or the pole `c` falls inside
/// the span of the points; callers then fall back to linear interpolation.
pub fn hyperbolic_interpolate(points: [(Key, f64); 3], x: Key) -> Option<f64> {
    let [(k0, y0), (k1, y1), (k2, y2)] = points;
    if !(k0 < k1 && k1 < k2) {
        return None;
    }
    // shift so the middle point sits at the origin
    let x0 = -((k1 - k0) as f64);
    let x2 = (k2 - k1) as f64;
    let xq = if x >= k1 { (x - k1) as f64 } else { -((k1 - x) as f64) };

    let d = (y0 - y1) * x2 + (y1 - y2) * x0;
    let scale = (x2 - x0) * (y2 - y0).abs();
    if d.abs() <= TIP_DEGENERACY * scale {
        return None;
    }
    let c = x0 * x2 * (y0 - y2) / d;
    if c >= x0 && c <= x2 {
        return None;
    }
    let y = y1 + (y0 - y1) * (x0 - c) * xq / (x0 * (xq - c));
    y.is_finite().then_some(y)
}

/// Three-point interpolation search.
///
/// The first round bisects to obtain an interior reference point; after that
/// each round fits a linear-fractional curve through the bracket ends and the
/// most recently replaced endpoint, evaluates it at the key, and probes the
/// prediction. Collinear or ill-conditioned fits fall back to two-point
/// interpolation. Narrowing stops at the exact lower bound.
#[inline]
pub fn tip_search(data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
    let mut b = match Bracket::open(data, key) {
        Ok(b) => b,
        Err(bound) => return bound,
    };
    if b.settled() {
        return SearchBound::exact(b.r, data.len());
    }
    let mid = b.l + (b.r - b.l) / 2;
    let mut prev = b.probe(data, key, mid, probes);
    while !b.settled() {
        let ends = ((b.l, b.kl), (b.r, b.kr));
        let triple = if prev.0 < b.l { [prev, ends.0, ends.1] } else { [ends.0, ends.1, prev] };
        let predicted = hyperbolic_interpolate(triple.map(|(pos, k)| (k, pos as f64)), key)
            .map(|y| if y <= 0.0 { 0 } else { y as usize })
            .unwrap_or_else(|| b.linear(key));
        let pos = b.interior(predicted);
        prev = b.probe(data, key, pos, probes);
    }
    SearchBound::exact(b.r, data.len())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BinarySearch;

#[derive(Debug, Clone, Copy, Default)]
pub struct InterpolationSearch;

#[derive(Debug, Clone, Copy, Default)]
pub struct Tip;

impl SearchIndex for BinarySearch {
    fn name(&self) -> &'static str {
        "BS"
    }

    #[inline]
    fn lookup(&self, data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
        binary_search(data, key, probes)
    }

    fn size_bytes(&self) -> usize {
        0
    }
}

impl SearchIndex for InterpolationSearch {
    fn name(&self) -> &'static str {
        "IS"
    }

    #[inline]
    fn lookup(&self, data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
        interpolation_search(data, key, probes)
    }

    fn size_bytes(&self) -> usize {
        0
    }
}

impl SearchIndex for Tip {
    fn name(&self) -> &'static str {
        "TIP"
    }

    #[inline]
    fn lookup(&self, data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
        tip_search(data, key, probes)
    }

    fn size_bytes(&self) -> usize {
        0
    }
}
