//! RadixSpline: an error-bounded linear spline over the CDF, with its knots
//! located through a radix table.
//!
//! The spline is fit bottom-up in one pass with a greedy error corridor. All
//! corridor tests and interpolations are exact integer arithmetic, so the
//! error bound holds without floating-point slack.

use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::error::{BuildError, DecodeError};
use crate::radix::{RadixTable, DEFAULT_RADIX_BITS, DEFAULT_TABLE_BUDGET};
use crate::search::SearchIndex;
use crate::types::{Key, ProbeCounter, SearchBound, SortedDataset};

pub const DEFAULT_EPSILON: usize = 32;

/// A spline knot: a key and its (lower-bound) position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplinePoint {
    pub key: Key,
    pub pos: u64,
}

impl SplinePoint {
    pub const fn new(key: Key, pos: u64) -> Self {
        SplinePoint { key, pos }
    }
}

/// CDF points used for fitting: one point per distinct key at its first
/// position, plus `(a + 1, lb(b))` for every gap between consecutive distinct
/// keys `a < b`. The extra point pins the flat step of the lower-bound
/// function, so absent keys inside a gap are covered too.
fn cdf_points(data: &SortedDataset) -> impl Iterator<Item = SplinePoint> + '_ {
    let records = data.records();
    records.iter().enumerate().flat_map(move |(i, r)| {
        let first = i == 0 || records[i - 1].key != r.key;
        let gap = first && i > 0 && records[i - 1].key + 1 < r.key;
        let gap_point = gap.then(|| SplinePoint::new(records[i - 1].key + 1, i as u64));
        let point = first.then(|| SplinePoint::new(r.key, i as u64));
        gap_point.into_iter().chain(point)
    })
}

/// `true` if the slope from `base` to `(ax, ay)` is below the slope to `(bx, by)`.
/// Both points lie strictly right of `base`.
#[inline]
fn slope_lt(base: SplinePoint, ax: Key, ay: i128, bx: Key, by: i128) -> bool {
    let dxa = (ax - base.key) as i128;
    let dxb = (bx - base.key) as i128;
    let dya = ay - base.pos as i128;
    let dyb = by - base.pos as i128;
    dya * dxb < dyb * dxa
}

/// One-pass greedy spline fit with maximum position error `epsilon`.
///
/// Maintains the corridor of slopes from the last knot that keeps every point
/// seen since within `epsilon`. When a point leaves the corridor the previous
/// point becomes a knot and the corridor restarts from it. Points on the
/// corridor boundary count as inside.
pub fn fit_spline(data: &SortedDataset, epsilon: usize) -> Vec<SplinePoint> {
    let mut cdf = cdf_points(data);
    let mut knots = Vec::new();
    let Some(first) = cdf.next() else {
        return knots;
    };
    knots.push(first);
    let eps = epsilon as i128;

    let mut base = first;
    let mut prev: Option<SplinePoint> = None;
    // corridor limits: upper (key, pos + eps), lower (key, pos - eps)
    let mut upper = (0, 0i128);
    let mut lower = (0, 0i128);

    for c in cdf {
        let y = c.pos as i128;
        match prev {
            None => {
                upper = (c.key, y + eps);
                lower = (c.key, y - eps);
            }
            Some(p) => {
                let above = slope_lt(base, upper.0, upper.1, c.key, y);
                let below = slope_lt(base, c.key, y, lower.0, lower.1);
                if above || below {
                    knots.push(p);
                    base = p;
                    upper = (c.key, y + eps);
                    lower = (c.key, y - eps);
                } else {
                    if slope_lt(base, c.key, y + eps, upper.0, upper.1) {
                        upper = (c.key, y + eps);
                    }
                    if slope_lt(base, lower.0, lower.1, c.key, y - eps) {
                        lower = (c.key, y - eps);
                    }
                }
            }
        }
        prev = Some(c);
    }
    if let Some(last) = prev {
        knots.push(last);
    }
    knots
}

/// Position predicted by the spline for `key`, which must lie within the knot range.
/// `upper` is the index of the first knot with `knot.key >= key`.
#[inline(always)]
fn interpolate_at(knots: &[SplinePoint], upper: usize, key: Key) -> u64 {
    if upper == 0 {
        return knots[0].pos;
    }
    let a = knots[upper - 1];
    let b = knots[upper];
    let (dx, dy, off) = (b.key - a.key, b.pos - a.pos, key - a.key);
    match off.checked_mul(dy) {
        Some(num) => a.pos + num / dx,
        None => a.pos + (off as u128 * dy as u128 / dx as u128) as u64,
    }
}

/// Spline prediction for `key` using a linear knot search. Keys outside the
/// knot range are clamped to the end knots.
pub fn interpolate(knots: &[SplinePoint], key: Key) -> u64 {
    let upper = knots.partition_point(|p| p.key < key);
    if upper == knots.len() {
        return knots.last().map_or(0, |p| p.pos);
    }
    interpolate_at(knots, upper, key)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplineConfig {
    pub epsilon: usize,
    pub radix_bits: u32,
    pub budget: usize,
}

impl Default for SplineConfig {
    fn default() -> Self {
        SplineConfig { epsilon: DEFAULT_EPSILON, radix_bits: DEFAULT_RADIX_BITS, budget: DEFAULT_TABLE_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadixSpline {
    epsilon: usize,
    n: usize,
    knots: Vec<SplinePoint>,
    radix: RadixTable,
}

impl RadixSpline {
    pub fn build(data: &SortedDataset, config: SplineConfig) -> Result<Self, BuildError> {
        if data.is_empty() {
            return Err(BuildError::EmptyDataset);
        }
        if config.epsilon == 0 {
            return Err(BuildError::InvalidParameter { name: "epsilon", value: 0, reason: "must be at least 1" });
        }
        let knots = fit_spline(data, config.epsilon);
        let (min, max) = (knots[0].key, knots[knots.len() - 1].key);
        let radix = RadixTable::over_range(
            knots.iter().map(|p| p.key),
            knots.len(),
            min,
            max,
            config.radix_bits,
            config.budget,
        )?;
        Ok(RadixSpline { epsilon: config.epsilon, n: data.len(), knots, radix })
    }

    pub fn epsilon(&self) -> usize {
        self.epsilon
    }

    pub fn knots(&self) -> &[SplinePoint] {
        &self.knots
    }

    pub fn radix(&self) -> &RadixTable {
        &self.radix
    }

    /// Predicted position of `key`, or `None` outside `[min_key, max_key]`.
    #[inline]
    pub fn predict(&self, key: Key, probes: &mut ProbeCounter) -> Option<u64> {
        let knots = &self.knots;
        if key < knots[0].key || key > knots[knots.len() - 1].key {
            return None;
        }
        probes.aux_hit();
        let (mut lo, hi) = self.radix.range(key);
        // first knot with key >= `key`, known to lie in [lo, hi]
        let mut len = hi - lo;
        while len > 0 {
            let half = len / 2;
            probes.aux_hit();
            if knots[lo + half].key < key {
                lo += half + 1;
                len -= half + 1;
            } else {
                len = half;
            }
        }
        Some(interpolate_at(knots, lo, key))
    }

    const MAGIC: &'static [u8; 4] = b"RSPL";
    const VERSION: u16 = 1;

    /// Serializes the index: magic, version, epsilon, n, knots, radix parameters and table.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(Self::MAGIC, Self::VERSION);
        w.u64(self.epsilon as u64);
        w.u64(self.n as u64);
        w.u64(self.knots.len() as u64);
        for p in &self.knots {
            w.u64(p.key);
            w.u64(p.pos);
        }
        w.u64(self.radix.base());
        w.u32(self.radix.shift());
        w.u32(self.radix.bits());
        w.u8(self.radix.entry_bytes() as u8);
        w.u64(self.radix.entries().len() as u64);
        for e in self.radix.entries() {
            match self.radix.entry_bytes() {
                4 => w.u32(e as u32),
                _ => w.u64(e as u64),
            }
        }
        w.0
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, DecodeError> {
        let (mut r, _) = Reader::open(buf, Self::MAGIC, Self::VERSION)?;
        let epsilon = r.u64()? as usize;
        let n = r.u64()? as usize;
        let count = r.count(16)?;
        let mut knots = Vec::with_capacity(count);
        for _ in 0..count {
            knots.push(SplinePoint::new(r.u64()?, r.u64()?));
        }
        if knots.is_empty() || knots.windows(2).any(|w| w[0].key >= w[1].key || w[0].pos > w[1].pos) {
            return Err(DecodeError::Corrupt("knots not strictly increasing"));
        }
        let (base, shift, bits) = (r.u64()?, r.u32()?, r.u32()?);
        let width = r.u8()? as usize;
        if width != 4 && width != 8 {
            return Err(DecodeError::Corrupt("radix entry width"));
        }
        let len = r.count(width)?;
        let mut entries = Vec::with_capacity(len);
        for _ in 0..len {
            entries.push(if width == 4 { r.u32()? as u64 } else { r.u64()? });
        }
        r.finish()?;
        let radix = RadixTable::from_parts(base, shift, bits, entries, knots.len())
            .ok_or(DecodeError::Corrupt("radix table"))?;
        Ok(RadixSpline { epsilon, n, knots, radix })
    }
}

impl SearchIndex for RadixSpline {
    fn name(&self) -> &'static str {
        "RS"
    }

    #[inline]
    fn lookup(&self, _data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
        let n = self.n;
        match self.predict(key, probes) {
            Some(p) => {
                let p = p as usize;
                SearchBound::new(p.saturating_sub(self.epsilon), (p + self.epsilon + 1).min(n))
            }
            None if key < self.knots[0].key => SearchBound::exact(0, n),
            None => SearchBound::exact(n, n),
        }
    }

    fn size_bytes(&self) -> usize {
        self.knots.len() * core::mem::size_of::<SplinePoint>() + self.radix.size_bytes()
    }
}
