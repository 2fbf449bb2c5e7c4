use alloc::vec::Vec;
use core::fmt;

use crate::error::DatasetError;

/// Lookup key. 32-bit datasets keep their keys in the low half.
pub type Key = u64;

/// 64-bit tuple identifier attached to every key.
pub type Tid = u64;

/// Declared width of a dataset's keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyWidth {
    W32,
    W64,
}

impl KeyWidth {
    pub const fn bits(self) -> u32 {
        match self {
            KeyWidth::W32 => 32,
            KeyWidth::W64 => 64,
        }
    }

    pub const fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    pub const fn max_key(self) -> Key {
        match self {
            KeyWidth::W32 => u32::MAX as Key,
            KeyWidth::W64 => u64::MAX,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            32 => Some(KeyWidth::W32),
            64 => Some(KeyWidth::W64),
            _ => None,
        }
    }
}

impl fmt::Display for KeyWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

/// A key with its TID, stored interleaved (row format).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(C)]
pub struct Record {
    pub key: Key,
    pub tid: Tid,
}

impl Record {
    pub const fn new(key: Key, tid: Tid) -> Self {
        Record { key, tid }
    }
}

/// Records sorted by key (non-decreasing) together with their key width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedDataset {
    records: Vec<Record>,
    width: KeyWidth,
}

impl SortedDataset {
    /// Builds a dataset from sorted keys, assigning each record its position as TID.
    pub fn from_keys<I>(keys: I, width: KeyWidth) -> Result<Self, DatasetError>
    where
        I: IntoIterator<Item = Key>,
    {
        let records = keys.into_iter().enumerate().map(|(i, key)| Record::new(key, i as Tid)).collect();
        Self::from_records(records, width)
    }

    pub fn from_records(records: Vec<Record>, width: KeyWidth) -> Result<Self, DatasetError> {
        for (i, r) in records.iter().enumerate() {
            if r.key > width.max_key() {
                return Err(DatasetError::KeyOutOfRange { index: i, key: r.key, width });
            }
            if i > 0 && records[i - 1].key > r.key {
                return Err(DatasetError::Unsorted { index: i });
            }
        }
        Ok(SortedDataset { records, width })
    }

    #[inline]
    pub fn records(&self) -> &[Record] {
        &self.records
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.records.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn width(&self) -> KeyWidth {
        self.width
    }

    /// Key at position `i`.
    #[inline(always)]
    pub fn key(&self, i: usize) -> Key {
        self.records[i].key
    }

    pub fn min_key(&self) -> Option<Key> {
        self.records.first().map(|r| r.key)
    }

    pub fn max_key(&self) -> Option<Key> {
        self.records.last().map(|r| r.key)
    }

    pub fn keys(&self) -> impl ExactSizeIterator<Item = Key> + '_ {
        self.records.iter().map(|r| r.key)
    }

    /// Size of the record array with keys packed at their declared width.
    pub fn data_bytes(&self) -> usize {
        self.records.len() * (self.width.bytes() + core::mem::size_of::<Tid>())
    }

    /// Length of the longest run of equal keys.
    pub fn max_duplicates(&self) -> usize {
        let mut best = 0;
        let mut run = 0;
        for (i, r) in self.records.iter().enumerate() {
            run = if i > 0 && self.records[i - 1].key == r.key { run + 1 } else { 1 };
            best = best.max(run);
        }
        best
    }

    /// Overwrites one TID. Keys are untouched so sortedness is preserved.
    pub fn set_tid(&mut self, index: usize, tid: Tid) {
        self.records[index].tid = tid;
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }
}

/// Half-open position range `[lo, hi)` returned by an index.
///
/// Contract: for the key that produced it, `lo <= lower_bound(key) <= hi`.
/// Matches are materialized by scanning forward from the lower bound, so
/// duplicates may run past `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SearchBound {
    pub lo: usize,
    pub hi: usize,
}

impl SearchBound {
    #[inline(always)]
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(lo <= hi, "inverted bound [{lo}, {hi})");
        SearchBound { lo, hi }
    }

    pub fn full(n: usize) -> Self {
        SearchBound { lo: 0, hi: n }
    }

    /// `[pos, pos + 1)` clamped to `n`.
    #[inline(always)]
    pub fn exact(pos: usize, n: usize) -> Self {
        SearchBound { lo: pos, hi: if pos < n { pos + 1 } else { n } }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    /// Closed containment: whether `pos` could be the lower bound under this bound.
    #[inline]
    pub fn admits(&self, pos: usize) -> bool {
        self.lo <= pos && pos <= self.hi
    }
}

impl fmt::Display for SearchBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// Wrapping sum of the TIDs of all records matching a key, and their count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LookupResult {
    pub checksum: u64,
    pub count: u32,
}

/// Counts reads during lookups: keys read from the data array (probes) and
/// entries read from an index's own structures (auxiliary reads).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProbeCounter {
    data: u64,
    aux: u64,
}

impl ProbeCounter {
    pub const fn new() -> Self {
        ProbeCounter { data: 0, aux: 0 }
    }

    /// One key read from the data array.
    #[inline(always)]
    pub fn hit(&mut self) {
        self.data += 1;
    }

    #[inline(always)]
    pub fn add(&mut self, n: u64) {
        self.data += n;
    }

    /// One entry read from an auxiliary structure.
    #[inline(always)]
    pub fn aux_hit(&mut self) {
        self.aux += 1;
    }

    /// Data array probes.
    pub fn get(&self) -> u64 {
        self.data
    }

    pub fn aux(&self) -> u64 {
        self.aux
    }

    /// Probes plus auxiliary reads.
    pub fn total(&self) -> u64 {
        self.data + self.aux
    }

    pub fn reset(&mut self) {
        *self = ProbeCounter::new();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_wide_keys() {
        assert_eq!(SortedDataset::from_keys([2, 1], KeyWidth::W64), Err(DatasetError::Unsorted { index: 1 }));
        assert!(matches!(
            SortedDataset::from_keys([1, 1 << 32], KeyWidth::W32),
            Err(DatasetError::KeyOutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn summary_stats() {
        let d = SortedDataset::from_keys([1, 3, 3, 3, 5], KeyWidth::W32).unwrap();
        assert_eq!(d.min_key(), Some(1));
        assert_eq!(d.max_key(), Some(5));
        assert_eq!(d.max_duplicates(), 3);
        assert_eq!(d.data_bytes(), 5 * 12);
        assert_eq!(d.records()[4].tid, 4);
    }

    #[test]
    fn exact_bound_clamps_at_end() {
        assert_eq!(SearchBound::exact(3, 4), SearchBound::new(3, 4));
        assert_eq!(SearchBound::exact(4, 4), SearchBound::new(4, 4));
    }
}
