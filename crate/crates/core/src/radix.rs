//! Flat radix tables over fixed-length key prefixes, and RadixBinarySearch.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::BuildError;
use crate::search::SearchIndex;
use crate::types::{Key, ProbeCounter, SearchBound, SortedDataset};

pub const DEFAULT_RADIX_BITS: u32 = 18;
/// Default cap on the table size (1 GiB).
pub const DEFAULT_TABLE_BUDGET: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Positions {
    Narrow(Vec<u32>),
    Wide(Vec<u64>),
}

impl Positions {
    fn filled(len: usize, items: usize) -> Self {
        if items <= u32::MAX as usize {
            Positions::Narrow(vec![0; len])
        } else {
            Positions::Wide(vec![0; len])
        }
    }

    #[inline(always)]
    fn get(&self, i: usize) -> usize {
        match self {
            Positions::Narrow(v) => v[i] as usize,
            Positions::Wide(v) => v[i] as usize,
        }
    }

    fn set(&mut self, i: usize, pos: usize) {
        match self {
            Positions::Narrow(v) => v[i] = pos as u32,
            Positions::Wide(v) => v[i] = pos as u64,
        }
    }

    fn len(&self) -> usize {
        match self {
            Positions::Narrow(v) => v.len(),
            Positions::Wide(v) => v.len(),
        }
    }

    fn entry_bytes(&self) -> usize {
        match self {
            Positions::Narrow(_) => 4,
            Positions::Wide(_) => 8,
        }
    }
}

/// Maps each `bits`-bit prefix of `key - base` to the first position whose
/// prefix is at least that value.
///
/// `table` has `2^bits + 1` entries, `table[0] = 0` and `table[2^bits] = n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadixTable {
    base: Key,
    shift: u32,
    bits: u32,
    table: Positions,
}

/// Number of significant bits in `max - min`.
pub fn effective_bits(min: Key, max: Key) -> u32 {
    Key::BITS - (max - min).leading_zeros()
}

impl RadixTable {
    /// Builds a table with explicit prefix parameters over sorted `keys`.
    ///
    /// Every `key - base` must fit in `shift + bits` bits.
    pub fn with_params<I>(
        keys: I,
        n: usize,
        base: Key,
        shift: u32,
        bits: u32,
        budget: usize,
    ) -> Result<Self, BuildError>
    where
        I: IntoIterator<Item = Key>,
    {
        if bits == 0 || bits > 48 {
            return Err(BuildError::InvalidParameter {
                name: "radix bits",
                value: bits as u64,
                reason: "must be in 1..=48",
            });
        }
        let slots = 1usize << bits;
        let mut table = Positions::filled(slots + 1, n);
        let bytes = table.len() * table.entry_bytes();
        if bytes > budget {
            return Err(BuildError::OverBudget { bytes, budget });
        }
        let mut rt = RadixTable { base, shift, bits, table: Positions::Narrow(Vec::new()) };

        // table[p] for p in (filled, prefix] is the first position with prefix >= p
        let mut filled = 0usize;
        let mut count = 0usize;
        for (i, key) in keys.into_iter().enumerate() {
            let p = rt.raw_prefix(key);
            debug_assert!(p < slots, "key {key} overflows the prefix range");
            while filled < p {
                filled += 1;
                table.set(filled, i);
            }
            count = i + 1;
        }
        debug_assert_eq!(count, n);
        for p in filled + 1..=slots {
            table.set(p, count);
        }
        rt.table = table;
        Ok(rt)
    }

    /// Table over sorted `keys` with `base = keys[0]` and the shift derived
    /// from the bit width of `max - min`. `bits` is reduced when the key range
    /// has fewer significant bits.
    pub fn over_keys(keys: &[Key], bits: u32, budget: usize) -> Result<Self, BuildError> {
        let (min, max) = match (keys.first(), keys.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(BuildError::EmptyDataset),
        };
        Self::over_range(keys.iter().copied(), keys.len(), min, max, bits, budget)
    }

    pub(crate) fn over_range<I>(
        keys: I,
        n: usize,
        min: Key,
        max: Key,
        bits: u32,
        budget: usize,
    ) -> Result<Self, BuildError>
    where
        I: IntoIterator<Item = Key>,
    {
        if bits == 0 {
            return Err(BuildError::InvalidParameter { name: "radix bits", value: 0, reason: "must be positive" });
        }
        let span = effective_bits(min, max);
        let bits = bits.min(span).max(1);
        let shift = span.saturating_sub(bits);
        Self::with_params(keys, n, min, shift, bits, budget)
    }

    #[inline(always)]
    fn raw_prefix(&self, key: Key) -> usize {
        key.saturating_sub(self.base).checked_shr(self.shift).unwrap_or(0) as usize
    }

    /// Prefix of `key`, clamped into the table.
    #[inline(always)]
    pub fn prefix(&self, key: Key) -> usize {
        self.raw_prefix(key).min((1usize << self.bits) - 1)
    }

    /// `[table[p], table[p + 1]]` for the prefix `p` of `key`.
    #[inline(always)]
    pub fn range(&self, key: Key) -> (usize, usize) {
        let p = self.prefix(key);
        (self.table.get(p), self.table.get(p + 1))
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn shift(&self) -> u32 {
        self.shift
    }

    pub fn base(&self) -> Key {
        self.base
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        (0..self.table.len()).map(|i| self.table.get(i))
    }

    pub fn entry_bytes(&self) -> usize {
        self.table.entry_bytes()
    }

    pub fn size_bytes(&self) -> usize {
        self.table.len() * self.table.entry_bytes()
    }

    /// Rebuilds a table from raw parts, checking its structural invariants.
    pub(crate) fn from_parts(base: Key, shift: u32, bits: u32, entries: Vec<u64>, n: usize) -> Option<Self> {
        if bits == 0 || bits > 48 || shift > 64 || entries.len() != (1usize << bits) + 1 {
            return None;
        }
        if entries[0] != 0 || *entries.last()? != n as u64 || entries.windows(2).any(|w| w[0] > w[1]) {
            return None;
        }
        let table = if n <= u32::MAX as usize {
            Positions::Narrow(entries.into_iter().map(|e| e as u32).collect())
        } else {
            Positions::Wide(entries)
        };
        Some(RadixTable { base, shift, bits, table })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadixConfig {
    pub bits: u32,
    pub budget: usize,
}

impl Default for RadixConfig {
    fn default() -> Self {
        RadixConfig { bits: DEFAULT_RADIX_BITS, budget: DEFAULT_TABLE_BUDGET }
    }
}

/// Radix table over the data array; lookups return the prefix bucket and
/// leave the binary search to the last mile.
#[derive(Debug, Clone)]
pub struct RadixBinarySearch {
    table: RadixTable,
}

impl RadixBinarySearch {
    pub fn build(data: &SortedDataset, config: RadixConfig) -> Result<Self, BuildError> {
        let (min, max) = match (data.min_key(), data.max_key()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(BuildError::EmptyDataset),
        };
        let table = RadixTable::over_range(data.keys(), data.len(), min, max, config.bits, config.budget)?;
        Ok(RadixBinarySearch { table })
    }

    pub fn table(&self) -> &RadixTable {
        &self.table
    }
}

impl SearchIndex for RadixBinarySearch {
    fn name(&self) -> &'static str {
        "RBS"
    }

    #[inline]
    fn lookup(&self, _data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
        probes.aux_hit();
        let (lo, hi) = self.table.range(key);
        SearchBound::new(lo, hi)
    }

    fn size_bytes(&self) -> usize {
        self.table.size_bytes()
    }
}
