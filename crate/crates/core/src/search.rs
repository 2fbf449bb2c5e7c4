use core::fmt;

use crate::types::{Key, LookupResult, ProbeCounter, Record, SearchBound, SortedDataset};

/// Smallest position whose key is `>= key`, or `n` if every key is smaller.
pub fn lower_bound(data: &SortedDataset, key: Key) -> usize {
    data.records().partition_point(|r| r.key < key)
}

/// The uniform contract every technique implements.
///
/// Structures are built once over a dataset and must be handed that same
/// dataset on every lookup.
pub trait SearchIndex {
    fn name(&self) -> &'static str;

    /// Narrows `key` to a bound that admits its lower bound.
    fn lookup(&self, data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound;

    /// Bytes held beyond the shared record array.
    fn size_bytes(&self) -> usize;

    /// `lookup` followed by the shared last-mile search.
    fn find(
        &self,
        data: &SortedDataset,
        key: Key,
        probes: &mut ProbeCounter,
    ) -> Result<LookupResult, ContractViolation> {
        let bound = self.lookup(data, key, probes);
        search_within(data, bound, key, probes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `hi` exceeds the dataset or `lo > hi`.
    OutOfRange,
    /// Keys `>= key` exist left of `lo`.
    BelowBound,
    /// Every key up to and including `hi` is smaller than `key`.
    AboveBound,
}

/// A bound that does not admit the key's lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContractViolation {
    pub key: Key,
    pub bound: SearchBound,
    pub kind: ViolationKind,
}

impl fmt::Display for ContractViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::OutOfRange => "lies outside the dataset",
            ViolationKind::BelowBound => "starts after the lower bound",
            ViolationKind::AboveBound => "ends before the lower bound",
        };
        write!(f, "bound {} for key {} {}", self.bound, self.key, what)
    }
}

impl core::error::Error for ContractViolation {}

#[inline(always)]
fn prefetch(records: &[Record], i: usize) {
    debug_assert!(i < records.len());
    #[cfg(any(target_arch = "x86", target_arch = "x86_64"))]
    {
        #[cfg(target_arch = "x86")]
        use core::arch::x86::{_mm_prefetch, _MM_HINT_T0};
        #[cfg(target_arch = "x86_64")]
        use core::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
        // SAFETY: prefetching has no architectural effect and `i` is in bounds
        unsafe { _mm_prefetch(records.as_ptr().add(i).cast::<i8>(), _MM_HINT_T0) }
    }
    #[cfg(not(any(target_arch = "x86", target_arch = "x86_64")))]
    let _ = (records, i);
}

/// Last-mile search shared by all techniques.
///
/// Binary-searches `bound` for the lower bound of `key`, then scans forward
/// over equal keys accumulating the wrapping TID sum. Edges of the bound that
/// are not dataset edges are checked against their neighbours, so a bound
/// that misses the lower bound is reported rather than silently giving a
/// wrong answer.
#[inline]
pub fn search_within(
    data: &SortedDataset,
    bound: SearchBound,
    key: Key,
    probes: &mut ProbeCounter,
) -> Result<LookupResult, ContractViolation> {
    let records = data.records();
    let n = records.len();
    let violation = |kind| ContractViolation { key, bound, kind };
    if bound.lo > bound.hi || bound.hi > n {
        return Err(violation(ViolationKind::OutOfRange));
    }

    // branchless lower bound over [lo, hi); `seen` marks a slot already read
    // and known to hold a key >= `key`, so the scan does not count it again
    let mut pos = bound.lo;
    let mut seen = false;
    let mut len = bound.hi - bound.lo;
    if len > 0 {
        while len > 1 {
            let half = len / 2;
            let next = (len - half) / 2;
            if next > 0 {
                // both candidates for the following probe
                prefetch(records, pos + next - 1);
                prefetch(records, pos + half + next - 1);
            }
            probes.hit();
            pos = if records[pos + half - 1].key < key { pos + half } else { pos };
            len -= half;
        }
        probes.hit();
        let below = records[pos].key < key;
        seen = !below;
        pos += below as usize;
    }

    if pos == bound.lo && pos > 0 && records[pos - 1].key >= key {
        return Err(violation(ViolationKind::BelowBound));
    }

    let mut result = LookupResult::default();
    let mut i = pos;
    let mut reads = 0;
    while i < n {
        reads += 1;
        let r = records[i];
        if r.key != key {
            if r.key < key {
                // only reachable when pos == hi
                probes.add(reads);
                return Err(violation(ViolationKind::AboveBound));
            }
            break;
        }
        result.checksum = result.checksum.wrapping_add(r.tid);
        result.count += 1;
        i += 1;
    }
    probes.add(reads - (reads > 0 && seen) as u64);
    Ok(result)
}
