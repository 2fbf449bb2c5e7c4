//! Lookup workloads with expected results.
//!
//! Expected results come from one linear pass over the dataset that groups
//! equal keys into runs, which doubles as the reference oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sortidx_core::{Key, LookupResult, SortedDataset, MAX_DUPLICATES};

/// One distinct key of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyRun {
    pub key: Key,
    pub start: usize,
    pub result: LookupResult,
}

/// Groups the dataset into runs of equal keys, summing TIDs with wrapping
/// addition.
pub fn key_runs(data: &SortedDataset) -> Vec<KeyRun> {
    let mut runs: Vec<KeyRun> = Vec::new();
    for (i, r) in data.records().iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.key == r.key => {
                run.result.checksum = run.result.checksum.wrapping_add(r.tid);
                run.result.count += 1;
            }
            _ => runs.push(KeyRun { key: r.key, start: i, result: LookupResult { checksum: r.tid, count: 1 } }),
        }
    }
    runs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Query {
    pub key: Key,
    pub expected: LookupResult,
    /// Position of the first record holding `key`.
    pub lower_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub seed: u64,
    pub queries: Vec<Query>,
}

impl Workload {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Little-endian image of every query: key, checksum, count, lower bound.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.queries.len() * 28);
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.queries.len() as u64).to_le_bytes());
        for q in &self.queries {
            out.extend_from_slice(&q.key.to_le_bytes());
            out.extend_from_slice(&q.expected.checksum.to_le_bytes());
            out.extend_from_slice(&q.expected.count.to_le_bytes());
            out.extend_from_slice(&(q.lower_bound as u64).to_le_bytes());
        }
        out
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WorkloadError {
    #[error("cannot draw lookups from an empty dataset")]
    EmptyDataset,
    #[error("no key has at most {MAX_DUPLICATES} matches")]
    NoEligibleKeys,
}

/// Draws `m` lookup keys uniformly, with replacement, from the distinct keys
/// holding at most [`MAX_DUPLICATES`] records.
pub fn generate_workload(data: &SortedDataset, m: usize, seed: u64) -> Result<Workload, WorkloadError> {
    if data.is_empty() {
        return Err(WorkloadError::EmptyDataset);
    }
    let runs: Vec<KeyRun> = key_runs(data).into_iter().filter(|r| r.result.count as usize <= MAX_DUPLICATES).collect();
    if runs.is_empty() {
        return Err(WorkloadError::NoEligibleKeys);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let queries = (0..m)
        .map(|_| {
            let run = runs[rng.random_range(0..runs.len())];
            Query { key: run.key, expected: run.result, lower_bound: run.start }
        })
        .collect();
    Ok(Workload { seed, queries })
}
