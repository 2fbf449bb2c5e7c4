//! Exhaustive correctness sweep, without timing.
//!
//! Every distinct dataset key and every absent neighbour of one (plus the
//! ends of the key domain) is looked up. A lookup passes when the returned
//! bound admits the true lower bound and the last-mile search reproduces the
//! oracle's checksum and count.

use std::fmt;

use sortidx_core::{lower_bound, search_within, Key, LookupResult, ProbeCounter, SearchIndex, SortedDataset};

use crate::harness::{BuiltIndex, Variant};
use crate::workload::key_runs;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass { checked: u64 },
    Fail { checked: u64, failures: u64, first: String },
    BuildError(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyResult {
    pub technique: String,
    pub outcome: Outcome,
}

impl fmt::Display for VerifyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.outcome {
            Outcome::Pass { checked } => write!(f, "{}: pass ({checked} keys checked)", self.technique),
            Outcome::Fail { checked, failures, first } => {
                write!(f, "{}: FAIL ({failures} of {checked} keys wrong; first: {first})", self.technique)
            }
            Outcome::BuildError(e) => write!(f, "{}: build error: {e}", self.technique),
        }
    }
}

/// Keys probed by the sweep, each with its expected result, in ascending order.
pub fn sweep_keys(data: &SortedDataset) -> Vec<(Key, LookupResult)> {
    let runs = key_runs(data);
    let max = data.width().max_key();
    let mut out: Vec<(Key, LookupResult)> = Vec::with_capacity(runs.len() * 3 + 2);
    let push_absent = |out: &mut Vec<(Key, LookupResult)>, k: Key| {
        if out.last().is_none_or(|&(last, _)| last < k) {
            out.push((k, LookupResult::default()));
        }
    };
    for (i, run) in runs.iter().enumerate() {
        if i == 0 && run.key > 0 {
            push_absent(&mut out, 0);
        }
        if run.key > 0 && (i == 0 || runs[i - 1].key < run.key - 1) {
            push_absent(&mut out, run.key - 1);
        }
        out.push((run.key, run.result));
        let next_present = runs.get(i + 1).is_some_and(|next| next.key == run.key + 1);
        if run.key < max && !next_present {
            push_absent(&mut out, run.key + 1);
        }
    }
    if runs.last().is_none_or(|r| r.key < max) {
        push_absent(&mut out, max);
    }
    out
}

/// Checks one index against the sweep keys.
pub fn check_index(data: &SortedDataset, index: &dyn SearchIndex, keys: &[(Key, LookupResult)]) -> Outcome {
    let mut failures = 0u64;
    let mut first = None;
    let mut probes = ProbeCounter::new();
    for &(key, expected) in keys {
        let bound = index.lookup(data, key, &mut probes);
        let lb = lower_bound(data, key);
        let problem = if !bound.admits(lb) {
            Some(format!("key {key}: bound {bound} misses lower bound {lb}"))
        } else {
            match search_within(data, bound, key, &mut probes) {
                Ok(r) if r == expected => None,
                Ok(r) => Some(format!(
                    "key {key}: checksum {} / count {}, expected {} / {}",
                    r.checksum, r.count, expected.checksum, expected.count
                )),
                Err(v) => Some(v.to_string()),
            }
        };
        if let Some(p) = problem {
            failures += 1;
            first.get_or_insert(p);
        }
    }
    let checked = keys.len() as u64;
    match first {
        None => Outcome::Pass { checked },
        Some(first) => Outcome::Fail { checked, failures, first },
    }
}

pub fn verify(data: &SortedDataset, variants: &[Variant]) -> Vec<VerifyResult> {
    let keys = sweep_keys(data);
    variants
        .iter()
        .map(|v| {
            let outcome = match BuiltIndex::build(v.technique, data, &v.params) {
                Ok(index) => check_index(data, index.as_dyn(), &keys),
                Err(e) => Outcome::BuildError(e.to_string()),
            };
            VerifyResult { technique: v.label.clone(), outcome }
        })
        .collect()
}
