//! Bulk-loaded, read-only B+-tree.
//!
//! Nodes are packed left to right and stored level by level in flat arrays;
//! the child of entry `j` on one level is node `j` on the level below, so no
//! child pointers are materialized. Inner entries hold the largest key of
//! their child. Leaf entries are `(key, position)` pairs for every
//! `stride`-th record; with `stride = 1` the tree indexes every record.

use alloc::vec::Vec;

use crate::error::BuildError;
use crate::search::SearchIndex;
use crate::types::{Key, ProbeCounter, SearchBound, SortedDataset};

pub const DEFAULT_FANOUT: usize = 256;
pub const DEFAULT_STRIDE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BTreeConfig {
    /// Node capacity in entries.
    pub fanout: usize,
    /// Fraction of each node filled by the bulk load, in `[0.5, 1]`.
    pub fill: f64,
    /// Index every `stride`-th record.
    pub stride: usize,
}

impl Default for BTreeConfig {
    fn default() -> Self {
        BTreeConfig { fanout: DEFAULT_FANOUT, fill: 1.0, stride: DEFAULT_STRIDE }
    }
}

impl BTreeConfig {
    pub fn dense(fanout: usize) -> Self {
        BTreeConfig { fanout, fill: 1.0, stride: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct BPlusTree {
    per_node: usize,
    leaf_keys: Vec<Key>,
    leaf_pos: Vec<u32>,
    /// Inner levels, bottom-up; the last one fits in a single node.
    inner: Vec<Vec<Key>>,
    n: usize,
}

/// First index in `keys[start..end]` holding a key `>= key` (or `end`).
#[inline(always)]
fn node_lower_bound(keys: &[Key], start: usize, end: usize, key: Key, probes: &mut ProbeCounter) -> usize {
    let mut pos = start;
    let mut len = end - start;
    while len > 0 {
        let half = len / 2;
        probes.aux_hit();
        if keys[pos + half] < key {
            pos += half + 1;
            len -= half + 1;
        } else {
            len = half;
        }
    }
    pos
}

impl BPlusTree {
    pub fn bulk_load(data: &SortedDataset, config: BTreeConfig) -> Result<Self, BuildError> {
        let n = data.len();
        if config.fanout < 4 {
            return Err(BuildError::InvalidParameter {
                name: "fanout",
                value: config.fanout as u64,
                reason: "must be at least 4",
            });
        }
        if !(0.5..=1.0).contains(&config.fill) {
            return Err(BuildError::InvalidParameter {
                name: "fill percent",
                value: (config.fill * 100.0) as u64,
                reason: "must be within 50..=100",
            });
        }
        if config.stride == 0 {
            return Err(BuildError::InvalidParameter { name: "stride", value: 0, reason: "must be positive" });
        }
        if n > u32::MAX as usize {
            return Err(BuildError::TooManyRecords { n, max: u32::MAX as usize });
        }
        let min_fill = config.fanout.div_ceil(2);
        let per_node = (libm::ceil(config.fanout as f64 * config.fill) as usize).clamp(min_fill, config.fanout);

        let (leaf_keys, leaf_pos): (Vec<Key>, Vec<u32>) =
            data.records().iter().enumerate().step_by(config.stride).map(|(i, r)| (r.key, i as u32)).unzip();

        let mut inner: Vec<Vec<Key>> = Vec::new();
        let mut below = &leaf_keys;
        while below.len() > per_node {
            let level: Vec<Key> = below.chunks(per_node).map(|node| node[node.len() - 1]).collect();
            inner.push(level);
            below = inner.last().unwrap();
        }
        Ok(BPlusTree { per_node, leaf_keys, leaf_pos, inner, n })
    }

    /// Levels including the leaves; an empty tree has height 1.
    pub fn height(&self) -> usize {
        self.inner.len() + 1
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_keys.len().div_ceil(self.per_node)
    }

    /// Node count per level, leaves first.
    pub fn nodes_per_level(&self) -> Vec<usize> {
        core::iter::once(self.leaf_count()).chain(self.inner.iter().map(|l| l.len().div_ceil(self.per_node))).collect()
    }

    /// Entry count of every node on every level, leaves first.
    pub fn node_fill(&self) -> Vec<Vec<usize>> {
        core::iter::once(&self.leaf_keys)
            .chain(self.inner.iter())
            .map(|level| level.chunks(self.per_node).map(<[Key]>::len).collect())
            .collect()
    }

    /// Leaf entries in order.
    pub fn leaf_entries(&self) -> impl Iterator<Item = (Key, usize)> + '_ {
        self.leaf_keys.iter().zip(&self.leaf_pos).map(|(&k, &p)| (k, p as usize))
    }

    fn tail(&self) -> SearchBound {
        let lo = self.leaf_pos.last().map_or(0, |&p| p as usize + 1);
        SearchBound::new(lo, self.n)
    }
}

impl SearchIndex for BPlusTree {
    fn name(&self) -> &'static str {
        "B-tree"
    }

    #[inline]
    fn lookup(&self, _data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
        let per_node = self.per_node;
        let mut node = 0;
        for level in self.inner.iter().rev() {
            let start = node * per_node;
            let end = (start + per_node).min(level.len());
            node = node_lower_bound(level, start, end, key, probes);
            if node == end {
                // only the root can miss: every other node is bounded by its separator
                return self.tail();
            }
        }
        let start = node * per_node;
        let end = (start + per_node).min(self.leaf_keys.len());
        let e = node_lower_bound(&self.leaf_keys, start, end, key, probes);
        if e == end {
            return self.tail();
        }
        let lo = if e == 0 { 0 } else { self.leaf_pos[e - 1] as usize + 1 };
        SearchBound::new(lo, self.leaf_pos[e] as usize + 1)
    }

    fn size_bytes(&self) -> usize {
        let inner: usize = self.inner.iter().map(Vec::len).sum();
        (self.leaf_keys.len() + inner) * core::mem::size_of::<Key>() + self.leaf_pos.len() * core::mem::size_of::<u32>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::lower_bound;
    use crate::types::KeyWidth;
    use alloc::vec;
    use proptest::prelude::*;

    fn ds(keys: impl IntoIterator<Item = Key>) -> SortedDataset {
        SortedDataset::from_keys(keys, KeyWidth::W64).unwrap()
    }

    #[test]
    fn shape_of_small_trees() {
        let t = BPlusTree::bulk_load(&ds(0..10), BTreeConfig::dense(4)).unwrap();
        assert_eq!(t.nodes_per_level(), [3, 1]);
        assert_eq!(t.height(), 2);

        let t = BPlusTree::bulk_load(&ds(0..64), BTreeConfig::dense(4)).unwrap();
        assert_eq!(t.height(), 3);
        assert!(t.node_fill().iter().flatten().all(|&c| c == 4));
    }

    #[test]
    fn leaf_scan_is_input_order() {
        let keys = [1, 1, 2, 9, 9, 9, 40, 41, 41, 100, 101];
        let t = BPlusTree::bulk_load(&ds(keys), BTreeConfig::dense(4)).unwrap();
        assert_eq!(t.leaf_entries().map(|e| e.0).collect::<Vec<_>>(), keys);
        assert_eq!(t.leaf_entries().map(|e| e.1).collect::<Vec<_>>(), (0..keys.len()).collect::<Vec<_>>());
    }

    #[test]
    fn exact_bounds_when_dense() {
        let d = ds([1, 3, 5, 7]);
        let t = BPlusTree::bulk_load(&d, BTreeConfig::dense(4)).unwrap();
        assert_eq!(t.lookup(&d, 5, &mut ProbeCounter::new()), SearchBound::new(2, 3));
        assert_eq!(t.lookup(&d, 8, &mut ProbeCounter::new()), SearchBound::new(4, 4));
    }

    #[test]
    fn partial_fill_keeps_half_full_nodes() {
        let d = ds(0..1000);
        let t = BPlusTree::bulk_load(&d, BTreeConfig { fanout: 16, fill: 0.5, stride: 1 }).unwrap();
        for level in t.node_fill() {
            let (last, rest) = level.split_last().unwrap();
            assert!(rest.iter().all(|&c| c == 8));
            assert!(*last >= 1 && *last <= 8);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let d = ds(0..10);
        for cfg in [
            BTreeConfig::dense(3),
            BTreeConfig { fill: 0.3, ..BTreeConfig::dense(8) },
            BTreeConfig { stride: 0, ..BTreeConfig::dense(8) },
        ] {
            assert!(BPlusTree::bulk_load(&d, cfg).is_err());
        }
    }

    #[test]
    fn empty_tree() {
        let d = ds(vec![]);
        let t = BPlusTree::bulk_load(&d, BTreeConfig::default()).unwrap();
        assert_eq!(t.lookup(&d, 5, &mut ProbeCounter::new()), SearchBound::new(0, 0));
    }

    proptest! {
        #[test]
        fn agrees_with_lower_bound(
            mut keys in proptest::collection::vec(0u64..300, 0..3000),
            fanout in 4usize..40,
            stride in 1usize..9,
        ) {
            keys.sort_unstable();
            let d = ds(keys);
            let t = BPlusTree::bulk_load(&d, BTreeConfig { fanout, fill: 1.0, stride }).unwrap();
            let half = fanout.div_ceil(2) as f64;
            let entries = d.len().div_ceil(stride).max(2) as f64;
            prop_assert!(t.height() as f64 <= (entries.ln() / half.ln()).ceil().max(1.0));
            for k in 0..=301u64 {
                let b = t.lookup(&d, k, &mut ProbeCounter::new());
                let lb = lower_bound(&d, k);
                prop_assert!(b.admits(lb), "key {} bound {} lb {}", k, b, lb);
                if stride == 1 {
                    prop_assert_eq!(b, SearchBound::exact(lb, d.len()));
                }
            }
        }
    }
}
