//! Search structures over sorted integer arrays.
//!
//! Every technique in this crate narrows a lookup key down to a
//! [`SearchBound`] over a [`SortedDataset`]; a single shared routine,
//! [`search_within`], then finds the lower bound inside that range and
//! materializes the matches as a TID checksum. Timing differences between
//! techniques therefore come from how well they narrow, not from how they
//! materialize results.
//!
//! | technique | type | build |
//! |-----------|------|-------|
//! | binary search | [`otf::BinarySearch`] | none |
//! | interpolation search | [`otf::InterpolationSearch`] | none |
//! | three-point interpolation | [`otf::Tip`] | none |
//! | radix binary search | [`radix::RadixBinarySearch`] | one scan |
//! | radix spline | [`spline::RadixSpline`] | greedy spline fit |
//! | recursive model index | [`rmi::Rmi`] | top-down model training |
//! | B+-tree | [`btree::BPlusTree`] | bulk load |
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod btree;
mod codec;
pub mod error;
pub mod otf;
pub mod radix;
pub mod rmi;
pub mod search;
pub mod spline;
pub mod types;

pub use error::{BuildError, DatasetError, DecodeError};
pub use search::{lower_bound, search_within, ContractViolation, SearchIndex};
pub use types::{Key, KeyWidth, LookupResult, ProbeCounter, Record, SearchBound, SortedDataset, Tid};

/// Maximum number of records sharing one key in a benchmark dataset.
pub const MAX_DUPLICATES: usize = 100;
