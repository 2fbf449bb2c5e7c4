use thiserror::Error;

use crate::types::{Key, KeyWidth};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("unsorted at index {index}")]
    Unsorted { index: usize },
    #[error("key {key} at index {index} does not fit in {width} bits")]
    KeyOutOfRange { index: usize, key: Key, width: KeyWidth },
}

/// Reasons an index refuses to build.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: u64, reason: &'static str },
    #[error("structure needs {bytes} bytes, over the budget of {budget}")]
    OverBudget { bytes: usize, budget: usize },
    #[error("{n} records exceed the supported maximum of {max}")]
    TooManyRecords { n: usize, max: usize },
}

/// Errors decoding a serialized index blob.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated at offset {offset}")]
    Truncated { offset: usize },
    #[error("corrupt blob: {0}")]
    Corrupt(&'static str),
}
