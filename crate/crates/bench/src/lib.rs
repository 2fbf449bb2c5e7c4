//! Dataset generation, the dataset file format, lookup workloads and the
//! benchmark harness for [`sortidx_core`].
//!
//! The `sortidx` binary wraps these modules in a small CLI with
//! `generate`, `bench` and `verify` subcommands.

pub mod counters;
pub mod datagen;
pub mod fileio;
pub mod harness;
pub mod render;
pub mod verify;
pub mod workload;

pub use datagen::{generate, DatasetSpec, Family, GenerateError};
pub use fileio::{read_file, write_file, FileError};
pub use harness::{BenchConfig, Report, Row, Technique, TechniqueParams, VerifyStatus};
pub use workload::{generate_workload, Query, Workload};
