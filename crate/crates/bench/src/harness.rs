//! Build and lookup timing.
//!
//! Every technique is timed by the same loop: narrow the key with the index,
//! run the shared last-mile search, compare the result with the workload's
//! expected value. The loop is monomorphized per index type so dispatch
//! costs nothing inside the timed region. Time per lookup is the wall time
//! of the whole loop divided by the lookup count; each repetition runs the
//! full workload and the fastest repetition is reported.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sortidx_core::btree::{BPlusTree, BTreeConfig, DEFAULT_FANOUT, DEFAULT_STRIDE};
use sortidx_core::otf::{BinarySearch, InterpolationSearch, Tip};
use sortidx_core::radix::{RadixBinarySearch, RadixConfig, DEFAULT_RADIX_BITS, DEFAULT_TABLE_BUDGET};
use sortidx_core::rmi::{ModelKind, Rmi, RmiConfig};
use sortidx_core::spline::{RadixSpline, SplineConfig, DEFAULT_EPSILON};
use sortidx_core::{
    search_within, BuildError, ContractViolation, Key, LookupResult, ProbeCounter, SearchBound, SearchIndex,
    SortedDataset, MAX_DUPLICATES,
};

use crate::counters::{CounterHook, NoCounters};
use crate::workload::{generate_workload, Query, Workload, WorkloadError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    Bs,
    Is,
    Tip,
    Rbs,
    Rs,
    Rmi,
    BTree,
}

impl Technique {
    pub const ALL: [Technique; 7] =
        [Technique::Bs, Technique::Is, Technique::Tip, Technique::Rbs, Technique::Rs, Technique::Rmi, Technique::BTree];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Bs => "BS",
            Technique::Is => "IS",
            Technique::Tip => "TIP",
            Technique::Rbs => "RBS",
            Technique::Rs => "RS",
            Technique::Rmi => "RMI",
            Technique::BTree => "B-tree",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Technique::ALL
            .into_iter()
            .find(|t| t.name().to_ascii_lowercase().replace('-', "") == norm)
            .ok_or_else(|| ConfigError::UnknownTechnique(s.trim().to_owned()))
    }
}

/// Parses a comma-separated technique list; `all` expands to every technique.
pub fn parse_techniques(list: &str) -> Result<Vec<Technique>, ConfigError> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(Technique::ALL);
        } else {
            out.push(item.parse()?);
        }
    }
    if out.is_empty() {
        return Err(ConfigError::NoTechniques);
    }
    Ok(out)
}

/// Accepts `linear`, `spline` (or `linear-spline`) and `log` (or `log-linear`).
pub fn parse_model_kind(s: &str) -> Result<ModelKind, ConfigError> {
    match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "linear" => Ok(ModelKind::Linear),
        "spline" | "linearspline" => Ok(ModelKind::LinearSpline),
        "log" | "loglinear" => Ok(ModelKind::LogLinear),
        _ => Err(ConfigError::UnknownModel(s.to_owned())),
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown technique '{0}' (expected BS, IS, TIP, RBS, RS, RMI or B-tree)")]
    UnknownTechnique(String),
    #[error("unknown model kind '{0}' (expected linear, spline or log)")]
    UnknownModel(String),
    #[error("at least one technique is required")]
    NoTechniques,
    #[error("at least one lookup is required")]
    NoLookups,
    #[error("at least one repetition is required")]
    NoReps,
    #[error("dataset has a key with {found} records, above the cap of {MAX_DUPLICATES}")]
    DuplicateCap { found: usize },
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechniqueParams {
    /// Radix bits for RBS and the RS radix table.
    pub radix_bits: u32,
    pub epsilon: usize,
    /// RMI leaf count; `None` picks the size-based default.
    pub branching: Option<usize>,
    pub rmi_root: ModelKind,
    pub rmi_leaf: ModelKind,
    pub fanout: usize,
    pub btree_fill: f64,
    pub btree_stride: usize,
    /// Upper bound on any single auxiliary table, in bytes.
    pub budget: usize,
}

impl Default for TechniqueParams {
    fn default() -> Self {
        TechniqueParams {
            radix_bits: DEFAULT_RADIX_BITS,
            epsilon: DEFAULT_EPSILON,
            branching: None,
            rmi_root: ModelKind::Linear,
            rmi_leaf: ModelKind::Linear,
            fanout: DEFAULT_FANOUT,
            btree_fill: 1.0,
            btree_stride: DEFAULT_STRIDE,
            budget: DEFAULT_TABLE_BUDGET,
        }
    }
}

/// A built index of any technique.
#[derive(Debug, Clone)]
pub enum BuiltIndex {
    Bs(BinarySearch),
    Is(InterpolationSearch),
    Tip(Tip),
    Rbs(RadixBinarySearch),
    Rs(RadixSpline),
    Rmi(Rmi),
    BTree(BPlusTree),
}

/// Operation generic over the concrete index type.
pub trait IndexVisitor {
    type Output;
    fn visit<I: SearchIndex>(self, index: &I) -> Self::Output;
}

impl BuiltIndex {
    pub fn build(technique: Technique, data: &SortedDataset, p: &TechniqueParams) -> Result<Self, BuildError> {
        Ok(match technique {
            Technique::Bs => BuiltIndex::Bs(BinarySearch),
            Technique::Is => BuiltIndex::Is(InterpolationSearch),
            Technique::Tip => BuiltIndex::Tip(Tip),
            Technique::Rbs => {
                BuiltIndex::Rbs(RadixBinarySearch::build(data, RadixConfig { bits: p.radix_bits, budget: p.budget })?)
            }
            Technique::Rs => BuiltIndex::Rs(RadixSpline::build(
                data,
                SplineConfig { epsilon: p.epsilon, radix_bits: p.radix_bits, budget: p.budget },
            )?),
            Technique::Rmi => BuiltIndex::Rmi(Rmi::train(
                data,
                RmiConfig { root: p.rmi_root, leaf: p.rmi_leaf, branching: p.branching, budget: p.budget },
            )?),
            Technique::BTree => BuiltIndex::BTree(BPlusTree::bulk_load(
                data,
                BTreeConfig { fanout: p.fanout, fill: p.btree_fill, stride: p.btree_stride },
            )?),
        })
    }

    pub fn visit<V: IndexVisitor>(&self, v: V) -> V::Output {
        match self {
            BuiltIndex::Bs(i) => v.visit(i),
            BuiltIndex::Is(i) => v.visit(i),
            BuiltIndex::Tip(i) => v.visit(i),
            BuiltIndex::Rbs(i) => v.visit(i),
            BuiltIndex::Rs(i) => v.visit(i),
            BuiltIndex::Rmi(i) => v.visit(i),
            BuiltIndex::BTree(i) => v.visit(i),
        }
    }

    pub fn as_dyn(&self) -> &dyn SearchIndex {
        match self {
            BuiltIndex::Bs(i) => i,
            BuiltIndex::Is(i) => i,
            BuiltIndex::Tip(i) => i,
            BuiltIndex::Rbs(i) => i,
            BuiltIndex::Rs(i) => i,
            BuiltIndex::Rmi(i) => i,
            BuiltIndex::BTree(i) => i,
        }
    }
}

/// One technique with its parameters and the label it is reported under.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub technique: Technique,
    pub params: TechniqueParams,
}

impl Variant {
    pub fn new(technique: Technique, params: TechniqueParams) -> Self {
        Variant { label: technique.name().to_owned(), technique, params }
    }
}

/// Expands techniques into variants, one per value of each swept parameter
/// (`radix_bits` for RBS, `epsilon` for RS, `branching` for RMI). A parameter
/// with several values is appended to the label, e.g. `RS(eps=8)`. Empty
/// lists keep the base value.
pub fn sweep(
    techniques: &[Technique],
    base: TechniqueParams,
    radix_bits: &[u32],
    epsilons: &[usize],
    branchings: &[usize],
) -> Vec<Variant> {
    let mut out = Vec::new();
    for &t in techniques {
        let labelled = |params: TechniqueParams, suffix: Option<String>| Variant {
            label: suffix.map_or_else(|| t.name().to_owned(), |s| format!("{}({s})", t.name())),
            technique: t,
            params,
        };
        match t {
            Technique::Rbs if radix_bits.len() > 1 => out.extend(
                radix_bits.iter().map(|&r| labelled(TechniqueParams { radix_bits: r, ..base }, Some(format!("r={r}")))),
            ),
            Technique::Rs if epsilons.len() > 1 => out.extend(
                epsilons.iter().map(|&e| labelled(TechniqueParams { epsilon: e, ..base }, Some(format!("eps={e}")))),
            ),
            Technique::Rmi if branchings.len() > 1 => out.extend(
                branchings
                    .iter()
                    .map(|&l| labelled(TechniqueParams { branching: Some(l), ..base }, Some(format!("L={l}")))),
            ),
            _ => {
                let mut p = base;
                if let Some(&r) = radix_bits.first() {
                    p.radix_bits = r;
                }
                if let Some(&e) = epsilons.first() {
                    p.epsilon = e;
                }
                if let Some(&l) = branchings.first() {
                    p.branching = Some(l);
                }
                out.push(labelled(p, None));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub variants: Vec<Variant>,
    pub lookups: usize,
    pub seed: u64,
    pub reps: usize,
}

pub const DEFAULT_REPS: usize = 3;

impl BenchConfig {
    pub fn new(techniques: &[Technique], params: TechniqueParams, lookups: usize, seed: u64) -> Self {
        BenchConfig {
            variants: techniques.iter().map(|&t| Variant::new(t, params)).collect(),
            lookups,
            seed,
            reps: DEFAULT_REPS,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.variants.is_empty() {
            return Err(ConfigError::NoTechniques);
        }
        if self.lookups == 0 {
            return Err(ConfigError::NoLookups);
        }
        if self.reps == 0 {
            return Err(ConfigError::NoReps);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyStatus {
    Pass,
    Fail,
    Error,
}

impl fmt::Display for VerifyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyStatus::Pass => "pass",
            VerifyStatus::Fail => "fail",
            VerifyStatus::Error => "error",
        })
    }
}

impl FromStr for VerifyStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pass" => Ok(VerifyStatus::Pass),
            "fail" => Ok(VerifyStatus::Fail),
            "error" => Ok(VerifyStatus::Error),
            other => Err(format!("unknown verify status '{other}'")),
        }
    }
}

/// Counter name for reads of an index's own structures.
pub const AUX_READS: &str = "aux_reads";

/// Measurements for one (dataset, technique) pair. Fields that could not be
/// measured (failed build, aborted lookups) are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub dataset: String,
    pub technique: String,
    pub build_ns: Option<u64>,
    pub ns_per_lookup: Option<f64>,
    pub size_overhead_pct: Option<f64>,
    pub mean_probes: Option<f64>,
    pub verify: VerifyStatus,
    /// Further per-lookup counters: [`AUX_READS`] and any platform counters.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub counters: BTreeMap<String, f64>,
}

impl Row {
    fn failed(dataset: &str, technique: &str, verify: VerifyStatus) -> Self {
        Row {
            dataset: dataset.to_owned(),
            technique: technique.to_owned(),
            build_ns: None,
            ns_per_lookup: None,
            size_overhead_pct: None,
            mean_probes: None,
            verify,
            counters: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<Row>,
    /// Diagnostics for rows that did not pass.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<String>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verify == VerifyStatus::Pass)
    }

    pub fn append(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.messages.extend(other.messages);
    }
}

/// First lookup whose result differed from the expected one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub index: usize,
    pub key: Key,
    pub expected: LookupResult,
    pub got: Result<LookupResult, ContractViolation>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lookup #{} (key {}): ", self.index, self.key)?;
        match &self.got {
            Ok(r) => write!(
                f,
                "got checksum {} / count {}, expected {} / {}",
                r.checksum, r.count, self.expected.checksum, self.expected.count
            ),
            Err(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Fastest repetition's mean time per lookup.
    pub ns_per_lookup: f64,
    /// Data array probes summed over one repetition.
    pub probes: u64,
    /// Auxiliary structure reads summed over one repetition.
    pub aux_reads: u64,
    pub counters: Vec<u64>,
    pub mismatch: Option<Mismatch>,
}

/// Runs the workload `reps` times through `narrow` and the shared last-mile
/// search. Stops at the first wrong result.
#[inline(never)]
pub fn measure<F>(
    data: &SortedDataset,
    queries: &[Query],
    reps: usize,
    hook: &mut dyn CounterHook,
    mut narrow: F,
) -> Measurement
where
    F: FnMut(Key, &Query, &mut ProbeCounter) -> SearchBound,
{
    let mut out =
        Measurement { ns_per_lookup: f64::INFINITY, probes: 0, aux_reads: 0, counters: Vec::new(), mismatch: None };
    for _ in 0..reps.max(1) {
        let mut probes = ProbeCounter::new();
        hook.start();
        let start = Instant::now();
        for (index, q) in queries.iter().enumerate() {
            let bound = narrow(q.key, q, &mut probes);
            match search_within(data, bound, q.key, &mut probes) {
                Ok(r) if r == q.expected => {}
                got => {
                    hook.stop();
                    out.mismatch = Some(Mismatch { index, key: q.key, expected: q.expected, got });
                    return out;
                }
            }
        }
        let elapsed = start.elapsed();
        let counters = hook.stop();
        let ns = elapsed.as_nanos() as f64 / queries.len().max(1) as f64;
        if ns < out.ns_per_lookup {
            out.ns_per_lookup = ns;
            out.counters = counters;
        }
        out.probes = probes.get();
        out.aux_reads = probes.aux();
    }
    out
}

struct Timed<'a> {
    data: &'a SortedDataset,
    queries: &'a [Query],
    reps: usize,
    hook: &'a mut dyn CounterHook,
}

impl IndexVisitor for Timed<'_> {
    type Output = Measurement;

    fn visit<I: SearchIndex>(self, index: &I) -> Measurement {
        let data = self.data;
        measure(data, self.queries, self.reps, self.hook, |key, _, probes| index.lookup(data, key, probes))
    }
}

/// Time per lookup of an "index" that returns the precomputed exact bound:
/// the cost of the harness loop and the last-mile search alone.
pub fn identity_overhead(data: &SortedDataset, workload: &Workload, reps: usize) -> Measurement {
    let n = data.len();
    measure(data, &workload.queries, reps, &mut NoCounters, |_, q, _| SearchBound::exact(q.lower_bound, n))
}

/// Benchmarks every variant on one dataset with a fresh workload.
pub fn run(dataset: &str, data: &SortedDataset, config: &BenchConfig) -> Result<Report, ConfigError> {
    config.validate()?;
    check_cap(data)?;
    let workload = generate_workload(data, config.lookups, config.seed)?;
    Ok(run_workload(dataset, data, &workload, config, &mut NoCounters))
}

pub fn check_cap(data: &SortedDataset) -> Result<(), ConfigError> {
    match data.max_duplicates() {
        found if found > MAX_DUPLICATES => Err(ConfigError::DuplicateCap { found }),
        _ => Ok(()),
    }
}

/// Benchmarks every variant against a prepared workload. Build errors and
/// wrong results are reported in their row; the run always completes.
pub fn run_workload(
    dataset: &str,
    data: &SortedDataset,
    workload: &Workload,
    config: &BenchConfig,
    hook: &mut dyn CounterHook,
) -> Report {
    let mut report = Report::default();
    let names = hook.names();
    for variant in &config.variants {
        let start = Instant::now();
        let built = BuiltIndex::build(variant.technique, data, &variant.params);
        let build_ns = start.elapsed().as_nanos() as u64;
        let index = match built {
            Ok(index) => index,
            Err(e) => {
                report.messages.push(format!("{dataset}/{}: build failed: {e}", variant.label));
                report.rows.push(Row::failed(dataset, &variant.label, VerifyStatus::Error));
                continue;
            }
        };
        let size = index.as_dyn().size_bytes();
        let m = index.visit(Timed { data, queries: &workload.queries, reps: config.reps, hook: &mut *hook });
        let mut row = Row::failed(dataset, &variant.label, VerifyStatus::Pass);
        row.build_ns = Some(build_ns);
        row.size_overhead_pct = Some(size_overhead_pct(size, data));
        match m.mismatch {
            Some(mismatch) => {
                report.messages.push(format!("{dataset}/{}: {mismatch}", variant.label));
                row.verify = VerifyStatus::Fail;
            }
            None => {
                let lookups = workload.len().max(1) as f64;
                row.ns_per_lookup = Some(m.ns_per_lookup);
                row.mean_probes = Some(m.probes as f64 / lookups);
                row.counters = names.iter().cloned().zip(m.counters.iter().map(|&c| c as f64 / lookups)).collect();
                row.counters.insert(AUX_READS.to_owned(), m.aux_reads as f64 / lookups);
            }
        }
        report.rows.push(row);
    }
    report
}

/// Auxiliary bytes as a percentage of the packed data array.
pub fn size_overhead_pct(aux_bytes: usize, data: &SortedDataset) -> f64 {
    match data.data_bytes() {
        0 => 0.0,
        d => aux_bytes as f64 * 100.0 / d as f64,
    }
}
