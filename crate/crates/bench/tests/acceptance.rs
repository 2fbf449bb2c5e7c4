//! Acceptance suite. Each test prints one PASS/FAIL line to stderr, even
//! when output is captured. Tests share a lock so timings are not disturbed
//! by each other.

use std::io::Write;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use sortidx::counters::NoCounters;
use sortidx::datagen::{generate, DatasetSpec, Family};
use sortidx::harness::{
    identity_overhead, measure, run, run_workload, size_overhead_pct, BenchConfig, BuiltIndex, IndexVisitor,
    Measurement, Technique, TechniqueParams,
};
use sortidx::verify::sweep_keys;
use sortidx::workload::Query;
use sortidx::{generate_workload, write_file, VerifyStatus};
use sortidx_core::otf::{binary_search, interpolation_search};
use sortidx_core::radix::{RadixBinarySearch, RadixConfig};
use sortidx_core::rmi::{LeafError, Rmi, RmiConfig};
use sortidx_core::spline::{RadixSpline, SplineConfig};
use sortidx_core::{lower_bound, search_within, Key, KeyWidth, ProbeCounter, SearchIndex, SortedDataset};

static SERIAL: Mutex<()> = Mutex::new(());

const WIDTHS: [KeyWidth; 2] = [KeyWidth::W32, KeyWidth::W64];

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn dataset(family: Family, width: KeyWidth, n: usize) -> SortedDataset {
    generate(&DatasetSpec::new(family, n, width, 42)).unwrap()
}

fn label(family: Family, width: KeyWidth) -> String {
    format!("{family}{}", width.bits())
}

/// Prints the result line and fails the test on a failure.
fn report(name: &str, failures: &[String], detail: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[{status}] {name}: {detail}");
    for f in failures {
        let _ = writeln!(err, "    {f}");
    }
    assert!(failures.is_empty(), "{name}: {}", failures.join("; "));
}

#[test]
fn oracle_equivalence() {
    let _g = serial();
    let start = Instant::now();
    let config = BenchConfig { reps: 1, ..BenchConfig::new(&Technique::ALL, TechniqueParams::default(), 100_000, 7) };
    let mut failures = Vec::new();
    let mut rows = 0;
    for family in Family::ALL {
        for width in WIDTHS {
            let data = dataset(family, width, 1_000_000);
            let r = run(&label(family, width), &data, &config).unwrap();
            rows += r.rows.len();
            failures.extend(
                r.rows
                    .iter()
                    .filter(|r| r.verify != VerifyStatus::Pass)
                    .map(|r| format!("{}/{}", r.dataset, r.technique)),
            );
            failures.extend(r.messages);
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        failures.push(format!("took {elapsed:.1?}, limit 5 min"));
    }
    report("oracle equivalence", &failures, &format!("{rows} rows at n=1e6, m=1e5 in {elapsed:.1?}"));
}

/// Keys where the RMI routing switches leaves, found by bisection.
fn leaf_boundaries(rmi: &Rmi, lo: Key, hi: Key) -> Vec<Key> {
    let mut out = Vec::new();
    let mut start = lo;
    while start < hi {
        let leaf = rmi.leaf_of(start);
        if rmi.leaf_of(hi) == leaf {
            break;
        }
        let (mut a, mut b) = (start, hi);
        while a < b {
            let mid = a + (b - a) / 2;
            if rmi.leaf_of(mid) > leaf {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        out.extend([a - 1, a]);
        start = a;
    }
    out
}

#[test]
fn bound_containment() {
    let _g = serial();
    let mut failures = Vec::new();
    let mut checked = 0u64;
    let mut exhaustive = 0u64;
    let rmi_params = [None, Some(1), Some(1000)];
    for family in Family::ALL {
        for width in WIDTHS {
            let data = dataset(family, width, 10_000);
            let name = label(family, width);
            let mut keys = sweep_keys(&data);
            for &branching in &rmi_params {
                let rmi = Rmi::train(&data, RmiConfig { branching, ..RmiConfig::default() }).unwrap();
                let extra = leaf_boundaries(&rmi, 0, width.max_key());
                keys.extend(extra.into_iter().map(|k| (k, sortidx_core::LookupResult::default())));
            }
            keys.sort_by_key(|&(k, _)| k);
            keys.dedup_by_key(|&mut (k, _)| k);
            let params = TechniqueParams { epsilon: 8, ..TechniqueParams::default() };
            for technique in Technique::ALL {
                let index = BuiltIndex::build(technique, &data, &params).unwrap();
                checked += keys.len() as u64;
                for &(k, _) in &keys {
                    let b = index.as_dyn().lookup(&data, k, &mut ProbeCounter::new());
                    if !b.admits(lower_bound(&data, k)) {
                        failures.push(format!("{name}/{technique}: key {k} bound {b}"));
                        break;
                    }
                }
            }

            // every integer key in [min - 1, max + 1], on keys squeezed into a 2^22 domain
            let max = data.max_key().unwrap();
            let squeezed: Vec<Key> =
                data.keys().map(|k| ((k as u128 * (1 << 22)) / (max as u128 + 1)) as Key).collect();
            let small = SortedDataset::from_keys(squeezed, width).unwrap();
            let (lo, hi) = (small.min_key().unwrap().saturating_sub(1), small.max_key().unwrap() + 1);
            for &branching in &rmi_params {
                let rmi = Rmi::train(&small, RmiConfig { branching, ..RmiConfig::default() }).unwrap();
                let mut lb = lower_bound(&small, lo);
                for k in lo..=hi {
                    while lb < small.len() && small.key(lb) < k {
                        lb += 1;
                    }
                    let b = rmi.lookup(&small, k, &mut ProbeCounter::new());
                    if !b.admits(lb) {
                        failures.push(format!("{name} squeezed, RMI L={branching:?}: key {k} bound {b} misses {lb}"));
                        break;
                    }
                }
                exhaustive += hi - lo + 1;
            }
        }
    }
    report(
        "bound containment",
        &failures,
        &format!("{checked} sweep lookups over 8 datasets at n=1e4, {exhaustive} exhaustive RMI gap-key lookups"),
    );
}

#[test]
fn spline_error_guarantee() {
    let _g = serial();
    let mut failures = Vec::new();
    let mut worst = 0u64;
    for family in Family::ALL {
        for width in WIDTHS {
            let data = dataset(family, width, 1_000_000);
            let rs = RadixSpline::build(&data, SplineConfig { epsilon: 32, ..SplineConfig::default() }).unwrap();
            let mut lb = 0;
            let mut family_worst = 0;
            for (i, k) in data.keys().enumerate() {
                if i == 0 || data.key(i - 1) != k {
                    lb = i;
                }
                let p = rs.predict(k, &mut ProbeCounter::new()).unwrap();
                family_worst = family_worst.max(p.abs_diff(lb as u64));
            }
            if family_worst > 32 {
                failures.push(format!("{}: max error {family_worst}", label(family, width)));
            }
            worst = worst.max(family_worst);
        }
    }
    report("spline error guarantee", &failures, &format!("eps=32, max error {worst} over 8 datasets at n=1e6"));
}

#[test]
fn rmi_error_tightness() {
    let _g = serial();
    let mut failures = Vec::new();
    let mut leaves = 0;
    let mut inexact = 0;
    for family in Family::ALL {
        for width in WIDTHS {
            let data = dataset(family, width, 1_000_000);
            let name = label(family, width);
            let rmi = Rmi::train(&data, RmiConfig::default()).unwrap();
            let mut observed = vec![LeafError::default(); rmi.branching()];
            for (i, k) in data.keys().enumerate() {
                if i > 0 && data.key(i - 1) == k {
                    continue;
                }
                let p = rmi.predict(k);
                let e = &mut observed[rmi.leaf_of(k)];
                e.lo = e.lo.max(p.saturating_sub(i) as u32);
                e.hi = e.hi.max(i.saturating_sub(p) as u32);
                let b = rmi.lookup(&data, k, &mut ProbeCounter::new());
                if !b.admits(i) {
                    failures.push(format!("{name}: key {k} bound {b} misses {i}"));
                }
            }
            for (leaf, (got, want)) in observed.iter().zip(rmi.training_errors()).enumerate() {
                if got != want {
                    failures.push(format!("{name} leaf {leaf}: recorded {want:?}, attained {got:?}"));
                }
            }
            leaves += observed.len();
            inexact += observed.iter().filter(|e| e.lo + e.hi > 0).count();
        }
    }
    failures.truncate(20);
    report(
        "RMI error-bound tightness",
        &failures,
        &format!("{leaves} leaves ({inexact} inexact), each recorded bound attained by a routed key"),
    );
}

#[test]
fn size_overheads() {
    let _g = serial();
    let mut failures = Vec::new();
    let mut detail = Vec::new();
    let params = TechniqueParams::default();
    let limits = [
        (Technique::Rbs, 1.0, false),
        (Technique::Rs, 1.0, false),
        (Technique::Rmi, 3.0, true),
        (Technique::BTree, 25.0, true),
    ];
    for family in [Family::Uspr, Family::Norm] {
        let data = dataset(family, KeyWidth::W64, 10_000_000);
        for (technique, limit, inclusive) in limits {
            let index = BuiltIndex::build(technique, &data, &params).unwrap();
            let pct = size_overhead_pct(index.as_dyn().size_bytes(), &data);
            detail.push(format!("{}/{technique} {pct:.2}%", label(family, KeyWidth::W64)));
            let ok = if inclusive { pct <= limit } else { pct < limit };
            if !ok {
                failures.push(format!("{}/{technique}: {pct:.3}% exceeds {limit}%", label(family, KeyWidth::W64)));
            }
        }
    }
    report("size overheads", &failures, &format!("n=1e7: {}", detail.join(", ")));
}

/// Mean probes per query of `narrow` alone and of narrowing plus the last mile.
fn probe_means(
    data: &SortedDataset,
    queries: &[Query],
    mut narrow: impl FnMut(Key, &mut ProbeCounter) -> sortidx_core::SearchBound,
) -> (f64, f64) {
    let (mut own, mut total) = (0u64, 0u64);
    for q in queries {
        let mut p = ProbeCounter::new();
        let b = narrow(q.key, &mut p);
        own += p.total();
        search_within(data, b, q.key, &mut p).unwrap();
        total += p.total();
    }
    let m = queries.len() as f64;
    (own as f64 / m, total as f64 / m)
}

#[test]
fn probe_proxies() {
    let _g = serial();
    let mut failures = Vec::new();
    let mut detail = Vec::new();
    let n = 1_000_000usize;
    let log2n = (n as f64).log2().ceil();
    for width in WIDTHS {
        let uden = dataset(Family::Uden, width, n);
        let w = generate_workload(&uden, 100_000, 3).unwrap();
        let (is, _) = probe_means(&uden, &w.queries, |k, p| interpolation_search(&uden, k, p));
        detail.push(format!("uden{} IS {is:.2}", width.bits()));
        if is > 2.0 {
            failures.push(format!("uden{}: IS mean probes {is:.3} > 2", width.bits()));
        }

        let uspr = dataset(Family::Uspr, width, n);
        let w = generate_workload(&uspr, 100_000, 3).unwrap();
        let (bs, bs_total) = probe_means(&uspr, &w.queries, |k, p| binary_search(&uspr, k, p));
        let rbs_index = RadixBinarySearch::build(&uspr, RadixConfig::default()).unwrap();
        let (_, rbs) = probe_means(&uspr, &w.queries, |k, p| rbs_index.lookup(&uspr, k, p));
        detail.push(format!("uspr{} BS {bs:.2} (with last mile {bs_total:.2}) RBS {rbs:.2}", width.bits()));
        if (bs - log2n).abs() > 1.0 {
            failures.push(format!("uspr{}: BS mean probes {bs:.3}, expected {log2n} +- 1", width.bits()));
        }
        if rbs >= bs_total {
            failures.push(format!("uspr{}: RBS probes {rbs:.3} not below BS {bs_total:.3}", width.bits()));
        }
    }
    report("probe proxies", &failures, &format!("n=1e6: {}", detail.join("; ")));
}

struct Once<'a> {
    data: &'a SortedDataset,
    queries: &'a [Query],
}

impl IndexVisitor for Once<'_> {
    type Output = Measurement;

    fn visit<I: SearchIndex>(self, index: &I) -> Measurement {
        let data = self.data;
        measure(data, self.queries, 1, &mut NoCounters, |key, _, probes| index.lookup(data, key, probes))
    }
}

/// Fastest of `reps` timings per technique, repetitions interleaved across techniques.
fn latencies(data: &SortedDataset, techniques: &[Technique], reps: usize) -> Vec<(Technique, f64)> {
    let workload = generate_workload(data, 1_000_000, 11).unwrap();
    let built: Vec<BuiltIndex> =
        techniques.iter().map(|&t| BuiltIndex::build(t, data, &TechniqueParams::default()).unwrap()).collect();
    let mut best = vec![f64::INFINITY; techniques.len()];
    for _ in 0..reps {
        for (i, index) in built.iter().enumerate() {
            let m = index.visit(Once { data, queries: &workload.queries });
            assert!(m.mismatch.is_none(), "{}: {:?}", techniques[i], m.mismatch);
            best[i] = best[i].min(m.ns_per_lookup);
        }
    }
    techniques.iter().copied().zip(best).collect()
}

fn fmt_latencies(name: &str, l: &[(Technique, f64)]) -> String {
    let parts: Vec<String> = l.iter().map(|(t, ns)| format!("{t} {ns:.0}")).collect();
    format!("{name} [{}] ns", parts.join(", "))
}

#[test]
fn latency_ordering() {
    let _g = serial();
    let start = Instant::now();
    let mut failures = Vec::new();

    let norm = dataset(Family::Norm, KeyWidth::W64, 10_000_000);
    let l = latencies(&norm, &[Technique::Rmi, Technique::Rs, Technique::BTree], 5);
    drop(norm);
    let btree = l[2].1;
    for &(t, ns) in &l[..2] {
        if ns >= 0.5 * btree {
            failures.push(format!("norm64: {t} {ns:.1} ns is not below half of B-tree {btree:.1} ns"));
        }
    }
    let norm_line = fmt_latencies("norm64", &l);

    let uden = dataset(Family::Uden, KeyWidth::W64, 10_000_000);
    let u = latencies(&uden, &Technique::ALL, 5);
    let (fastest, ns) = u.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    if fastest != Technique::Is {
        failures.push(format!("uden64: fastest is {fastest} at {ns:.1} ns, IS took {:.1} ns", u[1].1));
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(600) {
        failures.push(format!("took {elapsed:.1?}, limit 10 min"));
    }
    report(
        "latency ordering",
        &failures,
        &format!("n=1e7; {norm_line}; {}; {elapsed:.1?}", fmt_latencies("uden64", &u)),
    );
}

#[test]
fn harness_integrity() {
    let _g = serial();
    let mut failures = Vec::new();
    // loop overhead on a cache-resident array; the large array adds one memory access per lookup
    let small = dataset(Family::Uspr, KeyWidth::W64, 10_000);
    let identity = identity_overhead(&small, &generate_workload(&small, 100_000, 5).unwrap(), 5);
    if identity.mismatch.is_some() || identity.ns_per_lookup >= 50.0 {
        failures.push(format!("identity loop {:.1} ns/lookup", identity.ns_per_lookup));
    }
    let mut data = dataset(Family::Uspr, KeyWidth::W64, 1_000_000);
    let workload = generate_workload(&data, 100_000, 5).unwrap();
    let large = identity_overhead(&data, &workload, 5);

    let config = BenchConfig::new(&Technique::ALL, TechniqueParams::default(), 100_000, 5);
    let victim = workload.queries[0].lower_bound;
    let tid = data.records()[victim].tid;
    data.set_tid(victim, tid ^ 1);
    let r = run_workload("uspr64", &data, &workload, &config, &mut NoCounters);
    let failed = r.rows.iter().filter(|r| r.verify == VerifyStatus::Fail).count();
    if failed != r.rows.len() {
        failures.push(format!("{failed} of {} rows failed after TID corruption", r.rows.len()));
    }

    let dir = tempfile::tempdir().unwrap();
    let clean = dataset(Family::Uspr, KeyWidth::W64, 100_000);
    let path = dir.path().join("uspr_64_100000_42.bin");
    write_file(&clean, &path).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sortidx"))
        .args(["bench", "--data", path.to_str().unwrap(), "--lookups", "10000", "--reps", "1", "--format", "csv"])
        .arg("--inject-tid-fault")
        .output()
        .unwrap();
    if out.status.code() != Some(1) {
        failures.push(format!("CLI exit code {:?} with a corrupted TID", out.status.code()));
    }
    report(
        "harness integrity",
        &failures,
        &format!(
            "identity loop {:.1} ns/lookup (n=1e4), {:.1} (n=1e6); corrupted TID fails {failed}/{} rows; CLI exit {:?}",
            identity.ns_per_lookup,
            large.ns_per_lookup,
            r.rows.len(),
            out.status.code()
        ),
    );
}
