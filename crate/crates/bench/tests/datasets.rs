use sortidx::datagen::{generate, DatasetSpec, Family};
use sortidx::fileio::{encode, read_file, write_file};
use sortidx::workload::generate_workload;
use sortidx_core::spline::fit_spline;
use sortidx_core::{KeyWidth, SortedDataset, MAX_DUPLICATES};

fn spec(family: Family, n: usize, width: KeyWidth, seed: u64) -> DatasetSpec {
    DatasetSpec::new(family, n, width, seed)
}

/// Largest gap between the empirical CDF and the uniform CDF on `[0, max]`.
fn ks_uniform(data: &SortedDataset) -> f64 {
    let n = data.len() as f64;
    let domain = data.width().max_key() as f64 + 1.0;
    data.keys()
        .enumerate()
        .map(|(i, k)| {
            let f = k as f64 / domain;
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn generation_is_deterministic() {
    let s = spec(Family::Uspr, 1_000_000, KeyWidth::W64, 17);
    let a = encode(&generate(&s).unwrap());
    assert_eq!(a, encode(&generate(&s).unwrap()));
    assert_ne!(a, encode(&generate(&spec(Family::Uspr, 1_000_000, KeyWidth::W64, 18)).unwrap()));
}

#[test]
fn sparse_uniform_matches_the_uniform_cdf() {
    for width in [KeyWidth::W32, KeyWidth::W64] {
        let data = generate(&spec(Family::Uspr, 1_000_000, width, 5)).unwrap();
        let d = ks_uniform(&data);
        assert!(d < 0.01, "{width}: KS distance {d}");
    }
}

#[test]
fn every_family_is_sorted_and_capped() {
    for family in Family::ALL {
        for width in [KeyWidth::W32, KeyWidth::W64] {
            let data = generate(&spec(family, 200_000, width, 3)).unwrap();
            assert_eq!(data.len(), 200_000);
            assert!(data.max_duplicates() <= MAX_DUPLICATES, "{family}{width}");
            assert!(data.records().windows(2).all(|w| w[0].key <= w[1].key));
            assert!(data.records().iter().enumerate().all(|(i, r)| r.tid == i as u64));
        }
    }
}

#[test]
fn lognormal_statistics() {
    let data = generate(&spec(Family::Logn, 100_000, KeyWidth::W64, 42)).unwrap();
    let keys: Vec<u64> = data.keys().collect();
    let median = keys[keys.len() / 2] as f64;
    let max = *keys.last().unwrap() as f64;

    // median of lognormal(0, 2) is 1, scaled by 2^64 / e^16
    let expected_median = 2f64.powi(64) / 16f64.exp();
    assert!((median / expected_median - 1.0).abs() < 0.03, "median {median} vs {expected_median}");
    assert!(max / median > 1000.0, "max/median {}", max / median);

    // far from linear: most keys sit in a sliver of the key range
    let span = max - keys[0] as f64;
    let below_mid = keys.iter().filter(|&&k| (k - keys[0]) as f64 <= span / 2.0).count();
    assert!(below_mid as f64 / keys.len() as f64 > 0.999);

    // frozen regression values for this seed and scaling
    assert_eq!((keys[0], keys[50_000], keys[99_999]), FROZEN_LOGN);
}

const FROZEN_LOGN: (u64, u64, u64) = (242_347_062, 2_076_356_829_839, 14_204_133_591_638_396);

#[test]
fn normal_keys_are_centered() {
    let data = generate(&spec(Family::Norm, 100_000, KeyWidth::W32, 1)).unwrap();
    let keys: Vec<u64> = data.keys().collect();
    let center = (u32::MAX as f64 + 1.0) / 2.0;
    let median = keys[keys.len() / 2] as f64;
    // one sigma is 1/16 of the domain
    assert!((median - center).abs() < center / 8.0 * 0.05);
    let within_sigma = keys.iter().filter(|&&k| (k as f64 - center).abs() <= center / 8.0).count();
    assert!((within_sigma as f64 / keys.len() as f64 - 0.6827).abs() < 0.01);
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (family, width) in [(Family::Logn, KeyWidth::W32), (Family::Norm, KeyWidth::W64), (Family::Uden, KeyWidth::W32)]
    {
        let s = spec(family, 10_000, width, 9);
        let data = generate(&s).unwrap();
        let path = dir.path().join(s.file_name());
        write_file(&data, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 8 + 10_000 * width.bytes());
        assert_eq!(read_file(&path).unwrap(), data);
    }
}

#[test]
fn unsorted_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.bin");
    let mut bytes = 2u64.to_le_bytes().to_vec();
    bytes.extend(2u64.to_le_bytes());
    bytes.extend(1u64.to_le_bytes());
    std::fs::write(&path, bytes).unwrap();
    let err = read_file(&path).unwrap_err().to_string();
    assert!(err.contains("unsorted at index 1"), "{err}");
}

#[test]
fn workloads_are_deterministic() {
    let data = generate(&spec(Family::Uspr, 1_000_000, KeyWidth::W64, 2)).unwrap();
    let a = generate_workload(&data, 100_000, 77).unwrap();
    assert_eq!(a.to_bytes(), generate_workload(&data, 100_000, 77).unwrap().to_bytes());
    assert!(a.queries.iter().all(|q| q.expected.count >= 1 && data.key(q.lower_bound) == q.key));
}

#[test]
fn spline_shrinks_as_epsilon_grows() {
    let data = generate(&spec(Family::Logn, 200_000, KeyWidth::W64, 8)).unwrap();
    let counts: Vec<usize> = [8, 32, 256].iter().map(|&e| fit_spline(&data, e).len()).collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]), "{counts:?}");
    assert!(counts[0] > counts[2]);
}
