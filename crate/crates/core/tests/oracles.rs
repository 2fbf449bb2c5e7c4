//! Checks against independent reference computations.

use sortidx_core::otf::{hyperbolic_interpolate, interpolation_search, tip_search};
use sortidx_core::rmi::{fit_model, ModelKind, Rmi, RmiConfig};
use sortidx_core::{lower_bound, KeyWidth, ProbeCounter, SortedDataset};

/// Ordinary least squares via the 2x2 normal equations.
fn normal_equations(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
}

/// Deterministic noise in [-0.5, 0.5).
fn noise(i: u64) -> f64 {
    let z = i.wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(17).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// Keys on `pos = a + b / (key - c)` with a = 20000, b = -1e12, c = 0.
fn hyperbolic_keys(n: usize) -> Vec<u64> {
    (0..n).map(|i| (1e12 / (20_000.0 - i as f64)) as u64).collect()
}

#[test]
fn tip_recovers_a_hyperbolic_cdf() {
    let keys = hyperbolic_keys(10_000);
    let data = SortedDataset::from_keys(keys.iter().copied(), KeyWidth::W64).unwrap();
    let refs = [0, 5_000, 9_999].map(|i| (keys[i], i as f64));
    for (i, &k) in keys.iter().enumerate() {
        let y = hyperbolic_interpolate(refs, k).expect("curved data");
        assert!((y - i as f64).abs() <= 1.0, "key {k}: predicted {y}, true {i}");
    }

    let (mut tip, mut is) = (0, 0);
    for &k in &keys {
        let mut p = ProbeCounter::new();
        let b = tip_search(&data, k, &mut p);
        assert!(b.admits(lower_bound(&data, k)));
        // one bisection, one exact fit, at most a neighbour check
        assert!(p.get() <= 4, "key {k} took {} probes", p.get());
        tip += p.get();
        let mut p = ProbeCounter::new();
        interpolation_search(&data, k, &mut p);
        is += p.get();
    }
    assert!(tip < is, "TIP {tip} vs IS {is}");
}

#[test]
fn least_squares_matches_normal_equations() {
    let points: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 1.7, 3.25 * i as f64 * 1.7 + 11.0 + noise(i))).collect();
    let m = fit_model(&points, ModelKind::Linear);
    let (a, b) = normal_equations(&points);
    assert!((m.slope - a).abs() <= 1e-9 * a.abs(), "{} vs {a}", m.slope);
    assert!((m.intercept - b).abs() <= 1e-9 * b.abs(), "{} vs {b}", m.intercept);
}

/// Max (over-prediction, under-prediction) of a model on (x, true position) points.
fn global_errors(points: &[(f64, f64)], n: usize, predict: impl Fn(f64) -> f64) -> (u32, u32) {
    let mut lo = 0;
    let mut hi = 0;
    for &(x, pos) in points {
        let p = ((predict(x) + 0.5).max(0.0) as usize).min(n - 1) as i64;
        let t = pos as i64;
        lo = lo.max(p - t);
        hi = hi.max(t - p);
    }
    (lo as u32, hi as u32)
}

#[test]
fn two_segments_beat_one_line() {
    let keys: Vec<u64> = (0..100).chain(1000..1100).collect();
    let data = SortedDataset::from_keys(keys.iter().copied(), KeyWidth::W64).unwrap();
    let points: Vec<(f64, f64)> = keys.iter().enumerate().map(|(i, &k)| (k as f64, i as f64)).collect();
    let (a, b) = normal_equations(&points);
    let (glo, ghi) = global_errors(&points, keys.len(), |x| a * x + b);
    let global = glo.max(ghi);
    assert!(global > 0);

    let cfg = RmiConfig { branching: Some(4), ..RmiConfig::default() };
    let rmi = Rmi::train(&data, cfg).unwrap();
    let worst = rmi.training_errors().iter().map(|e| e.lo.max(e.hi)).max().unwrap();
    assert!(worst <= global, "leaf error {worst} vs global {global}");
}

#[test]
fn single_leaf_is_the_global_fit() {
    let mut keys: Vec<u64> = (0..2000u64).map(|i| i * i / 7 + (noise(i) * 40.0 + 20.0) as u64).collect();
    keys.sort_unstable();
    keys.dedup();
    let data = SortedDataset::from_keys(keys.iter().copied(), KeyWidth::W64).unwrap();
    let points: Vec<(f64, f64)> = keys.iter().enumerate().map(|(i, &k)| ((k - keys[0]) as f64, i as f64)).collect();
    let (a, b) = normal_equations(&points);
    let (lo, hi) = global_errors(&points, keys.len(), |x| a * x + b);

    let rmi = Rmi::train(&data, RmiConfig { branching: Some(1), ..RmiConfig::default() }).unwrap();
    let e = rmi.training_errors()[0];
    assert_eq!((e.lo, e.hi), (lo, hi));
    let width = |k: u64| {
        let mut p = ProbeCounter::new();
        sortidx_core::SearchIndex::lookup(&rmi, &data, k, &mut p).len()
    };
    // away from the array ends the bound spans the full error window
    let mid = keys[keys.len() / 2];
    assert!(width(mid) as u32 <= rmi.errors().next().map(|e| e.lo + e.hi + 1).unwrap());
}
