//! Two-level recursive model index.
//!
//! A root model maps a key to one of `L` leaf models; the leaf predicts the
//! key's position and carries the error bounds observed for the keys routed
//! to it. Training is top-down: root first, then each leaf on the keys the
//! trained root sends it.
//!
//! Models work on `x = key - min_key` as `f64`. Every fitted model is forced
//! to be non-decreasing, which keeps both routing and predictions monotone in
//! the key. That monotonicity is what lets the gap-key pass below bound the
//! error of every absent key by looking only at interval endpoints.

use alloc::vec::Vec;

use crate::codec::{Reader, Writer};
use crate::error::{BuildError, DecodeError};
use crate::search::SearchIndex;
use crate::types::{Key, ProbeCounter, SearchBound, SortedDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `a * x + b`, least squares.
    Linear,
    /// The line through the first and last training points.
    LinearSpline,
    /// `a * ln(x - offset + 1) + b`, least squares on the transformed keys.
    LogLinear,
}

impl ModelKind {
    fn code(self) -> u8 {
        match self {
            ModelKind::Linear => 0,
            ModelKind::LinearSpline => 1,
            ModelKind::LogLinear => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ModelKind::Linear),
            1 => Some(ModelKind::LinearSpline),
            2 => Some(ModelKind::LogLinear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub slope: f64,
    pub intercept: f64,
    /// Subtracted from `x` before the log transform; unused by the linear kinds.
    pub offset: f64,
}

#[inline(always)]
fn transform(kind: ModelKind, x: f64, offset: f64) -> f64 {
    match kind {
        ModelKind::LogLinear => {
            let shifted = x - offset;
            libm::log(if shifted > 0.0 { shifted } else { 0.0 } + 1.0)
        }
        _ => x,
    }
}

impl Model {
    pub fn constant(kind: ModelKind, y: f64) -> Self {
        Model { kind, slope: 0.0, intercept: y, offset: 0.0 }
    }

    #[inline(always)]
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * transform(self.kind, x, self.offset) + self.intercept
    }

    fn through_endpoints(kind: ModelKind, points: &[(f64, f64)], offset: f64) -> Self {
        let (x0, y0) = points[0];
        let (x1, y1) = points[points.len() - 1];
        let (t0, t1) = (transform(kind, x0, offset), transform(kind, x1, offset));
        if t1 <= t0 {
            return Model { offset, ..Model::constant(kind, y0) };
        }
        let slope = (y1 - y0) / (t1 - t0);
        Model { kind, slope, intercept: y0 - slope * t0, offset }
    }
}

/// Fits `kind` to `(x, y)` points sorted by `x`. Log-linear models use the
/// smallest `x` as their offset.
pub fn fit_model(points: &[(f64, f64)], kind: ModelKind) -> Model {
    let offset = match kind {
        ModelKind::LogLinear => points.first().map_or(0.0, |p| p.0),
        _ => 0.0,
    };
    fit_model_at(points, kind, offset)
}

fn fit_model_at(points: &[(f64, f64)], kind: ModelKind, offset: f64) -> Model {
    match points.len() {
        0 => return Model::constant(kind, 0.0),
        1 => return Model { offset, ..Model::constant(kind, points[0].1) },
        _ => {}
    }
    if kind == ModelKind::LinearSpline {
        return Model::through_endpoints(kind, points, offset);
    }
    let n = points.len() as f64;
    let (mut mean_t, mut mean_y) = (0.0, 0.0);
    for &(x, y) in points {
        mean_t += transform(kind, x, offset);
        mean_y += y;
    }
    mean_t /= n;
    mean_y /= n;
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(x, y) in points {
        let dt = transform(kind, x, offset) - mean_t;
        stt += dt * dt;
        sty += dt * (y - mean_y);
    }
    if stt == 0.0 {
        return Model { offset, ..Model::constant(kind, mean_y) };
    }
    let slope = sty / stt;
    Model { kind, slope, intercept: mean_y - slope * mean_t, offset }
}

/// Fit that is guaranteed non-decreasing: a negative least-squares slope is
/// replaced by the endpoint line in the same transformed space.
fn fit_monotone(points: &[(f64, f64)], kind: ModelKind) -> Model {
    let m = fit_model_at(points, kind, 0.0);
    if m.slope < 0.0 || !m.slope.is_finite() {
        Model::through_endpoints(kind, points, 0.0)
    } else {
        m
    }
}

pub const MAX_DEFAULT_LEAVES: usize = 1 << 17;

/// Default branching factor: `min(2^17, n / 64)`, at least one leaf.
pub fn default_branching(n: usize) -> usize {
    (n / 64).clamp(1, MAX_DEFAULT_LEAVES)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RmiConfig {
    pub root: ModelKind,
    pub leaf: ModelKind,
    /// Number of leaves; `None` picks [`default_branching`].
    pub branching: Option<usize>,
    pub budget: usize,
}

impl Default for RmiConfig {
    fn default() -> Self {
        RmiConfig { root: ModelKind::Linear, leaf: ModelKind::Linear, branching: None, budget: 1 << 30 }
    }
}

/// Leaf model stored next to its lookup errors so one cache line serves both.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Leaf {
    slope: f64,
    intercept: f64,
    err: LeafError,
}

/// Per-leaf under- and over-prediction, in slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LeafError {
    /// Max of `predicted - true` (the bound extends this far left).
    pub lo: u32,
    /// Max of `true - predicted` (the bound extends this far right).
    pub hi: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rmi {
    root: Model,
    leaf_kind: ModelKind,
    /// Models with the errors used by lookups: training errors widened to
    /// cover gap keys.
    leaves: Vec<Leaf>,
    /// Errors observed on training keys only.
    training: Vec<LeafError>,
    min_key: Key,
    n: usize,
    last_leaf: usize,
    route_scale: f64,
}

/// Distinct keys with their lower-bound positions.
fn distinct(data: &SortedDataset) -> Vec<(Key, usize)> {
    let records = data.records();
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if i == 0 || records[i - 1].key != r.key {
            out.push((r.key, i));
        }
    }
    out
}

impl Rmi {
    pub fn train(data: &SortedDataset, config: RmiConfig) -> Result<Self, BuildError> {
        let n = data.len();
        if n == 0 {
            return Err(BuildError::EmptyDataset);
        }
        if n > u32::MAX as usize {
            return Err(BuildError::TooManyRecords { n, max: u32::MAX as usize });
        }
        let branching = config.branching.unwrap_or_else(|| default_branching(n));
        if branching == 0 {
            return Err(BuildError::InvalidParameter { name: "branching", value: 0, reason: "need at least one leaf" });
        }
        let bytes = branching.saturating_mul(Self::BYTES_PER_LEAF);
        if bytes > config.budget {
            return Err(BuildError::OverBudget { bytes, budget: config.budget });
        }

        let min_key = data.key(0);
        let keys = distinct(data);
        let points: Vec<(f64, f64)> = keys.iter().map(|&(k, pos)| ((k - min_key) as f64, pos as f64)).collect();

        let mut rmi = Rmi {
            root: fit_monotone(&points, config.root),
            leaf_kind: config.leaf,
            leaves: Vec::with_capacity(branching),
            training: Vec::new(),
            min_key,
            n,
            last_leaf: branching - 1,
            route_scale: branching as f64 / n as f64,
        };

        // routing is monotone, so each leaf owns a contiguous run of points
        let mut start = 0;
        for leaf in 0..branching {
            let mut end = start;
            while end < keys.len() && rmi.route(points[end].0) == leaf {
                end += 1;
            }
            let model = if end == start {
                let boundary = keys.get(start).map_or(n, |&(_, pos)| pos);
                Model::constant(config.leaf, boundary as f64)
            } else {
                fit_monotone(&points[start..end], config.leaf)
            };
            rmi.leaves.push(Leaf { slope: model.slope, intercept: model.intercept, err: LeafError::default() });
            start = end;
        }
        debug_assert_eq!(start, keys.len());

        for (&(_, pos), &(x, _)) in keys.iter().zip(&points) {
            let leaf = rmi.route(x);
            let p = rmi.position(leaf, x);
            let e = &mut rmi.leaves[leaf].err;
            e.lo = e.lo.max(p.saturating_sub(pos) as u32);
            e.hi = e.hi.max(pos.saturating_sub(p) as u32);
        }
        rmi.training = rmi.leaves.iter().map(|l| l.err).collect();
        rmi.widen_for_gaps(&keys);
        Ok(rmi)
    }

    /// Widens errors so every absent key's lower bound lies in its bound.
    ///
    /// Keys in one gap share the same lower bound `t`. Within one leaf,
    /// predictions are monotone, so the extreme predictions over the part of
    /// the gap routed to that leaf occur at its endpoints.
    fn widen_for_gaps(&mut self, keys: &[(Key, usize)]) {
        let n = self.n;
        let first = keys[0].0;
        let last = keys[keys.len() - 1].0;
        if first > 0 {
            self.widen_interval(0, first - 1, 0);
        }
        for w in keys.windows(2) {
            let ((a, _), (b, t)) = (w[0], w[1]);
            if a + 1 < b {
                self.widen_interval(a + 1, b - 1, t);
            }
        }
        if last < Key::MAX {
            self.widen_interval(last + 1, Key::MAX, n);
        }
    }

    fn widen_interval(&mut self, start: Key, end: Key, target: usize) {
        let first_leaf = self.route_key(start);
        let last_leaf = self.route_key(end);
        for leaf in first_leaf..=last_leaf {
            let lo_key = if leaf == first_leaf { start } else { self.first_routed(leaf, start, end) };
            if self.route_key(lo_key) != leaf {
                continue;
            }
            let hi_key = if leaf == last_leaf { end } else { self.first_routed(leaf + 1, start, end) - 1 };
            let p_min = self.position(leaf, self.x(lo_key));
            let p_max = self.position(leaf, self.x(hi_key));
            let e = &mut self.leaves[leaf].err;
            e.lo = e.lo.max(p_max.saturating_sub(target) as u32);
            e.hi = e.hi.max(target.saturating_sub(p_min + 1) as u32);
        }
    }

    /// Smallest key in `[start, end]` routed to `leaf` or beyond; `route_key(end) >= leaf` is required.
    fn first_routed(&self, leaf: usize, start: Key, end: Key) -> Key {
        let (mut lo, mut hi) = (start, end);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.route_key(mid) >= leaf {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    #[inline(always)]
    fn x(&self, key: Key) -> f64 {
        key.saturating_sub(self.min_key) as f64
    }

    #[inline(always)]
    fn route(&self, x: f64) -> usize {
        let slot = self.root.predict(x) * self.route_scale;
        (slot as usize).min(self.last_leaf)
    }

    fn route_key(&self, key: Key) -> usize {
        self.route(self.x(key))
    }

    #[inline(always)]
    fn position(&self, leaf: usize, x: f64) -> usize {
        let m = &self.leaves[leaf];
        let y = m.slope * transform(self.leaf_kind, x, 0.0) + m.intercept;
        ((y + 0.5) as usize).min(self.n - 1)
    }

    /// Leaf a key is routed to.
    pub fn leaf_of(&self, key: Key) -> usize {
        self.route_key(key)
    }

    /// Rounded, clamped position predicted for `key`.
    pub fn predict(&self, key: Key) -> usize {
        let x = self.x(key);
        self.position(self.route(x), x)
    }

    pub fn branching(&self) -> usize {
        self.last_leaf + 1
    }

    pub fn root(&self) -> &Model {
        &self.root
    }

    /// Error bounds used by lookups.
    pub fn errors(&self) -> impl ExactSizeIterator<Item = LeafError> + '_ {
        self.leaves.iter().map(|l| l.err)
    }

    /// Error bounds observed on the training keys alone.
    pub fn training_errors(&self) -> &[LeafError] {
        &self.training
    }

    const BYTES_PER_LEAF: usize = core::mem::size_of::<Leaf>() + core::mem::size_of::<LeafError>();

    const MAGIC: &'static [u8; 4] = b"RMI2";
    const VERSION: u16 = 1;

    /// Serializes kinds, coefficients, branching and both error arrays.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(Self::MAGIC, Self::VERSION);
        w.u8(self.root.kind.code());
        w.u8(self.leaf_kind.code());
        w.u64(self.n as u64);
        w.u64(self.min_key);
        w.f64(self.root.slope);
        w.f64(self.root.intercept);
        w.f64(self.root.offset);
        w.u64(self.branching() as u64);
        for (leaf, t) in self.leaves.iter().zip(&self.training) {
            w.f64(leaf.slope);
            w.f64(leaf.intercept);
            w.u32(leaf.err.lo);
            w.u32(leaf.err.hi);
            w.u32(t.lo);
            w.u32(t.hi);
        }
        w.0
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, DecodeError> {
        let (mut r, _) = Reader::open(buf, Self::MAGIC, Self::VERSION)?;
        let kind = |c| ModelKind::from_code(c).ok_or(DecodeError::Corrupt("model kind"));
        let root_kind = kind(r.u8()?)?;
        let leaf_kind = kind(r.u8()?)?;
        let n = r.u64()? as usize;
        let min_key = r.u64()?;
        let root = Model { kind: root_kind, slope: r.f64()?, intercept: r.f64()?, offset: r.f64()? };
        let branching = r.count(32)?;
        if n == 0 || branching == 0 {
            return Err(DecodeError::Corrupt("empty index"));
        }
        let mut leaves = Vec::with_capacity(branching);
        let mut training = Vec::with_capacity(branching);
        for _ in 0..branching {
            let (slope, intercept) = (r.f64()?, r.f64()?);
            leaves.push(Leaf { slope, intercept, err: LeafError { lo: r.u32()?, hi: r.u32()? } });
            training.push(LeafError { lo: r.u32()?, hi: r.u32()? });
        }
        r.finish()?;
        let route_scale = branching as f64 / n as f64;
        Ok(Rmi { root, leaf_kind, leaves, training, min_key, n, last_leaf: branching - 1, route_scale })
    }
}

impl SearchIndex for Rmi {
    fn name(&self) -> &'static str {
        "RMI"
    }

    #[inline]
    fn lookup(&self, _data: &SortedDataset, key: Key, probes: &mut ProbeCounter) -> SearchBound {
        let x = self.x(key);
        let leaf = self.route(x);
        probes.aux_hit();
        let p = self.position(leaf, x);
        let e = self.leaves[leaf].err;
        SearchBound::new(p.saturating_sub(e.lo as usize), (p + e.hi as usize + 1).min(self.n))
    }

    fn size_bytes(&self) -> usize {
        core::mem::size_of::<Model>() + self.branching() * Self::BYTES_PER_LEAF
    }
}
