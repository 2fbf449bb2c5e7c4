//! Synthetic key distributions.
//!
//! All generators draw from a ChaCha20 stream seeded with the spec's seed,
//! so a `(family, n, width, seed, params)` tuple always yields the same
//! dataset. Continuous draws are mapped onto the key domain by a fixed
//! scaling that does not depend on the sample:
//!
//! * `norm`: the interval `mu ± 8 sigma` is mapped affinely onto
//!   `[0, 2^w)`.
//! * `logn`: `x / exp(mu + 8 sigma) * 2^w`.
//!
//! Values are truncated to integers and clamped to the domain (draws beyond
//! eight standard deviations are clamped; at realistic `n` that never
//! happens). Keys holding more than [`MAX_DUPLICATES`] records are thinned
//! and the shortfall is redrawn.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use sortidx_core::{Key, KeyWidth, SortedDataset, MAX_DUPLICATES};

/// Standard deviations covered by the fixed domain scaling.
pub const SPAN_SIGMAS: f64 = 8.0;

/// Redraw rounds allowed before the duplicate cap is declared unattainable.
pub const MAX_RESAMPLE_ROUNDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Uden,
    Uspr,
    Logn,
    Norm,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Uden, Family::Uspr, Family::Logn, Family::Norm];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Uden => "uden",
            Family::Uspr => "uspr",
            Family::Logn => "logn",
            Family::Norm => "norm",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| GenerateError::UnknownFamily(s.to_owned()))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GenerateError {
    #[error("unknown family '{0}' (expected uden, uspr, logn or norm)")]
    UnknownFamily(String),
    #[error("dataset must contain at least one record")]
    Empty,
    #[error("{n} dense keys do not fit in {width} keys")]
    DomainTooSmall { n: usize, width: KeyWidth },
    #[error("invalid distribution parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("duplicate cap of {cap} still violated after {rounds} resampling rounds")]
    CapNotConverged { cap: usize, rounds: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub family: Family,
    pub n: usize,
    pub width: KeyWidth,
    pub seed: u64,
    /// Location parameter for `logn` and `norm`.
    pub mu: f64,
    /// Scale parameter for `logn` and `norm`.
    pub sigma: f64,
}

impl DatasetSpec {
    /// Spec with the default distribution parameters: `logn` uses (0, 2) at
    /// 64 bits and (0, 1) at 32 bits, `norm` is standard normal.
    pub fn new(family: Family, n: usize, width: KeyWidth, seed: u64) -> Self {
        let sigma = match (family, width) {
            (Family::Logn, KeyWidth::W64) => 2.0,
            _ => 1.0,
        };
        DatasetSpec { family, n, width, seed, mu: 0.0, sigma }
    }

    /// `<family>_<width>_<n>_<seed>.bin`
    pub fn file_name(&self) -> String {
        format!("{}_{}_{}_{}.bin", self.family, self.width.bits(), self.n, self.seed)
    }

    /// Short dataset label such as `norm64`.
    pub fn label(&self) -> String {
        format!("{}{}", self.family, self.width.bits())
    }
}

/// Parses a file name following the `<family>_<width>_<n>_<seed>.bin`
/// convention. Any leading directories are ignored.
pub fn parse_file_name(name: &str) -> Option<DatasetSpec> {
    let base = name.rsplit(['/', '\\']).next()?;
    let stem = base.strip_suffix(".bin")?;
    let mut parts = stem.split('_');
    let family = parts.next()?.parse().ok()?;
    let width = KeyWidth::from_bits(parts.next()?.parse().ok()?)?;
    let n = parts.next()?.parse().ok()?;
    let seed = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some(DatasetSpec::new(family, n, width, seed))
}

pub fn generate(spec: &DatasetSpec) -> Result<SortedDataset, GenerateError> {
    if spec.n == 0 {
        return Err(GenerateError::Empty);
    }
    let max = spec.width.max_key();
    let keys = match spec.family {
        Family::Uden => {
            if (spec.n - 1) as u128 > max as u128 {
                return Err(GenerateError::DomainTooSmall { n: spec.n, width: spec.width });
            }
            (0..spec.n as u64).collect()
        }
        family => {
            let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
            let mut draw = sampler(family, spec)?;
            let mut keys: Vec<Key> = (0..spec.n).map(|_| draw(&mut rng)).collect();
            enforce_cap(&mut keys, spec.n, || draw(&mut rng))?;
            keys
        }
    };
    let data = SortedDataset::from_keys(keys, spec.width).expect("generated keys are sorted and in range");
    debug_assert!(data.max_duplicates() <= MAX_DUPLICATES);
    Ok(data)
}

type Sampler = Box<dyn FnMut(&mut ChaCha20Rng) -> Key>;

fn sampler(family: Family, spec: &DatasetSpec) -> Result<Sampler, GenerateError> {
    let max = spec.width.max_key();
    let domain = max as f64 + 1.0;
    if matches!(family, Family::Logn | Family::Norm) {
        if !spec.mu.is_finite() {
            return Err(GenerateError::InvalidParameter { name: "mu", value: spec.mu });
        }
        if !(spec.sigma.is_finite() && spec.sigma > 0.0) {
            return Err(GenerateError::InvalidParameter { name: "sigma", value: spec.sigma });
        }
    }
    let to_key = move |v: f64| -> Key {
        // `as` saturates: negatives become 0, overflow becomes u64::MAX
        (v as u64).min(max)
    };
    Ok(match family {
        Family::Uden => unreachable!("dense keys are not sampled"),
        Family::Uspr => Box::new(move |rng: &mut ChaCha20Rng| rng.random_range(0..=max)),
        Family::Norm => {
            let dist = Normal::new(spec.mu, spec.sigma).expect("validated");
            let lo = spec.mu - SPAN_SIGMAS * spec.sigma;
            let span = 2.0 * SPAN_SIGMAS * spec.sigma;
            Box::new(move |rng: &mut ChaCha20Rng| to_key((dist.sample(rng) - lo) / span * domain))
        }
        Family::Logn => {
            let dist = LogNormal::new(spec.mu, spec.sigma).expect("validated");
            let top = (spec.mu + SPAN_SIGMAS * spec.sigma).exp();
            Box::new(move |rng: &mut ChaCha20Rng| to_key(dist.sample(rng) / top * domain))
        }
    })
}

/// Sorts `keys`, keeps at most [`MAX_DUPLICATES`] copies of each key and
/// redraws until `n` keys satisfy the cap.
fn enforce_cap(keys: &mut Vec<Key>, n: usize, mut draw: impl FnMut() -> Key) -> Result<(), GenerateError> {
    for _ in 0..MAX_RESAMPLE_ROUNDS {
        keys.sort_unstable();
        thin_runs(keys, MAX_DUPLICATES);
        if keys.len() == n {
            return Ok(());
        }
        let missing = n - keys.len();
        keys.extend((0..missing).map(|_| draw()));
    }
    Err(GenerateError::CapNotConverged { cap: MAX_DUPLICATES, rounds: MAX_RESAMPLE_ROUNDS })
}

/// Drops every copy of a key beyond the first `cap` in a sorted vector.
fn thin_runs(keys: &mut Vec<Key>, cap: usize) {
    let mut run = 0usize;
    let mut prev = None;
    keys.retain(|&k| {
        if prev == Some(k) {
            run += 1;
        } else {
            prev = Some(k);
            run = 1;
        }
        run <= cap
    });
}
