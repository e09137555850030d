//! Reproducible, labelled random streams and elementary samplers.
//!
//! A stream is keyed by `(root_seed, stream_label)`. The key is hashed with
//! SHA-256 into a ChaCha8 key; ChaCha is itself a counter-mode generator, so
//! the stream position is just the block counter. Child streams are derived by
//! extending the label (`"clpm/source" -> "clpm/source/block-17"`), which lets
//! parallel workers own independent streams without any coordination.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A labelled, deterministic random stream.
#[derive(Clone)]
pub struct RngStream {
    root_seed: u64,
    label: String,
    rng: ChaCha8Rng,
}

impl fmt::Debug for RngStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RngStream")
            .field("root_seed", &self.root_seed)
            .field("label", &self.label)
            .field("word_pos", &self.rng.get_word_pos())
            .finish()
    }
}

/// Derive the stream for `(root_seed, stream_label)`.
///
/// Pure: the same pair always yields the same sequence, and no global state is
/// touched. An empty label is a programming error and panics.
pub fn derive_stream(root_seed: u64, stream_label: &str) -> RngStream {
    RngStream::new(root_seed, stream_label)
}

impl RngStream {
    pub fn new(root_seed: u64, stream_label: &str) -> Self {
        assert!(!stream_label.is_empty(), "stream label must be non-empty");
        let mut hasher = Sha256::new();
        hasher.update(b"spce-stream-v1\0");
        hasher.update(root_seed.to_le_bytes());
        hasher.update((stream_label.len() as u64).to_le_bytes());
        hasher.update(stream_label.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        Self {
            root_seed,
            label: stream_label.to_owned(),
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// A fresh child stream labelled `"<label>/<sub>"`. The parent's position
    /// does not influence the child.
    pub fn fork(&self, sub: &str) -> RngStream {
        RngStream::new(self.root_seed, &format!("{}/{}", self.label, sub))
    }

    /// Child stream for the `index`-th block of a parallel job.
    pub fn block(&self, index: usize) -> RngStream {
        self.fork(&format!("block-{index}"))
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Fair ±1 coin.
    pub fn sign(&mut self) -> i8 {
        if self.rng.random::<bool>() {
            1
        } else {
            -1
        }
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Hidden polarization angle, uniform on `[0, π)`.
pub fn sample_uniform_angle(rng: &mut RngStream) -> f64 {
    let theta = rng.uniform() * PI;
    // guard against rounding up to π
    if theta >= PI {
        0.0
    } else {
        theta
    }
}

/// Emissions per parallel block. Part of the reproducibility contract: block
/// `k` always covers trials `k*BLOCK_SIZE ..` and draws from `<label>/block-k`.
pub const BLOCK_SIZE: u64 = 1 << 15;

/// Run `n` trials in fixed-size blocks, in parallel, each block with its own
/// child stream; results are concatenated in block order so the output does not
/// depend on the number of worker threads.
pub fn par_blocks<T, F>(n: u64, rng: &RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>, &mut RngStream) -> Vec<T> + Sync,
{
    use rayon::prelude::*;
    let blocks = n.div_ceil(BLOCK_SIZE);
    let parts: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_SIZE;
            let end = (start + BLOCK_SIZE).min(n);
            let mut stream = rng.block(b as usize);
            f(start..end, &mut stream)
        })
        .collect();
    parts.into_iter().flatten().collect()
}

pub(crate) const NORMALIZATION_TOL: f64 = 1e-12;

/// A finite distribution over outcome identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<T> {
    support: Vec<T>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<T: PartialEq + Clone> DiscreteDistribution<T> {
    /// Validates that weights are non-negative, sum to one within `1e-12`, and
    /// that the support has no duplicates.
    pub fn new(support: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} outcomes but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("bad weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, not 1"
            )));
        }
        for (i, s) in support.iter().enumerate() {
            if support[..i].contains(s) {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate outcome at position {i}"
                )));
            }
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            support,
            weights,
            cumulative,
        })
    }

    /// Normalizes arbitrary non-negative weights before validating.
    pub fn from_unnormalized(support: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}"
            )));
        }
        Self::new(support, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn point_mass(outcome: T) -> Self {
        Self::new(vec![outcome], vec![1.0]).expect("point mass is valid")
    }

    pub fn uniform(support: Vec<T>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.support.iter().zip(self.weights.iter().copied())
    }

    pub fn probability_of(&self, outcome: &T) -> f64 {
        self.iter()
            .find(|(s, _)| *s == outcome)
            .map_or(0.0, |(_, w)| w)
    }

    /// Position in the support of a sampled outcome.
    pub fn sample_index(&self, rng: &mut RngStream) -> usize {
        let u = rng.uniform() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|c| *c <= u);
        // skip zero-weight tails created by rounding
        let mut i = i.min(self.support.len() - 1);
        while self.weights[i] == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }

    pub fn sample(&self, rng: &mut RngStream) -> &T {
        &self.support[self.sample_index(rng)]
    }
}

/// Draw one outcome identifier from `dist`.
pub fn sample_discrete<T: PartialEq + Clone>(
    dist: &DiscreteDistribution<T>,
    rng: &mut RngStream,
) -> T {
    dist.sample(rng).clone()
}
