//! Counter-based randomness.
//!
//! Nothing here keeps generator state: a uniform variate is the image of a
//! tuple of 64-bit words under a keyed mixing function. The mixer is the
//! SplitMix64 finalizer applied once per absorbed word (plus once to whiten
//! the word itself). The resulting 53 high bits are mapped to `[0, 1)`.
//!
//! Documented layout so traces can be reproduced elsewhere:
//!
//! ```text
//! field_key(seed, tag)  = mix(seed ^ mix(tag + 0x632b_e59b_d9b4_e019))
//! absorb(h, w)          = mix(h ^ mix(w + 0x9e37_79b9_7f4a_7c15))
//! weight(seed, tag, e)  = unit(absorb(field_key(seed, tag), e.key))
//! unit(h)               = (h >> 11) * 2^-53
//! ```

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const TAG_SALT: u64 = 0x632b_e59b_d9b4_e019;
const REPLICA_SALT: u64 = 0xd1b5_4a32_d192_ed03;

/// SplitMix64 output function.
#[inline]
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
pub const fn absorb(h: u64, w: u64) -> u64 {
    mix64(h ^ mix64(w.wrapping_add(GOLDEN)))
}

/// Maps the high 53 bits of `h` to `[0, 1)`.
#[inline]
pub fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed of replica `index` under base seed `seed`.
#[inline]
pub fn replica_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(REPLICA_SALT)))
}

/// Streaming hasher over 64-bit words, used for canonical keys.
#[derive(Debug, Clone, Copy)]
pub struct KeyHasher(u64);

impl KeyHasher {
    pub const fn new(domain: u64) -> Self {
        KeyHasher(mix64(domain ^ GOLDEN))
    }

    #[inline]
    pub fn write(&mut self, w: u64) {
        self.0 = absorb(self.0, w);
    }

    #[inline]
    pub fn write_i64(&mut self, w: i64) {
        self.write(w as u64);
    }

    #[inline]
    pub fn finish(self) -> u64 {
        self.0
    }
}

/// Separates independent randomness streams drawn from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StreamTag(pub u8);

impl StreamTag {
    /// Percolation edge weights.
    pub const PERCOLATION: StreamTag = StreamTag(0);
    /// Frog holding times.
    pub const FROG_CLOCK: StreamTag = StreamTag(1);
    /// Frog jump directions.
    pub const FROG_DIRECTION: StreamTag = StreamTag(2);
    /// Auxiliary walks and samples that are not tied to the graph.
    pub const AUXILIARY: StreamTag = StreamTag(3);
}

impl std::fmt::Display for StreamTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Deterministic map from keys to uniform variates for one `(seed, stream)`.
///
/// With the [`StreamTag::PERCOLATION`] tag this is the field of edge weights
/// `omega_e`; an edge is p-open iff its weight is at most `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "FieldHeader", into = "FieldHeader")]
pub struct WeightField {
    pub seed: u64,
    pub stream: StreamTag,
    key: u64,
}

/// Serialized form of a field: the key is recomputed on load.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct FieldHeader {
    seed: u64,
    stream: StreamTag,
}

impl From<FieldHeader> for WeightField {
    fn from(h: FieldHeader) -> Self {
        WeightField::new(h.seed, h.stream)
    }
}

impl From<WeightField> for FieldHeader {
    fn from(f: WeightField) -> Self {
        FieldHeader { seed: f.seed, stream: f.stream }
    }
}

impl WeightField {
    pub fn new(seed: u64, stream: StreamTag) -> Self {
        let key = mix64(seed ^ mix64((stream.0 as u64).wrapping_add(TAG_SALT)));
        WeightField { seed, stream, key }
    }

    pub fn percolation(seed: u64) -> Self {
        Self::new(seed, StreamTag::PERCOLATION)
    }

    /// The same seed under another stream tag.
    pub fn with_stream(&self, stream: StreamTag) -> Self {
        Self::new(self.seed, stream)
    }

    /// Field for replica `index`, derived from this field's seed.
    pub fn replica(&self, index: u64) -> Self {
        Self::new(replica_seed(self.seed, index), self.stream)
    }

    /// Uniform weight of the edge with canonical key `edge`, in `[0, 1)`.
    #[inline]
    pub fn weight(&self, edge: crate::substrate::EdgeKey) -> f64 {
        unit(absorb(self.key, edge.0))
    }

    /// Raw 64 bits for a tuple of words.
    #[inline]
    pub fn bits(&self, words: &[u64]) -> u64 {
        let mut h = self.key;
        for &w in words {
            h = absorb(h, w);
        }
        h
    }

    /// Uniform variate in `[0, 1)` for a tuple of words.
    #[inline]
    pub fn uniform(&self, words: &[u64]) -> f64 {
        unit(self.bits(words))
    }

    /// Unit exponential by inversion of a uniform variate.
    #[inline]
    pub fn exponential(&self, words: &[u64]) -> f64 {
        -(1.0 - self.uniform(words)).ln()
    }

    /// Sequential reader over the counter stream rooted at `words`.
    pub fn reader(&self, words: &[u64]) -> CounterReader {
        CounterReader { base: self.bits(words), counter: 0 }
    }
}

impl Default for WeightField {
    fn default() -> Self {
        WeightField::percolation(0)
    }
}

/// Reads successive 64-bit blocks `absorb(base, 0), absorb(base, 1), ...`.
#[derive(Debug, Clone)]
pub struct CounterReader {
    base: u64,
    counter: u64,
}

impl CounterReader {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = absorb(self.base, self.counter);
        self.counter += 1;
        out
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit(self.next_u64())
    }

    /// Number of blocks consumed so far.
    pub fn position(&self) -> u64 {
        self.counter
    }
}
