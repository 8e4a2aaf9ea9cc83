//! Replayable randomness.
//!
//! Every stochastic call in the crate draws from a [`DrawKey`]: a structured
//! value (master seed, stream label, counter tuple) hashed into the 256-bit
//! key of a ChaCha8 stream. Identical keys always produce identical streams,
//! so sampling is a pure function of the key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_WORDS: usize = 6;

#[inline]
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a label (FNV-1a followed by a final mix).
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(h)
}

/// Fold a sequence of words into one well-mixed 64-bit value.
pub fn fold_words(init: u64, words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = splitmix64(init);
    for w in words {
        h = splitmix64(h ^ w.rotate_left(17));
    }
    h
}

/// A structured draw key: `(master_seed, stream label, counters...)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DrawKey {
    seed: u64,
    stream: u64,
    words: [u64; MAX_WORDS],
    len: usize,
}

impl DrawKey {
    pub fn new(seed: u64, stream: &str) -> Self {
        Self { seed, stream: label_hash(stream), words: [0; MAX_WORDS], len: 0 }
    }

    /// Append a counter to the key.
    ///
    /// Panics when more than six counters are pushed; keys in this crate
    /// never need more than four.
    pub fn with(mut self, word: u64) -> Self {
        assert!(self.len < MAX_WORDS, "draw key counter tuple is full");
        self.words[self.len] = word;
        self.len += 1;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn digest(&self) -> u64 {
        fold_words(
            self.seed ^ self.stream,
            self.words[..self.len].iter().copied().chain(std::iter::once(self.len as u64)),
        )
    }

    /// The generator addressed by this key.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut h = self.digest();
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            h = splitmix64(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    /// A derived 64-bit seed, for handing to components that take a plain seed.
    pub fn derive_seed(&self) -> u64 {
        splitmix64(self.digest() ^ 0xA5A5_A5A5_A5A5_A5A5)
    }
}
