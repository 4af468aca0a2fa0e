//! Deterministic random streams.
//!
//! Every draw in the crate is a pure function of `(seed, tag path, replicate
//! index)`. A [`StreamKey`] is a 64-bit node in a tree of tags; expanding it with
//! SplitMix64 yields a 256-bit ChaCha8 key and the replicate index selects the
//! ChaCha stream. ChaCha is counter-based, so replicate `i` sees the same
//! keystream whichever worker runs it.
//!
//! The pinned algorithm is: `child(tag) = splitmix64(state ^ splitmix64(tag + φ))`
//! with φ = 0x9E3779B97F4A7C15, key words = four successive SplitMix64 outputs
//! seeded by `state`, little-endian, and `ChaCha8Rng::set_stream(index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator handed to every sampler.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A node in the seed tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    state: u64,
}

impl StreamKey {
    pub const fn new(seed: u64) -> Self {
        StreamKey { state: seed }
    }

    pub fn state(self) -> u64 {
        self.state
    }

    /// Derives an independent sub-key for a numeric tag.
    pub fn child(self, tag: u64) -> Self {
        StreamKey {
            state: splitmix64(self.state ^ splitmix64(tag.wrapping_add(GOLDEN))),
        }
    }

    /// Derives a sub-key from a string tag (FNV-1a of the UTF-8 bytes).
    pub fn named(self, tag: &str) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in tag.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.child(h)
    }

    /// The generator for replicate `index` under this key.
    pub fn rng(self, index: u64) -> Rng {
        let mut seed = [0u8; 32];
        let mut s = self.state;
        for chunk in seed.chunks_exact_mut(8) {
            s = s.wrapping_add(GOLDEN);
            chunk.copy_from_slice(&splitmix64(s).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }
}
