//! Counter-based random substreams.
//!
//! A [`SeedStream`] wraps one 64-bit master seed. Every consumer asks for a
//! substream by `(tag, index)`; the pair is hashed into an independent
//! ChaCha8 key, so the numbers a task sees never depend on which thread runs
//! it or in which order tasks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Master seed from which all substreams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    master: u64,
}

// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// FNV-1a over the tag bytes.
fn hash_tag(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// 256-bit key for `(tag, index)`.
    fn key(&self, tag: &str, index: u64) -> [u8; 32] {
        let base = mix64(self.master ^ mix64(hash_tag(tag)));
        let mut seed = [0u8; 32];
        let mut state = mix64(base ^ mix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        for chunk in seed.chunks_exact_mut(8) {
            state = mix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        seed
    }

    /// Independent generator for `(tag, index)`.
    pub fn substream(&self, tag: &str, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key(tag, index))
    }

    /// A derived master seed, e.g. for one repetition of an experiment.
    pub fn child(&self, tag: &str, index: u64) -> SeedStream {
        let k = self.key(tag, index);
        SeedStream::new(u64::from_le_bytes(k[..8].try_into().expect("8 bytes")))
    }
}
