//! The single seeded generator that owns every stochastic choice of a run.
//!
//! ChaCha8 is counter based, so the full generator state is the seed plus the
//! word position. That pair serializes exactly, which is what makes
//! checkpoint/resume reproduce an uninterrupted run.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct RunRng {
    seed: u64,
    inner: ChaCha8Rng,
}

/// Serialized generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub word_pos: u128,
}

impl RunRng {
    pub fn new(seed: u64) -> Self {
        RunRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn state(&self) -> RngState {
        RngState {
            seed: self.seed,
            word_pos: self.inner.get_word_pos(),
        }
    }

    pub fn from_state(state: RngState) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(state.seed);
        inner.set_word_pos(state.word_pos);
        RunRng {
            seed: state.seed,
            inner,
        }
    }
}

impl RngCore for RunRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// Derive an independent sub-seed from a parent seed and a label.
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = parent ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
