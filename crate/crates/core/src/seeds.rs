//! Counter-based seed derivation.
//!
//! A master seed and a row label give a 256-bit ChaCha8 key
//! (`splitmix64` applied to `master`, `row` and a lane index); the trial
//! index selects the ChaCha stream. Every trial therefore owns an
//! independent generator that does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a text label into a row id.
pub fn label_id(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}

/// Seed of row `row` under `master`.
pub fn row_seed(master: u64, row: u64) -> u64 {
    splitmix64(splitmix64(master) ^ row.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Identifies one random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub master: u64,
    pub row: u64,
    pub trial: u64,
}

impl StreamId {
    pub fn new(master: u64, row: u64, trial: u64) -> StreamId {
        StreamId { master, row, trial }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        stream_rng(self.master, self.row, self.trial)
    }

    /// A sibling stream for an auxiliary purpose (e.g. bridge Gaussians).
    pub fn aux(&self, purpose: u64) -> StreamId {
        StreamId { master: self.master, row: row_seed(self.row, purpose ^ 0xA5A5_A5A5), trial: self.trial }
    }
}

pub fn stream_rng(master: u64, row: u64, trial: u64) -> ChaCha8Rng {
    let base = row_seed(master, row);
    let mut key = [0u8; 32];
    for (lane, chunk) in key.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(base ^ (lane as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}
