//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by a
//! [`StreamKey`]. Keys are derived by mixing a parent key with integer
//! labels, so a replication, a basis arm or a single oracle evaluation each
//! own an independent stream whose output does not depend on evaluation
//! order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey(pub u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    /// Child key for `label`. Distinct labels give unrelated keys.
    pub fn derive(self, label: u64) -> Self {
        Self(splitmix64(self.0 ^ splitmix64(label.wrapping_add(0x632b_e59b_d9b4_e019))))
    }

    pub fn derive_all(self, labels: &[u64]) -> Self {
        labels.iter().fold(self, |k, &l| k.derive(l))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Stream labels used across the crate, kept in one place so that two
/// subsystems never share a stream by accident.
pub mod labels {
    pub const TRAINING_X: u64 = 1;
    pub const TRAINING_NOISE: u64 = 2;
    pub const ORACLE: u64 = 3;
    pub const REPLICATION: u64 = 4;
    pub const PROBE: u64 = 5;
    pub const BASIS_ARM: u64 = 6;
}
