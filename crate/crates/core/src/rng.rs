//! Splittable seeded randomness.
//!
//! Every random draw in the crate comes from a [`SeedTree`] node, so any
//! trial can be replayed from the root seed and its path alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DetRng = ChaCha8Rng;

/// A node in a tree of deterministically derived seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream `index`.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: splitmix64(splitmix64(self.seed) ^ splitmix64(index.wrapping_add(0xD1B5_4A32_D192_ED03))),
        }
    }

    /// Child keyed by a label, for named sub-streams.
    pub fn named(&self, label: &str) -> Self {
        let h = label.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
        });
        self.child(h)
    }

    pub fn rng(&self) -> DetRng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}
