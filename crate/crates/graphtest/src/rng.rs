//! Seeding scheme: a master seed plus a stream id, with child streams derived
//! by counter so parallel replicates draw identical values regardless of
//! scheduling order.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

/// Master seed plus stream id identifying one deterministic draw sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        RngSeed { seed, stream }
    }

    /// Derive an independent child stream. Tags are mixed through splitmix64
    /// so nested derivations (per size, per replicate, ...) do not collide.
    pub fn child(&self, tag: u64) -> Self {
        RngSeed {
            seed: self.seed,
            stream: splitmix64(self.stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ splitmix64(tag)),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    #[test]
    fn same_seed_same_stream_reproduces() {
        let a: Vec<f64> = RngSeed::new(7).rng().random_iter().take(10).collect();
        let b: Vec<f64> = RngSeed::new(7).rng().random_iter().take(10).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn different_streams_differ() {
        let a: f64 = RngSeed::with_stream(7, 0).rng().random();
        let b: f64 = RngSeed::with_stream(7, 1).rng().random();
        assert_ne!(a, b);
    }

    #[test]
    fn child_streams_are_order_independent() {
        let base = RngSeed::new(42);
        let direct: f64 = base.child(5).rng().random();
        // deriving other children first must not affect child(5)
        let _ = base.child(0);
        let _ = base.child(1);
        let again: f64 = base.child(5).rng().random();
        assert_eq!(direct, again);
    }

    #[test]
    fn child_streams_distinct_for_nearby_tags() {
        let base = RngSeed::new(42);
        let streams: Vec<u64> = (0..1000).map(|t| base.child(t).stream).collect();
        let mut dedup = streams.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), streams.len());
    }
}
