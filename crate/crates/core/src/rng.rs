//! All randomness in the crate flows through one counter-based generator:
//! a ChaCha stream seeded by a master seed, with independent streams derived
//! from a counter. Two runs with the same `(seed, stream)` produce identical
//! draws regardless of thread schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A deterministic generator for stream `stream` under `master_seed`.
pub fn seeded(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| seeded(7, 3).random()).collect();
        assert!(a.iter().all(|v| *v == a[0]));
        let x: u64 = seeded(7, 3).random();
        let y: u64 = seeded(7, 4).random();
        assert_ne!(x, y);
    }
}
