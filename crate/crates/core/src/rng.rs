//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, purpose, index)`: the seed and a purpose
//! tag fix a ChaCha key and the index selects the ChaCha stream, so sample
//! `i` draws the same numbers however work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3)
    })
}

pub fn stream(seed: u64, purpose: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(purpose).rotate_left(17));
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, "bernoulli", 3).gen();
        let b: u64 = stream(7, "bernoulli", 3).gen();
        let c: u64 = stream(7, "bernoulli", 4).gen();
        let d: u64 = stream(7, "field", 3).gen();
        let e: u64 = stream(8, "bernoulli", 3).gen();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
    }
}
