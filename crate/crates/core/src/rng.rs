//! Seeded random streams.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` (rand_chacha 0.9)
//! created here. Independent streams for parallel work are derived from a
//! master seed and an index, so serial and parallel runs agree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Domain tags keep streams used for different purposes apart.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Synth = 2,
    Init = 3,
    Shuffle = 4,
    Augment = 5,
    Subsample = 6,
    Shapley = 7,
    RandomStart = 8,
    Background = 9,
}

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for `(seed, purpose, index)`.
pub fn derived(seed: u64, stream: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, stream as u64, index));
    rng.set_stream(stream as u64);
    rng
}

fn mix(a: u64, b: u64, c: u64) -> u64 {
    let mut z = splitmix(a ^ splitmix(b.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    z = splitmix(z ^ c.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derived_streams_are_reproducible_and_distinct() {
        let a: u64 = derived(7, Stream::Shapley, 3).random();
        let b: u64 = derived(7, Stream::Shapley, 3).random();
        let c: u64 = derived(7, Stream::Shapley, 4).random();
        let d: u64 = derived(7, Stream::Shuffle, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
