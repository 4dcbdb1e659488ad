//! Seeded randomness shared by the generator, samplers and baselines.
//!
//! All randomness in this crate flows through ChaCha8 streams seeded with
//! a `u64`. Independent streams are derived from one base seed by mixing a
//! stream tag through the SplitMix64 finalizer ([`derive_seed`]). The
//! uniform draws are spelled out here rather than taken from a
//! distributions crate so that the byte-level output of the pipeline is
//! reproducible from this documentation alone:
//!
//! * [`index`]`(n)` is `next_u64() % n`,
//! * [`unit`]`()` is `(next_u64() >> 11) * 2^-53`, uniform on `[0, 1)`,
//! * [`shuffle`] is a Fisher-Yates pass driven by `index`, swapping from
//!   the back of the slice.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Mixes `tag` into `seed` with the SplitMix64 finalizer, naming an
/// independent substream of the base seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = (seed ^ tag).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Opens the ChaCha8 stream named by `(seed, tag)`.
pub fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}

/// Uniform index in `0..n`. `n` must be positive.
pub fn index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    assert!(n > 0, "index() requires a non-empty range");
    (rng.next_u64() % n as u64) as usize
}

/// Uniform draw on `[0, 1)` with 53 random mantissa bits.
pub fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Bernoulli draw: true with probability `p`.
pub fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    unit(rng) < p
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut ChaCha8Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index(rng, i + 1);
        items.swap(i, j);
    }
}
