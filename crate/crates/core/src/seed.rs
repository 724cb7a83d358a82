//! Deterministic seed streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`] built by
//! [`stream_rng`]. Work is always split into a fixed number of batches whose
//! stream index is the batch index, so results do not depend on how many
//! threads happen to run the batches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer, used to derive child seeds.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the `index`-th item under `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    mix(seed ^ mix(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `total` items into `batches` contiguous chunk sizes (earlier chunks get the remainder).
pub fn batch_sizes(total: u64, batches: u64) -> Vec<u64> {
    let batches = batches.max(1);
    let base = total / batches;
    let extra = total % batches;
    (0..batches)
        .map(|b| base + u64::from(b < extra))
        .collect()
}
