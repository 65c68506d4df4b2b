//! Seed derivation.
//!
//! Every random draw in the crate comes from one master seed. A child seed
//! for index `i` is `splitmix64(master ⊕ splitmix64(i + φ))` where `φ` is the
//! 64-bit golden-ratio constant; nested labels are folded left to right.
//! Each child seed keys a ChaCha8 generator, and independent components of a
//! multi-dimensional sample use distinct ChaCha streams of that generator.
//! Derivation depends only on `(master, labels)`, never on scheduling, so
//! ensembles produce identical draws whether run serially or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(GOLDEN)))
}

/// Child seed for a path of labels, e.g. `[experiment, realization]`.
pub fn derive_path(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(master, |s, &l| derive_seed(s, l))
}

/// Generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
