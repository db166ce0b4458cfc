//! Seed derivation and per-entity random substreams.
//!
//! Every random draw in the simulator comes from a ChaCha8 generator keyed by
//! the run seed (expanded with `SeedableRng::seed_from_u64`) and positioned on
//! a 64-bit stream id. The stream id packs a purpose tag and up to two entity
//! indices:
//!
//! ```text
//! stream = tag << 56 | a << 28 | b        (a, b < 2^28)
//! ```
//!
//! so node `i` draws from `(TAG_NODE, i, 0)` and edge `(r, t)` from
//! `(tag, r, t)`. Draws for one entity never depend on how many other
//! entities exist or in which order they are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_NODE_POSITION: u8 = 1;
pub const TAG_EDGE_LABEL: u8 = 2;
pub const TAG_MEASUREMENT: u8 = 3;

const INDEX_LIMIT: u64 = 1 << 28;

/// Generator for the `(tag, a, b)` substream of `seed`.
pub fn substream(seed: u64, tag: u8, a: usize, b: usize) -> ChaCha8Rng {
    let (a, b) = (a as u64, b as u64);
    assert!(a < INDEX_LIMIT && b < INDEX_LIMIT, "substream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 56) | (a << 28) | b);
    rng
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Chains the parts through SplitMix64: `h = mix(h ^ part)` starting from a
/// fixed constant. Used for `seed(cell, trial) = derive_seed(&[base, cell, trial])`.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |h, &p| splitmix64(h ^ p))
}
