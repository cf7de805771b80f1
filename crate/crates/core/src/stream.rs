//! Deterministic, splittable random streams.
//!
//! Every replication draws from its own ChaCha20 stream. The 256-bit key is
//! derived from `(master_seed, cell_key)` with SplitMix64 and the replication
//! index selects the ChaCha stream id, so streams never overlap and results do
//! not depend on the order in which replications are executed.
//!
//! Gaussian draws use `rand_distr::StandardNormal` (ziggurat).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The generator type handed to simulation code.
pub type Stream = ChaCha20Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash, used to turn a cell description into a key.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Stream for replication `rep` of the cell identified by `cell_key`.
pub fn replication_stream(master_seed: u64, cell_key: u64, rep: u64) -> Stream {
    let mut state = master_seed ^ cell_key.rotate_left(17);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha20Rng::from_seed(seed);
    rng.set_stream(rep);
    rng
}

/// A single stream from a plain seed, for one-off simulations.
pub fn seeded(seed: u64) -> Stream {
    replication_stream(seed, 0, 0)
}
