//! Seed derivation and per-sensor random substreams.
//!
//! All randomness in a run flows from one `u64` master seed. Repeat `s` gets
//! its own run seed through a SplitMix64 finalizer, and within a run each
//! sensor draws from dedicated ChaCha12 streams (one for regressor noise, one
//! for measurement noise). Streams are selected by index rather than by draw
//! order, so adding sensors or changing one sensor's generator never perturbs
//! another sensor's sequence, and results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derive the run seed for repeat `s` from the master seed.
///
/// SplitMix64 finalizer applied to `seed + (s + 1) * GOLDEN_GAMMA`. The `+ 1`
/// keeps repeat 0 from collapsing onto the raw master seed. Outputs are pinned
/// by golden tests; changing this function changes every simulated trajectory.
pub fn derive_seed(seed: u64, s: u64) -> u64 {
    let mut z = seed.wrapping_add(s.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// What a sensor substream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Regressor = 0,
    Noise = 1,
}

/// ChaCha12 stream for `(run, sensor, purpose)`.
pub fn substream(run_seed: u64, sensor: usize, purpose: Purpose) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(run_seed);
    rng.set_stream(2 * sensor as u64 + purpose as u64);
    rng
}
