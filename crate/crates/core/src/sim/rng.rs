//! Seed derivation for the simulator.
//!
//! Every random draw comes from a ChaCha8 stream. The 256-bit key is four
//! consecutive SplitMix64 outputs; the stream id selects what is drawn:
//!
//! ```text
//! key(seed)          SplitMix64 state = seed
//! key(seed, trial)   SplitMix64 state = splitmix64(seed) ^ trial
//! stream             (role << 32) | index
//! ```
//!
//! Codeword `i` of user `k` (k = 1, 2) uses role `k` and index `i`; message
//! and noise draws of a trial use role [`TRIAL_ROLE`] with index 0. Standard
//! normal variates come from `rand_distr::StandardNormal` (ziggurat).
//! Because each codeword and each trial owns its stream, results do not
//! depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TRIAL_ROLE: u64 = 3;

/// One SplitMix64 step: advances `state` and returns the mixed output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha key for `seed`, optionally specialised to one trial.
pub fn derive_key(seed: u64, trial: Option<u64>) -> [u8; 32] {
    let mut state = seed;
    if let Some(t) = trial {
        let mut s = seed;
        state = splitmix64(&mut s) ^ t;
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

pub fn stream_rng(key: [u8; 32], role: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream((role << 32) | (index & 0xFFFF_FFFF));
    rng
}
