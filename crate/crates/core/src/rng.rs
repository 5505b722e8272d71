//! Seed derivation for independent random streams.
//!
//! Every consumer of randomness asks for a stream keyed by
//! `(run seed, index, purpose)`. Keys are expanded into a ChaCha key with a
//! SplitMix64 chain, so streams never overlap across iterations, trials or
//! measurement groups and the mapping does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Shot outcomes of the computational-basis measurement.
    Measure,
    /// Shot outcomes for measurement group `g` of a grouped observable.
    Group(u32),
    /// Pauli-error realizations of a noisy trajectory set.
    Noise,
    /// Pauli-error realizations for measurement group `g`.
    GroupNoise(u32),
    /// Random initial circuit parameters.
    InitialParameters,
    /// Random graph generation.
    Graph,
    /// Monte-Carlo trials of a calibration probe.
    Calibration,
    /// Random target-circuit construction.
    TargetCircuit,
    /// Anything else; the tag is caller-chosen.
    Custom(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Measure => 1,
            Purpose::Group(g) => (2 << 32) | u64::from(g),
            Purpose::Noise => 3 << 32,
            Purpose::InitialParameters => 4 << 32,
            Purpose::Graph => 5 << 32,
            Purpose::Calibration => 6 << 32,
            Purpose::TargetCircuit => 7 << 32,
            Purpose::Custom(c) => (8 << 32) | u64::from(c),
            Purpose::GroupNoise(g) => (9 << 32) | u64::from(g),
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for job `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed ^ index.wrapping_mul(0xA24B_AED4_963E_E407);
    splitmix64(&mut state)
}

/// Returns the stream for `(seed, index, purpose)`.
pub fn stream(seed: u64, index: u64, purpose: Purpose) -> StreamRng {
    let mut state = seed;
    let mut mix = splitmix64(&mut state);
    state ^= index.wrapping_mul(0xD1B5_4A32_D192_ED03) ^ mix;
    mix = splitmix64(&mut state);
    state ^= purpose.tag().wrapping_mul(0xAEF1_7502_108E_F2D9) ^ mix;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    StreamRng::from_seed(key)
}
