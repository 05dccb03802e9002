//! Deterministic per-replication random number generators.
//!
//! Replication `r` of a campaign with master seed `s` draws from a ChaCha8
//! stream keyed by `splitmix64(s ^ splitmix64(role ^ splitmix64(r)))`. The
//! mapping depends only on `(s, role, r)`, so results do not depend on how
//! replications are distributed across workers or machines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent purposes a replication generator can serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamRole {
    ErrorProbability = 1,
    SampleSize = 2,
    Overshoot = 3,
    KlEstimate = 4,
    Generic = 5,
}

/// The splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(seed: u64, role: StreamRole, rep: u64) -> u64 {
    splitmix64(seed ^ splitmix64((role as u64) ^ splitmix64(rep)))
}

pub fn replication_rng(seed: u64, role: StreamRole, rep: u64) -> SimRng {
    SimRng::seed_from_u64(replication_seed(seed, role, rep))
}
