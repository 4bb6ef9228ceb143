//! Seeded random streams.
//!
//! Every component of a run draws from its own ChaCha stream derived from
//! the run seed, so adding draws in one component never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RandomStream = ChaCha8Rng;

pub const STUDENT: u64 = 1;
pub const STAGE_ONE_TEACHER: u64 = 2;
pub const STAGE_TWO_TEACHER: u64 = 3;
pub const SINGLE_STAGE_TEACHER: u64 = STAGE_ONE_TEACHER;

pub(crate) const PROPOSALS: u64 = 0;
pub(crate) const FITS: u64 = 1;

pub fn stream(seed: u64, role: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role);
    rng
}

/// Derives an independent child seed; used where a component owns several streams.
pub fn child_seed(seed: u64, role: u64) -> u64 {
    splitmix64(seed ^ splitmix64(role.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
