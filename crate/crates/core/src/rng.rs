//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from the
//! master seed, a domain tag and an index (usually a sensor id). Streams
//! never share state, so the order in which sensors are processed cannot
//! change what any of them draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a stream is used for. The discriminant is mixed into the seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Layout = 1,
    Data = 2,
    Init = 3,
    Train = 4,
    Link = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(master: u64, domain: Domain, index: u64) -> SimRng {
    let seed = splitmix64(splitmix64(splitmix64(master) ^ domain as u64) ^ index);
    SimRng::seed_from_u64(seed)
}
