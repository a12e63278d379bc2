//! Counter-based random streams.
//!
//! Every replicate (and every excursion inside a replicate) draws from its own
//! ChaCha8 stream whose key is derived by hashing the parent key with a child
//! index. A replicate's numbers therefore depend only on `(master_seed, path)`
//! and never on which worker ran it or in what order.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a parent key with a child index into a new 64-bit key.
pub fn mix(key: u64, index: u64) -> u64 {
    splitmix64(splitmix64(key) ^ splitmix64(index.wrapping_mul(GOLDEN) ^ 0x5851_F42D_4C95_7F2D))
}

/// Identifies one node in the tree of derived random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        StreamKey(master_seed)
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    pub fn child(self, index: u64) -> StreamKey {
        StreamKey(mix(self.0, index))
    }

    pub fn stream(self) -> Stream {
        Stream::seed_from_u64(self.0)
    }
}

/// Exponential variate with the given rate; strictly positive.
#[inline]
pub fn exp_variate<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln() / rate
}

/// Uniform variate on the open interval (0, 1).
#[inline]
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}
