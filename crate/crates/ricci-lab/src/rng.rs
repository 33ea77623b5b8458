//! Counter-based random streams.
//!
//! Every path owns a ChaCha8 stream keyed by the master seed and a stream
//! tag, and selected by its path index, so a path's increments never depend
//! on which worker draws it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{Vector, CAP};

/// Stream tags. Branches of one path use `BRANCH + node`, second branches
/// `BRANCH2 + node`.
pub const MAIN: u64 = 0;
pub const BRANCH: u64 = 1 << 16;
pub const BRANCH2: u64 = 2 << 16;
/// Stream for sampling scan points and directions.
pub const SAMPLE: u64 = 3 << 16;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `(seed, path_index, tag)`.
pub fn path_rng(seed: u64, path_index: u64, tag: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut s = splitmix64(seed ^ splitmix64(tag.wrapping_add(0x5EED)));
    for chunk in key.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path_index);
    rng
}

/// `d` independent standard normals, zero padded.
#[inline]
pub fn normals<R: rand::Rng>(rng: &mut R, d: usize) -> Vector {
    let mut v = Vector::zeros();
    for i in 0..d.min(CAP) {
        v[i] = StandardNormal.sample(rng);
    }
    v
}
