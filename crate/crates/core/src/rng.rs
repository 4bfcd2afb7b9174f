//! Counter-based random streams so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Vector;

/// Stream `index` of the generator family rooted at `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn standard_normal_vector<R: rand::Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    Vector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(rng)))
}

/// Salt values that keep the stream families of different consumers apart.
pub mod salt {
    pub const SAMPLER: u64 = 0x5A4D_504C_0000_0001;
    pub const MAP: u64 = 0x4D41_5053_0000_0002;
    pub const EXACT: u64 = 0x4558_4143_0000_0003;
    pub const RWM: u64 = 0x5257_4D43_0000_0004;
    pub const DATA: u64 = 0x4441_5441_0000_0005;
    pub const SUBSAMPLE: u64 = 0x5355_4253_0000_0006;
}

pub fn salted(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt;
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
