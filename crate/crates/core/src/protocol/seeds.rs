use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One step of the splitmix64 generator.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent streams of one session.
pub struct SessionRngs {
    pub alice: ChaCha8Rng,
    pub bob: ChaCha8Rng,
    pub channel: ChaCha8Rng,
}

impl SessionRngs {
    pub fn new(session_seed: u64) -> Self {
        Self {
            alice: rng_from(derive_seed(session_seed, 1)),
            bob: rng_from(derive_seed(session_seed, 2)),
            channel: rng_from(derive_seed(session_seed, 3)),
        }
    }
}
