//! Named, splittable random streams.
//!
//! Every stochastic step draws from `stream(seed, name)`: the stream seed is
//! the SHA-256 digest of the master seed and the step name, so adding a new
//! named step never perturbs the draws of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, name: &str) -> Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    Rng::from_seed(digest)
}

/// Child stream `name/index`, for per-item draws inside a named step.
pub fn substream(seed: u64, name: &str, index: u64) -> Rng {
    stream(seed, &format!("{name}/{index}"))
}
