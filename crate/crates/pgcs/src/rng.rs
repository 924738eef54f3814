//! Seeded, named randomness substreams.
//!
//! All randomness in this crate (graphs, prior sets, perturbations, signals,
//! measurement matrices, noise, CV folds) is drawn from ChaCha8 streams keyed
//! by a master seed and a substream name. The stream seed is the SHA-256
//! digest of `master_seed_le || name`, so substreams are independent and any
//! experiment is reproducible bit-for-bit from its master seed regardless of
//! evaluation order or parallelism. Gaussian variates use the ziggurat
//! sampler from `rand_distr`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

/// Derive the substream with the given name from a master seed.
pub fn substream(master_seed: u64, name: &str) -> Stream {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(name.as_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// One standard normal variate.
pub fn standard_normal(rng: &mut Stream) -> f64 {
    StandardNormal.sample(rng)
}

/// Draw `k` distinct values from `0..n` uniformly, in draw order.
pub fn sample_distinct(rng: &mut Stream, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot draw {k} distinct values from 0..{n}");
    // Partial Fisher-Yates over an index table.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Uniform permutation of `0..n`.
pub fn permutation(rng: &mut Stream, n: usize) -> Vec<usize> {
    sample_distinct(rng, n, n)
}

use rand::Rng;
