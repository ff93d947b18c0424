//! Seeded random streams.
//!
//! All randomness goes through ChaCha8 streams so that results are portable
//! and reproducible. Child seeds are derived by hashing a label together
//! with integer keys.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from a label and a list of integer keys.
pub fn derive_seed(label: &str, keys: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(label.as_bytes());
    for key in keys {
        hasher.update(key.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seed derived from the bit patterns of a coordinate vector.
pub fn seed_from_coords(label: &str, coords: &DVector<f64>) -> u64 {
    let keys: Vec<u64> = coords.iter().map(|v| v.to_bits()).collect();
    derive_seed(label, &keys)
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Gaussian matrix filled column by column.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Uniform point on the unit sphere of `R^n` (normalized Gaussian).
pub fn unit_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let g = gaussian_vector(rng, n);
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}
