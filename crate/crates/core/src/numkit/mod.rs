//! Shared numeric utilities: seeded randomness, bit packing, and symmetric
//! eigenvalue routines.

pub mod bits;
pub mod linalg;
pub mod rng;

pub use bits::{pack_bits, unpack_bits, BitBuffer};
pub use linalg::{symmetric_eigenvalues, SymmetricMatrix, Tridiagonal};
pub use rng::{labels, sample_permutation, RandomStream};

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let (lo, hi) = values.split_at(values.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}
