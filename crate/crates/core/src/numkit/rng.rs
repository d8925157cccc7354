//! Splittable deterministic randomness.
//!
//! A [`RandomStream`] is identified by a root seed and a derivation path of
//! 64-bit labels. The ChaCha8 key is a hash of `(root_seed, path)`, so a child
//! stream never depends on how many values its parent has already produced.
//! Correlated compressors draw shared values from one child and per-client
//! values from disjoint children; the sharing is visible in the paths.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{invalid, Result};

/// Well-known path labels. Numeric labels below `1 << 32` are indices
/// (round, client, coordinate, trial).
pub mod labels {
    pub const FLAGS: u64 = 0x666c_6167_7300_0000;
    pub const ROUNDS: u64 = 0x726f_756e_6400_0000;
    pub const OUTPUT: u64 = 0x6f75_7470_7574_0000;
    pub const PROBLEM: u64 = 0x7072_6f62_6c65_6d00;
    pub const SHARED: u64 = 0x7368_6172_6564_0000;
    pub const CLIENT: u64 = 0x636c_6965_6e74_0000;
    pub const BLOCKS: u64 = 0x626c_6f63_6b73_0000;
    pub const SAMPLER: u64 = 0x7361_6d70_6c65_7200;
    pub const TRIALS: u64 = 0x7472_6961_6c73_0000;
    pub const INPUTS: u64 = 0x696e_7075_7473_0000;
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_key(root_seed: u64, path: &[u64]) -> [u8; 32] {
    let mut h = mix64(root_seed ^ GOLDEN);
    for (depth, &label) in path.iter().enumerate() {
        let salted = label.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN));
        h = mix64(h.rotate_left(17) ^ mix64(salted));
    }
    h = mix64(h ^ (path.len() as u64));
    let mut key = [0u8; 32];
    let mut state = h;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    key
}

#[derive(Clone, Debug)]
pub struct RandomStream {
    root_seed: u64,
    path: Vec<u64>,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(root_seed: u64) -> Self {
        Self::at(root_seed, &[])
    }

    pub fn at(root_seed: u64, path: &[u64]) -> Self {
        Self {
            root_seed,
            path: path.to_vec(),
            rng: ChaCha8Rng::from_seed(derive_key(root_seed, path)),
        }
    }

    /// Stream at `path ++ [label]`, independent of this stream's position.
    pub fn child(&self, label: u64) -> Self {
        let mut path = self.path.clone();
        path.push(label);
        let rng = ChaCha8Rng::from_seed(derive_key(self.root_seed, &path));
        Self {
            root_seed: self.root_seed,
            path,
            rng,
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Human-readable derivation path, e.g. `seed=7/rounds/12/client/3`.
    pub fn describe(&self) -> String {
        describe_path(self.root_seed, &self.path)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer on `0..n`. Panics if `n == 0`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn exponential(&mut self) -> f64 {
        self.rng.sample(Exp1)
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<E>(&mut self, items: &mut [E]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

pub fn describe_path(root_seed: u64, path: &[u64]) -> String {
    let mut out = format!("seed={root_seed}");
    for &label in path {
        out.push('/');
        out.push_str(&label_name(label));
    }
    out
}

fn label_name(label: u64) -> String {
    use labels::*;
    let name = match label {
        FLAGS => "flags",
        ROUNDS => "rounds",
        OUTPUT => "output",
        PROBLEM => "problem",
        SHARED => "shared",
        CLIENT => "client",
        BLOCKS => "blocks",
        SAMPLER => "sampler",
        TRIALS => "trials",
        INPUTS => "inputs",
        other => return other.to_string(),
    };
    name.to_string()
}

/// Uniformly random permutation of `0..n`.
pub fn sample_permutation(n: usize, rng: &mut RandomStream) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(invalid("permutation size must be positive"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn same_path_same_draws() {
        let mut a = RandomStream::at(42, &[1, 2, 3]);
        let mut b = RandomStream::new(42).child(1).child(2).child(3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn child_ignores_parent_position() {
        let parent = RandomStream::new(9);
        let mut advanced = parent.clone();
        for _ in 0..17 {
            advanced.next_u64();
        }
        assert_eq!(parent.child(5).next_u64(), advanced.child(5).next_u64());
    }

    #[test]
    fn distinct_paths_differ() {
        let root = RandomStream::new(1);
        assert_ne!(root.child(0).next_u64(), root.child(1).next_u64());
        assert_ne!(
            RandomStream::at(1, &[0, 1]).next_u64(),
            RandomStream::at(1, &[1, 0]).next_u64()
        );
        assert_ne!(
            RandomStream::at(1, &[0]).next_u64(),
            RandomStream::at(1, &[0, 0]).next_u64()
        );
    }

    #[test]
    fn permutation_of_one() {
        let mut rng = RandomStream::new(0);
        assert_eq!(sample_permutation(1, &mut rng).unwrap(), vec![0]);
        assert!(sample_permutation(0, &mut rng).is_err());
    }

    fn frequencies(n: usize, draws: usize) -> HashMap<Vec<usize>, usize> {
        let mut rng = RandomStream::new(2024).child(n as u64);
        let mut counts = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sample_permutation(n, &mut rng).unwrap()).or_insert(0) += 1;
        }
        counts
    }

    #[test]
    fn permutations_of_two_are_uniform() {
        let counts = frequencies(2, 100_000);
        assert_eq!(counts.len(), 2);
        for &c in counts.values() {
            assert!((c as f64 / 1e5 - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn permutations_of_three_are_uniform() {
        let counts = frequencies(3, 300_000);
        assert_eq!(counts.len(), 6);
        for &c in counts.values() {
            assert!((c as f64 / 3e5 - 1.0 / 6.0).abs() < 0.01);
        }
    }

    #[test]
    fn describe_names_labels() {
        let s = RandomStream::new(7).child(labels::ROUNDS).child(12);
        assert_eq!(s.describe(), "seed=7/rounds/12");
    }
}
