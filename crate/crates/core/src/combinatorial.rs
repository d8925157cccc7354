//! Combinatorial compressors: jointly unbiased maps from all client vectors
//! to one estimate of their mean.
//!
//! Importance sampling draws `τ` clients `χ_k ~ q` with replacement and
//! returns `(1/τ) Σ_k a_{χ_k} / (n q_{χ_k})`. Optionally the sampled client
//! also compresses its vector with a per-client unbiased scheme.

use crate::compressors::{bits_per_client, compress_round, omega, CompressorKind, CompressorSpec};
use crate::error::{invalid, Error, Result};
use crate::numkit::{labels, RandomStream};
use crate::scalar::{all_finite, Scalar};

const SIMPLEX_TOL: f64 = 1e-12;

fn check_simplex(q: &[f64], what: &str) -> Result<()> {
    if q.is_empty() {
        return Err(invalid(format!("{what} must be nonempty")));
    }
    if q.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(invalid(format!("{what} must be positive and finite")));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(invalid(format!("{what} must sum to 1, got {total}")));
    }
    Ok(())
}

/// Constants of the weighted AB-inequality
/// `E‖S − ā‖² ≤ (A/n) Σ ‖aᵢ‖² / (n wᵢ) − B ‖ā‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedABSpec {
    pub a: f64,
    pub b: f64,
    pub weights: Vec<f64>,
}

impl WeightedABSpec {
    pub fn new(a: f64, b: f64, weights: Vec<f64>) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(invalid("weighted AB constants must be finite and nonnegative"));
        }
        check_simplex(&weights, "weights")?;
        Ok(Self { a, b, weights })
    }

    /// Right-hand side of the inequality for concrete inputs.
    pub fn bound<T: Scalar>(&self, inputs: &[Vec<T>]) -> f64 {
        let n = inputs.len() as f64;
        let weighted: f64 = inputs
            .iter()
            .zip(&self.weights)
            .map(|(a, &w)| crate::scalar::norm_sq(a).as_f64() / (n * w))
            .sum();
        let mean = crate::scalar::mean_vector(inputs);
        self.a * weighted / n - self.b * crate::scalar::norm_sq(&mean).as_f64()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceSampler {
    q: Vec<f64>,
    cumulative: Vec<f64>,
    tau: usize,
}

impl ImportanceSampler {
    pub fn new(q: Vec<f64>, tau: usize) -> Result<Self> {
        check_simplex(&q, "sampling probabilities")?;
        if tau == 0 {
            return Err(invalid("importance sampling needs tau >= 1"));
        }
        let mut acc = 0.0;
        let cumulative = q
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        Ok(Self { q, cumulative, tau })
    }

    pub fn uniform(n: usize, tau: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("importance sampling needs n >= 1"));
        }
        Self::new(vec![1.0 / n as f64; n], tau)
    }

    /// `qᵢ ∝ weightsᵢ`, e.g. per-client smoothness constants.
    pub fn proportional(weights: &[f64], tau: usize) -> Result<Self> {
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(invalid("proportional sampling needs positive finite weights"));
        }
        let total: f64 = weights.iter().sum();
        let mut q: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // Put the rounding residue on the largest entry so the sum is 1 to
        // within one ulp.
        let residue = 1.0 - q.iter().sum::<f64>();
        let top = (0..q.len()).max_by(|&i, &j| q[i].total_cmp(&q[j])).unwrap_or(0);
        if let Some(x) = q.get_mut(top) {
            *x += residue;
        }
        Self::new(q, tau)
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.q
    }

    fn draw(&self, rng: &mut RandomStream) -> usize {
        let u = rng.uniform() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.q.len() - 1)
    }

    /// `τ` client indices drawn with replacement.
    pub fn sample_indices(&self, rng: &mut RandomStream) -> Vec<usize> {
        (0..self.tau).map(|_| self.draw(rng)).collect()
    }
}

fn check_inputs<T: Scalar>(n: usize, inputs: &[Vec<T>]) -> Result<usize> {
    if inputs.len() != n {
        return Err(invalid(format!("sampler is over {n} clients, got {} inputs", inputs.len())));
    }
    let d = inputs[0].len();
    if inputs.iter().any(|a| a.len() != d || !all_finite(a)) {
        return Err(invalid("inputs must be finite vectors of one dimension"));
    }
    Ok(d)
}

/// Plain importance sampling; the sampler indices come from `[SAMPLER]`.
pub fn importance_sample<T: Scalar>(s: &ImportanceSampler, inputs: &[Vec<T>], rng: &RandomStream) -> Result<Vec<T>> {
    estimate(s, None, inputs, rng)
}

/// Importance sampling with τ = 1 where the sampled client compresses its
/// reweighted vector with `inner`. The inner randomness is `[CLIENT, 0]`.
pub fn compose_with_unbiased<T: Scalar>(
    s: &ImportanceSampler,
    inner: CompressorKind,
    inputs: &[Vec<T>],
    rng: &RandomStream,
) -> Result<Vec<T>> {
    if s.tau() != 1 {
        return Err(Error::Unsupported("composition is defined for tau = 1 only".into()));
    }
    estimate(s, Some(inner), inputs, rng)
}

fn estimate<T: Scalar>(
    s: &ImportanceSampler,
    inner: Option<CompressorKind>,
    inputs: &[Vec<T>],
    rng: &RandomStream,
) -> Result<Vec<T>> {
    let d = check_inputs(s.n(), inputs)?;
    let n = s.n() as f64;
    let picks = s.sample_indices(&mut rng.child(labels::SAMPLER));
    let mut out = vec![T::zero(); d];
    let clients = rng.child(labels::CLIENT);
    for (k, &i) in picks.iter().enumerate() {
        let scale = T::of(1.0 / (n * s.q[i] * s.tau as f64));
        let contribution = match inner {
            None | Some(CompressorKind::Identity) => inputs[i].clone(),
            Some(kind) => {
                if !kind.is_per_client() {
                    return Err(Error::Unsupported(format!("{kind} is not a per-client compressor")));
                }
                let spec = CompressorSpec::new(kind, 1, d)?;
                let round = compress_round(&spec, std::slice::from_ref(&inputs[i]), &clients.child(k as u64))?;
                round.decoded.into_iter().next().expect("one client")
            }
        };
        for (o, c) in out.iter_mut().zip(contribution) {
            *o = *o + scale * c;
        }
    }
    Ok(out)
}

/// Weighted AB constants: `(1/τ, 1/τ, q)` for plain sampling and
/// `(ω + 1, 1, q)` when composed (τ = 1) with an inner scheme in `U(ω)`.
pub fn weighted_ab_of(s: &ImportanceSampler, inner_omega: Option<f64>) -> Result<WeightedABSpec> {
    match inner_omega {
        None => {
            let t = 1.0 / s.tau as f64;
            WeightedABSpec::new(t, t, s.q.clone())
        }
        Some(w) if s.tau == 1 => {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid("inner omega must be finite and nonnegative"));
            }
            WeightedABSpec::new(w + 1.0, 1.0, s.q.clone())
        }
        Some(_) => Err(Error::Unsupported("composition is defined for tau = 1 only".into())),
    }
}

/// An importance sampler, optionally composed with a per-client scheme,
/// plus the bit cost model of one compressed round.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinatorialSpec {
    pub sampler: ImportanceSampler,
    pub inner: CompressorKind,
    /// Bits per coordinate sent by a sampled client. `None` uses the inner
    /// scheme's cost divided by `d`.
    pub beta: Option<f64>,
}

impl CombinatorialSpec {
    pub fn new(sampler: ImportanceSampler, inner: CompressorKind, beta: Option<f64>) -> Result<Self> {
        if !inner.is_per_client() {
            return Err(Error::Unsupported(format!("{inner} cannot be composed with sampling")));
        }
        if inner != CompressorKind::Identity && sampler.tau() != 1 {
            return Err(Error::Unsupported("composition is defined for tau = 1 only".into()));
        }
        if let Some(b) = beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(invalid("beta must be positive"));
            }
        }
        Ok(Self { sampler, inner, beta })
    }

    pub fn n(&self) -> usize {
        self.sampler.n()
    }

    pub fn estimate<T: Scalar>(&self, inputs: &[Vec<T>], rng: &RandomStream) -> Result<Vec<T>> {
        let inner = (self.inner != CompressorKind::Identity).then_some(self.inner);
        estimate(&self.sampler, inner, inputs, rng)
    }

    pub fn weighted_ab(&self, d: usize) -> Result<WeightedABSpec> {
        if self.inner == CompressorKind::Identity {
            weighted_ab_of(&self.sampler, None)
        } else {
            weighted_ab_of(&self.sampler, Some(omega(self.inner, d)?))
        }
    }

    pub fn beta(&self, d: usize) -> Result<f64> {
        match self.beta {
            Some(b) => Ok(b),
            None => {
                let spec = CompressorSpec::new(self.inner, 1, d)?;
                Ok(bits_per_client(&spec, true) as f64 / d as f64)
            }
        }
    }

    /// Expected bits per client in a compressed round: `τ·β·d/n`.
    pub fn expected_bits_per_client(&self, d: usize) -> Result<f64> {
        Ok(self.sampler.tau() as f64 * self.beta(d)? * d as f64 / self.n() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{dist_sq, mean_vector};

    /// Exact `E‖S − ā‖²` for τ = 1 by enumerating the sampled client.
    fn exhaustive_mse(q: &[f64], inputs: &[Vec<f64>]) -> f64 {
        let n = inputs.len() as f64;
        let mean = mean_vector(inputs);
        inputs
            .iter()
            .zip(q)
            .map(|(a, &qi)| {
                let s: Vec<f64> = a.iter().map(|x| x / (n * qi)).collect();
                qi * dist_sq(&s, &mean)
            })
            .sum()
    }

    #[test]
    fn two_client_examples() {
        let inputs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((exhaustive_mse(&[0.5, 0.5], &inputs) - 0.5).abs() < 1e-15);
        let skew = exhaustive_mse(&[0.9, 0.1], &inputs);
        assert!((skew - (0.5 * (1.0 / 1.8 + 5.0) - 0.5)).abs() < 1e-12);
        let ab = weighted_ab_of(&ImportanceSampler::new(vec![0.9, 0.1], 1).unwrap(), None).unwrap();
        assert!((ab.bound(&inputs) - skew).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_enumeration() {
        let mut rng = RandomStream::new(77);
        for n in 1..=6 {
            for _ in 0..20 {
                let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
                let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.uniform()).collect();
                let s = ImportanceSampler::proportional(&raw, 1).unwrap();
                let ab = weighted_ab_of(&s, None).unwrap();
                let exact = exhaustive_mse(s.probabilities(), &inputs);
                assert!((ab.bound(&inputs) - exact).abs() <= 1e-12 * (1.0 + exact), "n={n}");
            }
        }
    }

    #[test]
    fn single_client_is_exact() {
        let s = ImportanceSampler::uniform(1, 1).unwrap();
        let a = vec![vec![1.5, -2.0]];
        for seed in 0..10 {
            assert_eq!(importance_sample(&s, &a, &RandomStream::new(seed)).unwrap(), a[0]);
        }
        assert_eq!(weighted_ab_of(&s, None).unwrap().bound(&a), 0.0);
    }

    #[test]
    fn identity_composition_reduces_to_sampling() {
        let s = ImportanceSampler::new(vec![0.3, 0.7], 1).unwrap();
        let a = vec![vec![1.0, 2.0], vec![-1.0, 0.5]];
        for seed in 0..10 {
            let rng = RandomStream::new(seed);
            assert_eq!(
                compose_with_unbiased(&s, CompressorKind::Identity, &a, &rng).unwrap(),
                importance_sample(&s, &a, &rng).unwrap()
            );
        }
    }

    #[test]
    fn lemma_constants() {
        let l = [1.0, 3.0];
        let s = ImportanceSampler::proportional(&l, 1).unwrap();
        let ab = weighted_ab_of(&s, Some(1.0)).unwrap();
        assert_eq!((ab.a, ab.b), (2.0, 1.0));
        assert_eq!(ab.weights, vec![0.25, 0.75]);
        let uni = weighted_ab_of(&ImportanceSampler::uniform(4, 1).unwrap(), None).unwrap();
        assert_eq!((uni.a, uni.b, uni.weights), (1.0, 1.0, vec![0.25; 4]));
        let many = ImportanceSampler::uniform(4, 2).unwrap();
        assert!(weighted_ab_of(&many, Some(1.0)).is_err());
        assert_eq!(weighted_ab_of(&many, None).unwrap().a, 0.5);
    }

    #[test]
    fn sampling_frequencies() {
        let s = ImportanceSampler::new(vec![0.2, 0.5, 0.3], 1).unwrap();
        let mut rng = RandomStream::new(3);
        let mut counts = [0usize; 3];
        for _ in 0..100_000 {
            counts[s.sample_indices(&mut rng)[0]] += 1;
        }
        for (c, q) in counts.iter().zip(s.probabilities()) {
            assert!((*c as f64 / 1e5 - q).abs() < 0.01);
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(ImportanceSampler::new(vec![0.5, 0.6], 1).is_err());
        assert!(ImportanceSampler::new(vec![1.0, 0.0], 1).is_err());
        assert!(ImportanceSampler::new(vec![1.0], 0).is_err());
        assert!(ImportanceSampler::proportional(&[1.0, -1.0], 1).is_err());
    }

    #[test]
    fn bit_model() {
        let s = ImportanceSampler::uniform(8, 1).unwrap();
        let spec = CombinatorialSpec::new(s.clone(), CompressorKind::Iq, None).unwrap();
        assert_eq!(spec.expected_bits_per_client(64).unwrap(), 96.0 / 8.0);
        let plain = CombinatorialSpec::new(s, CompressorKind::Identity, Some(2.0)).unwrap();
        assert_eq!(plain.expected_bits_per_client(64).unwrap(), 16.0);
        assert!(CombinatorialSpec::new(ImportanceSampler::uniform(8, 2).unwrap(), CompressorKind::Iq, None).is_err());
    }
}
