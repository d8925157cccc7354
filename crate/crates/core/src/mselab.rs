//! Monte-Carlo laboratory for the error of distributed mean estimation.
//!
//! Trials are grouped in fixed blocks of [`TRIAL_BLOCK`]; block `k` of a
//! report draws from `[report stream, k]` sequentially, so the result does
//! not depend on the number of worker threads.

use std::io::Write;

use rayon::prelude::*;

use crate::combinatorial::{CombinatorialSpec, WeightedABSpec};
use crate::compressors::{compress_round, cq_scalar, iq_scalar, ABConstants, CompressorSpec};
use crate::error::{invalid, Error, Result};
use crate::numkit::{pairwise_sum, RandomStream};
use crate::scalar::{mean_vector, norm_sq, Scalar};

pub const TRIAL_BLOCK: usize = 1024;
pub const MIN_TRIALS: usize = 1000;

/// A randomized map from `n` client vectors to an estimate of their mean.
pub trait MeanEstimator<T: Scalar>: Sync {
    fn label(&self) -> String;

    /// One draw; consumes randomness from `rng` only.
    fn estimate(&self, inputs: &[Vec<T>], rng: &mut RandomStream) -> Result<Vec<T>>;
}

/// Per-client compressors averaged by the server. Each call derives a fresh
/// round stream labelled by the next word of `rng`.
impl<T: Scalar> MeanEstimator<T> for CompressorSpec {
    fn label(&self) -> String {
        self.kind().to_string()
    }

    fn estimate(&self, inputs: &[Vec<T>], rng: &mut RandomStream) -> Result<Vec<T>> {
        let label = rng.next_u64();
        let round = rng.child(label);
        Ok(compress_round(self, inputs, &round)?.mean())
    }
}

impl<T: Scalar> MeanEstimator<T> for CombinatorialSpec {
    fn label(&self) -> String {
        format!("importance_sampling(tau={},inner={})", self.sampler.tau(), self.inner)
    }

    fn estimate(&self, inputs: &[Vec<T>], rng: &mut RandomStream) -> Result<Vec<T>> {
        let label = rng.next_u64();
        let round = rng.child(label);
        CombinatorialSpec::estimate(self, inputs, &round)
    }
}

/// Scalar two-point quantizers on a fixed interval `[l, r]`; every client
/// holds a one-dimensional input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarQuantizer {
    Independent { l: f64, r: f64 },
    Correlated { l: f64, r: f64 },
}

impl<T: Scalar> MeanEstimator<T> for ScalarQuantizer {
    fn label(&self) -> String {
        match self {
            ScalarQuantizer::Independent { .. } => "iq_scalar".into(),
            ScalarQuantizer::Correlated { .. } => "cq_scalar".into(),
        }
    }

    fn estimate(&self, inputs: &[Vec<T>], rng: &mut RandomStream) -> Result<Vec<T>> {
        if inputs.iter().any(|v| v.len() != 1) {
            return Err(invalid("scalar quantizers take one-dimensional inputs"));
        }
        let values: Vec<T> = inputs.iter().map(|v| v[0]).collect();
        let n = values.len();
        let out = match *self {
            ScalarQuantizer::Independent { l, r } => values
                .iter()
                .map(|&a| iq_scalar(a, T::of(l), T::of(r), rng.uniform()))
                .collect::<Result<Vec<T>>>()?,
            ScalarQuantizer::Correlated { l, r } => {
                let mut perm: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut perm);
                let uniforms: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
                cq_scalar(&values, T::of(l), T::of(r), &perm, &uniforms)?
            }
        };
        let total = out.iter().fold(T::zero(), |acc, &x| acc + x);
        Ok(vec![total / T::of(n as f64)])
    }
}

/// Returns the inputs' mean exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExactMean;

impl<T: Scalar> MeanEstimator<T> for ExactMean {
    fn label(&self) -> String {
        "identity".into()
    }

    fn estimate(&self, inputs: &[Vec<T>], _rng: &mut RandomStream) -> Result<Vec<T>> {
        Ok(mean_vector(inputs))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MSEReport {
    pub scheme: String,
    pub n: usize,
    pub d: usize,
    pub input_id: usize,
    pub input: String,
    pub trials: usize,
    pub mse: f64,
    pub se: f64,
    pub bound: Option<f64>,
    pub exact: Option<f64>,
    /// Largest single-trial squared error.
    pub max_error: f64,
    /// Trials whose squared error was exactly zero.
    pub zero_trials: usize,
}

impl MSEReport {
    /// `mse ≤ bound + k·se`; true when there is no bound.
    pub fn within_bound(&self, k: f64) -> bool {
        self.bound.is_none_or(|b| self.mse <= b + k * self.se)
    }

    /// `|mse − exact| ≤ k·se`. An exact value of zero demands zero error on every trial.
    pub fn matches_exact(&self, k: f64) -> bool {
        match self.exact {
            None => true,
            Some(e) if e == 0.0 => self.max_error == 0.0,
            Some(e) => (self.mse - e).abs() <= k * self.se,
        }
    }

    /// Bound at 3 SE and exact value at 4 SE.
    pub fn pass(&self) -> bool {
        self.within_bound(3.0) && self.matches_exact(4.0)
    }
}

/// Squared errors of `trials` independent estimates, in trial order.
pub fn trial_errors<T: Scalar, E: MeanEstimator<T> + ?Sized>(
    estimator: &E,
    inputs: &[Vec<T>],
    trials: usize,
    rng: &RandomStream,
) -> Result<Vec<f64>> {
    if inputs.is_empty() {
        return Err(invalid("need at least one input vector"));
    }
    let truth: Vec<f64> = mean_vector(inputs).iter().map(|x| x.as_f64()).collect();
    let blocks = trials.div_ceil(TRIAL_BLOCK);
    let per_block: Vec<Result<Vec<f64>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng.child(b as u64);
            let count = TRIAL_BLOCK.min(trials - b * TRIAL_BLOCK);
            let mut errs = Vec::with_capacity(count);
            for _ in 0..count {
                let est = estimator.estimate(inputs, &mut stream)?;
                if est.len() != truth.len() {
                    return Err(invalid("estimate has the wrong dimension"));
                }
                let e: f64 = est.iter().zip(&truth).map(|(x, t)| (x.as_f64() - t).powi(2)).sum();
                errs.push(e);
            }
            Ok(errs)
        })
        .collect();
    let mut out = Vec::with_capacity(trials);
    for b in per_block {
        out.extend(b?);
    }
    Ok(out)
}

/// `E‖est − ā‖²` with its standard error from the sample variance of the
/// per-trial squared errors. Sums are pairwise.
pub fn estimate_mse<T: Scalar, E: MeanEstimator<T> + ?Sized>(
    estimator: &E,
    inputs: &[Vec<T>],
    trials: usize,
    rng: &RandomStream,
) -> Result<MSEReport> {
    if trials < MIN_TRIALS {
        return Err(invalid(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    let errs = trial_errors(estimator, inputs, trials, rng)?;
    let count = errs.len() as f64;
    let mse = pairwise_sum(&errs) / count;
    let centered: Vec<f64> = errs.iter().map(|e| (e - mse).powi(2)).collect();
    let var = pairwise_sum(&centered) / (count - 1.0);
    Ok(MSEReport {
        scheme: estimator.label(),
        n: inputs.len(),
        d: inputs[0].len(),
        input_id: 0,
        input: String::new(),
        trials,
        mse,
        se: (var / count).sqrt(),
        bound: None,
        exact: None,
        max_error: errs.iter().copied().fold(0.0, f64::max),
        zero_trials: errs.iter().filter(|&&e| e == 0.0).count(),
    })
}

/// A declared right-hand side of the AB-inequality.
#[derive(Clone, Debug, PartialEq)]
pub enum DeclaredAB {
    Plain(ABConstants),
    Weighted(WeightedABSpec),
}

impl DeclaredAB {
    /// Plain: `A·(1/n)Σ‖aᵢ‖² − B‖ā‖²`.
    pub fn bound<T: Scalar>(&self, inputs: &[Vec<T>]) -> f64 {
        match self {
            DeclaredAB::Plain(ab) => {
                let n = inputs.len() as f64;
                let sq: f64 = inputs.iter().map(|a| norm_sq(a).as_f64()).sum();
                ab.a * sq / n - ab.b * norm_sq(&mean_vector(inputs)).as_f64()
            }
            DeclaredAB::Weighted(w) => w.bound(inputs),
        }
    }
}

impl From<ABConstants> for DeclaredAB {
    fn from(ab: ABConstants) -> Self {
        DeclaredAB::Plain(ab)
    }
}

impl From<WeightedABSpec> for DeclaredAB {
    fn from(w: WeightedABSpec) -> Self {
        DeclaredAB::Weighted(w)
    }
}

#[derive(Clone, Debug)]
pub struct ABCertificate {
    pub reports: Vec<MSEReport>,
    /// `max (mse − bound − 3·se)`; nonpositive on success.
    pub max_margin: f64,
}

pub const MIN_INPUT_SETS: usize = 20;

/// Checks `mse ≤ bound + 3·se` on every input set. Input set `k` uses the
/// stream `rng.child(k)`.
pub fn estimate_ab<T: Scalar, E: MeanEstimator<T> + ?Sized>(
    estimator: &E,
    declared: &DeclaredAB,
    input_sets: &[Vec<Vec<T>>],
    trials: usize,
    rng: &RandomStream,
) -> Result<ABCertificate> {
    if input_sets.len() < MIN_INPUT_SETS {
        return Err(invalid(format!("need at least {MIN_INPUT_SETS} input sets, got {}", input_sets.len())));
    }
    let mut reports = Vec::with_capacity(input_sets.len());
    let mut max_margin = f64::NEG_INFINITY;
    for (k, inputs) in input_sets.iter().enumerate() {
        let mut r = estimate_mse(estimator, inputs, trials, &rng.child(k as u64))?;
        let bound = declared.bound(inputs);
        r.input_id = k;
        r.bound = Some(bound);
        let margin = r.mse - bound - 3.0 * r.se;
        max_margin = max_margin.max(margin);
        if margin > 0.0 {
            return Err(Error::Certificate { input_id: k, excess: r.mse - bound, bound });
        }
        reports.push(r);
    }
    Ok(ABCertificate { reports, max_margin })
}

/// `(1/n) Σ ‖aᵢ − ā‖²`.
pub fn variance_of_inputs<T: Scalar>(inputs: &[Vec<T>]) -> f64 {
    if inputs.is_empty() {
        return 0.0;
    }
    let mean = mean_vector(inputs);
    let devs: Vec<f64> = inputs
        .iter()
        .map(|a| a.iter().zip(&mean).map(|(&x, &m)| (x - m).as_f64().powi(2)).sum())
        .collect();
    pairwise_sum(&devs) / inputs.len() as f64
}

pub const REPORT_HEADER: [&str; 10] = ["scheme", "n", "d", "input_id", "trials", "mse", "se", "bound", "exact", "pass"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_reports<W: Write>(out: W, reports: &[MSEReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.write_record([
            r.scheme.clone(),
            r.n.to_string(),
            r.d.to_string(),
            r.input_id.to_string(),
            r.trials.to_string(),
            format!("{:e}", r.mse),
            format!("{:e}", r.se),
            opt(r.bound),
            opt(r.exact),
            r.pass().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Vectors in `[-1, 1]ᵈ` drawn from `rng`, scaled by `scale`.
pub fn random_vector<T: Scalar>(d: usize, scale: f64, rng: &mut RandomStream) -> Vec<T> {
    (0..d).map(|_| T::of(scale * (2.0 * rng.uniform() - 1.0))).collect()
}

/// `n` copies of one random vector.
pub fn homogeneous_inputs<T: Scalar>(n: usize, d: usize, rng: &mut RandomStream) -> Vec<Vec<T>> {
    let scale = 0.1 + 10.0 * rng.uniform();
    let a = random_vector(d, scale, rng);
    vec![a; n]
}

/// `n` independent random vectors sharing one scale.
pub fn heterogeneous_inputs<T: Scalar>(n: usize, d: usize, rng: &mut RandomStream) -> Vec<Vec<T>> {
    let scale = 0.1 + 10.0 * rng.uniform();
    (0..n).map(|_| random_vector(d, scale, rng)).collect()
}

/// The `(d, n)` pairs exercised by [`bound_suite`]; input `k` uses pair
/// `k mod 9`, so every listed `d` and `n` appears.
pub const SUITE_DIMS: [usize; 3] = [8, 64, 1024];
pub const SUITE_CLIENTS: [usize; 3] = [4, 16, 128];
pub const SUITE_INPUTS: usize = 20;
/// Block count of the PermK+CQ case; divides every suite `d` and `n`.
pub const SUITE_TAU: usize = 4;

fn suite_pair(k: usize) -> (usize, usize) {
    let pairs: Vec<(usize, usize)> =
        SUITE_DIMS.iter().flat_map(|&d| SUITE_CLIENTS.iter().map(move |&n| (d, n))).collect();
    pairs[k % pairs.len()]
}

fn random_interval(rng: &mut RandomStream) -> (f64, f64, f64) {
    let l = -5.0 + 5.0 * rng.uniform();
    let r = l + 0.1 + 5.0 * rng.uniform();
    let a = l + (r - l) * rng.uniform();
    (l, r, a)
}

/// Random probabilities bounded away from zero.
pub fn random_simplex(n: usize, rng: &mut RandomStream) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.exponential()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

/// Every MSE bound of the quantizer family on homogeneous inputs, each
/// over [`SUITE_INPUTS`] random inputs. Case `c`, input `k` draws its
/// inputs from `rng.child(c).child(k)` and its trials from the child
/// stream `[.., TRIALS]` of that.
pub fn bound_suite(trials: usize, rng: &RandomStream) -> Result<Vec<MSEReport>> {
    use crate::combinatorial::{weighted_ab_of, ImportanceSampler};
    use crate::compressors::{omega, CompressorKind};
    use crate::numkit::labels;

    let mut reports = Vec::new();
    let mut push = |case: &str, k: usize, mut r: MSEReport, bound: f64, input: String| {
        r.scheme = case.to_string();
        r.input_id = k;
        r.bound = Some(bound);
        r.input = input;
        reports.push(r);
    };
    for case in 0..6u64 {
        for k in 0..SUITE_INPUTS {
            let base = rng.child(case).child(k as u64);
            let mut draw = base.clone();
            let trial_rng = base.child(labels::TRIALS);
            let (d, n) = suite_pair(k);
            match case {
                0 | 1 => {
                    let n = SUITE_CLIENTS[k % SUITE_CLIENTS.len()];
                    let (l, r, a) = random_interval(&mut draw);
                    let inputs = vec![vec![a]; n];
                    let w2 = (r - l) * (r - l);
                    let desc = format!("a={a:.6} l={l:.6} r={r:.6}");
                    if case == 0 {
                        let rep = estimate_mse(&ScalarQuantizer::Independent { l, r }, &inputs, trials, &trial_rng)?;
                        push("iq_scalar", k, rep, w2 / (4.0 * n as f64), desc);
                    } else {
                        let rep = estimate_mse(&ScalarQuantizer::Correlated { l, r }, &inputs, trials, &trial_rng)?;
                        push("cq_scalar", k, rep, w2 / (4.0 * (n * n) as f64), desc);
                    }
                }
                2..=4 => {
                    let inputs: Vec<Vec<f64>> = homogeneous_inputs(n, d, &mut draw);
                    let sq = norm_sq(&inputs[0]);
                    let (kind, bound, name) = match case {
                        2 => (CompressorKind::Iq, d as f64 * sq / n as f64, "iq"),
                        3 => (CompressorKind::Cq, d as f64 * sq / (n * n) as f64, "cq"),
                        _ => {
                            let t = SUITE_TAU as f64;
                            (CompressorKind::PermKCq { tau: SUITE_TAU }, d as f64 * t * t * sq / (n * n) as f64, "permk_cq")
                        }
                    };
                    let spec = CompressorSpec::new(kind, n, d)?;
                    let rep = estimate_mse(&spec, &inputs, trials, &trial_rng)?;
                    push(name, k, rep, bound, "homogeneous".into());
                }
                _ => {
                    let inputs: Vec<Vec<f64>> = homogeneous_inputs(n, d, &mut draw);
                    let q = random_simplex(n, &mut draw);
                    let inner = CompressorKind::Ternary;
                    let sampler = ImportanceSampler::new(q, 1)?;
                    let declared = DeclaredAB::Weighted(weighted_ab_of(&sampler, Some(omega(inner, d)?))?);
                    let spec = CombinatorialSpec::new(sampler, inner, None)?;
                    let rep = estimate_mse(&spec, &inputs, trials, &trial_rng)?;
                    push("importance_sampling+ternary", k, rep, declared.bound(&inputs), "homogeneous".into());
                }
            }
        }
    }
    Ok(reports)
}

/// Scalar CQ against its exact law `c_a/n²` on the grid `a = k/20`,
/// `k = 1..19`, plus `a = 0.625`; `[0, 1]` is the range.
pub fn cq_exact_suite(ns: &[usize], trials: usize, rng: &RandomStream) -> Result<Vec<MSEReport>> {
    use crate::compressors::cq_error_constant;
    let mut grid: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    grid.push(0.625);
    let mut reports = Vec::new();
    for (ni, &n) in ns.iter().enumerate() {
        for (k, &a) in grid.iter().enumerate() {
            let inputs = vec![vec![a]; n];
            let est = ScalarQuantizer::Correlated { l: 0.0, r: 1.0 };
            let mut r = estimate_mse(&est, &inputs, trials, &rng.child(ni as u64).child(k as u64))?;
            r.input_id = k;
            r.input = format!("a={a}");
            r.exact = Some(cq_error_constant(n, a) / (n * n) as f64);
            reports.push(r);
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressors::{cq_error_constant, CompressorKind};
    use proptest::prelude::*;

    fn scalar_inputs(n: usize, a: f64) -> Vec<Vec<f64>> {
        vec![vec![a]; n]
    }

    #[test]
    fn identity_has_zero_error() {
        let inputs = heterogeneous_inputs::<f64>(4, 6, &mut RandomStream::new(1));
        let r = estimate_mse(&ExactMean, &inputs, 1000, &RandomStream::new(2)).unwrap();
        assert_eq!(r.mse, 0.0);
        assert_eq!(r.zero_trials, 1000);
        let spec = CompressorSpec::new(CompressorKind::Identity, 4, 6).unwrap();
        assert_eq!(estimate_mse(&spec, &inputs, 1000, &RandomStream::new(2)).unwrap().max_error, 0.0);
    }

    #[test]
    fn cq_scalar_reference_value() {
        let r = estimate_mse(
            &ScalarQuantizer::Correlated { l: 0.0, r: 1.0 },
            &scalar_inputs(4, 0.625),
            200_000,
            &RandomStream::new(3),
        )
        .unwrap();
        assert!((r.mse - 0.015625).abs() <= 3.0 * r.se, "{r:?}");
        assert_eq!(cq_error_constant(4, 0.625) / 16.0, 0.015625);
    }

    #[test]
    fn cq_scalar_integer_points_are_exact() {
        let r = estimate_mse(
            &ScalarQuantizer::Correlated { l: 0.0, r: 1.0 },
            &scalar_inputs(4, 0.75),
            4000,
            &RandomStream::new(4),
        )
        .unwrap();
        assert_eq!(r.max_error, 0.0);
    }

    #[test]
    fn iq_multi_dim_bound() {
        let (n, d) = (8, 16);
        let inputs = homogeneous_inputs::<f64>(n, d, &mut RandomStream::new(5));
        let spec = CompressorSpec::new(CompressorKind::Iq, n, d).unwrap();
        let mut r = estimate_mse(&spec, &inputs, 5000, &RandomStream::new(6)).unwrap();
        r.bound = Some(d as f64 * norm_sq(&inputs[0]) / n as f64);
        assert!(r.within_bound(3.0));
    }

    #[test]
    fn certificate_passes_and_fails() {
        let (n, d) = (4, 8);
        let mut rng = RandomStream::new(7);
        let sets: Vec<Vec<Vec<f64>>> = (0..20).map(|_| homogeneous_inputs(n, d, &mut rng)).collect();
        let spec = CompressorSpec::new(CompressorKind::Cq, n, d).unwrap();
        let ok = DeclaredAB::Plain(ABConstants::new(d as f64 / (n * n) as f64, 0.0).unwrap());
        let cert = estimate_ab(&spec, &ok, &sets, 1000, &RandomStream::new(8)).unwrap();
        assert!(cert.max_margin <= 0.0);
        let tight = DeclaredAB::Plain(ABConstants::new(1e-4, 0.0).unwrap());
        assert!(matches!(
            estimate_ab(&spec, &tight, &sets, 1000, &RandomStream::new(8)),
            Err(Error::Certificate { input_id: 0, .. })
        ));
        assert!(estimate_ab(&spec, &ok, &sets[..5], 1000, &RandomStream::new(8)).is_err());
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance_of_inputs(&[vec![1.0f64, 0.0], vec![-1.0, 0.0]]), 1.0);
        assert_eq!(variance_of_inputs(&[vec![3.0f64, 2.0]]), 0.0);
        assert_eq!(variance_of_inputs(&vec![vec![0.5f64]; 7]), 0.0);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let inputs = heterogeneous_inputs::<f64>(3, 4, &mut RandomStream::new(9));
        let spec = CompressorSpec::new(CompressorKind::Cq, 3, 4).unwrap();
        let a = trial_errors(&spec, &inputs, 3000, &RandomStream::new(10)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| trial_errors(&spec, &inputs, 3000, &RandomStream::new(10)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn se_halves_when_trials_quadruple() {
        let est = ScalarQuantizer::Independent { l: 0.0, r: 1.0 };
        let inputs = scalar_inputs(3, 0.3);
        let a = estimate_mse(&est, &inputs, 20_000, &RandomStream::new(11)).unwrap();
        let b = estimate_mse(&est, &inputs, 80_000, &RandomStream::new(12)).unwrap();
        let ratio = a.se / b.se;
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn csv_schema() {
        let r = estimate_mse(&ExactMean, &scalar_inputs(2, 0.5), 1000, &RandomStream::new(0)).unwrap();
        let mut buf = Vec::new();
        write_reports(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scheme,n,d,input_id,trials,mse,se,bound,exact,pass\n"));
        assert!(text.contains("identity,2,1,0,1000,0e0,0e0,,,true"));
    }

    #[test]
    fn suites_run() {
        assert_eq!(suite_pair(8), (1024, 128));
        assert_eq!(suite_pair(9), (8, 4));
        let exact = cq_exact_suite(&[2, 4], 1000, &RandomStream::new(14)).unwrap();
        assert_eq!(exact.len(), 40);
        assert!(exact.iter().all(|r| r.pass()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn variance_is_shift_invariant(v in proptest::collection::vec(-10.0f64..10.0, 6), shift in -5.0f64..5.0) {
            let a: Vec<Vec<f64>> = v.chunks(2).map(|c| c.to_vec()).collect();
            let b: Vec<Vec<f64>> = a.iter().map(|x| x.iter().map(|y| y + shift).collect()).collect();
            prop_assert!((variance_of_inputs(&a) - variance_of_inputs(&b)).abs() < 1e-9);
        }
    }
}
