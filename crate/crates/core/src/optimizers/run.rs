use super::{Compression, Horizon, Method, MetricsRow, RoundFlag, RunConfig, RunStatus, Trajectory};
use crate::compressors::{bits_per_client, compress_round, CompressorSpec};
use crate::combinatorial::CombinatorialSpec;
use crate::error::{invalid, Result};
use crate::numkit::{labels, RandomStream};
use crate::problems::Problem;
use crate::scalar::{all_finite, mean_vector, norm_sq, Scalar};

enum Step<'a> {
    Gd,
    Dcgd(&'a CompressorSpec),
    Marina(&'a CompressorSpec),
    MarinaComb(&'a CombinatorialSpec),
}

/// Dispatches on `config.method`.
pub fn run<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trajectory<T>> {
    config.validate()?;
    let step = match (config.method, &config.compression) {
        (Method::Gd, None) => Step::Gd,
        (Method::Dcgd, Some(Compression::PerClient(s))) => Step::Dcgd(s),
        (Method::Marina, Some(Compression::PerClient(s))) => Step::Marina(s),
        (Method::MarinaComb, Some(Compression::Combinatorial(s))) => Step::MarinaComb(s),
        _ => unreachable!("validated"),
    };
    match &step {
        Step::Dcgd(s) | Step::Marina(s) => {
            if s.n() != problem.n() || s.d() != problem.d() {
                return Err(invalid("compressor shape does not match the problem"));
            }
        }
        Step::MarinaComb(s) => {
            if s.n() != problem.n() {
                return Err(invalid("sampler size does not match the client count"));
            }
        }
        Step::Gd => {}
    }
    drive(problem, config, step)
}

pub fn marina<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trajectory<T>> {
    expect_method(config, Method::Marina)?;
    run(problem, config)
}

pub fn marina_combinatorial<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trajectory<T>> {
    expect_method(config, Method::MarinaComb)?;
    run(problem, config)
}

pub fn dcgd<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trajectory<T>> {
    expect_method(config, Method::Dcgd)?;
    run(problem, config)
}

pub fn gd<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: &RunConfig) -> Result<Trajectory<T>> {
    expect_method(config, Method::Gd)?;
    run(problem, config)
}

fn expect_method(config: &RunConfig, method: Method) -> Result<()> {
    if config.method == method {
        Ok(())
    } else {
        Err(invalid(format!("expected a {method} config, got {}", config.method)))
    }
}

fn axpy<T: Scalar>(x: &[T], gamma: T, g: &[T]) -> Vec<T> {
    x.iter().zip(g).map(|(&a, &b)| a - gamma * b).collect()
}

struct Recorder<'a, T: Scalar, P: Problem<T> + ?Sized> {
    problem: &'a P,
    every: usize,
    rows: Vec<MetricsRow>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar, P: Problem<T> + ?Sized> Recorder<'_, T, P> {
    fn push(&mut self, round: usize, flag: RoundFlag, bits: f64, x: &[T], grad: &[T]) -> Result<()> {
        self.rows.push(MetricsRow {
            round,
            flag,
            bits_cum: bits,
            grad_norm_sq: norm_sq(grad).as_f64(),
            fval: self.problem.value(x)?.as_f64(),
        });
        Ok(())
    }

    fn maybe(&mut self, round: usize, flag: RoundFlag, bits: f64, x: &[T], grad: &[T]) -> Result<()> {
        if round % self.every == 0 {
            self.push(round, flag, bits, x, grad)?;
        }
        Ok(())
    }
}

/// Compressors send `f32` norm headers, so inputs beyond this `ℓ₁` size
/// cannot be encoded. Iterates or compressor inputs reaching it count as
/// divergence.
const DIVERGENCE_NORM: f64 = 1e30;

fn encodable<T: Scalar>(vectors: &[Vec<T>]) -> bool {
    vectors.iter().all(|v| v.iter().map(|x| x.as_f64().abs()).sum::<f64>() < DIVERGENCE_NORM)
}

fn drive<T: Scalar, P: Problem<T> + ?Sized>(problem: &P, config: &RunConfig, step: Step<'_>) -> Result<Trajectory<T>> {
    let n = problem.n();
    let d = problem.d() as f64;
    let full_cost = 32.0 * d;
    let gamma = T::of(config.stepsize);
    let root = RandomStream::new(config.seed);
    let mut flags = root.child(labels::FLAGS);
    let rounds = root.child(labels::ROUNDS);
    let mut output = root.child(labels::OUTPUT);

    let output_round = match config.horizon {
        Horizon::Rounds(0) => Some(0),
        Horizon::Rounds(t) => Some(output.below(t)),
        Horizon::BitBudget(_) => None,
    };

    let mut x = problem.x0().to_vec();
    let mut grads = problem.client_gradients(&x)?;
    let mut full = mean_vector(&grads);
    // MARINA's estimator; g⁰ = ∇f(x⁰) costs one uncompressed round.
    let mut g = full.clone();
    let mut bits = match step {
        Step::Marina(_) | Step::MarinaComb(_) => full_cost,
        _ => 0.0,
    };

    let mut rec = Recorder { problem, every: config.record_every, rows: Vec::new(), _marker: Default::default() };
    rec.push(0, RoundFlag::Init, bits, &x, &full)?;
    let mut last_flag = RoundFlag::Init;

    let mut x_hat = x.clone();
    let mut x_hat_round = 0;
    let mut x_hat_gn = norm_sq(&full).as_f64();
    let mut status = RunStatus::Completed;
    if !all_finite(&x) || !all_finite(&full) {
        status = RunStatus::Diverged { round: 0 };
    }

    let mut t = 0usize;
    while status == RunStatus::Completed {
        if let Horizon::Rounds(total) = config.horizon {
            if t == total {
                break;
            }
            if Some(t) == output_round {
                x_hat.clone_from(&x);
                x_hat_round = t;
                x_hat_gn = norm_sq(&full).as_f64();
                if config.stop_at_output {
                    break;
                }
            }
        }

        let flag = match step {
            Step::Gd => RoundFlag::Full,
            Step::Dcgd(_) => RoundFlag::Compressed,
            Step::Marina(_) | Step::MarinaComb(_) => {
                if flags.bernoulli(config.p) {
                    RoundFlag::Full
                } else {
                    RoundFlag::Compressed
                }
            }
        };
        if let Horizon::BitBudget(budget) = config.horizon {
            let planned = match (&step, flag) {
                (_, RoundFlag::Full) | (_, RoundFlag::Init) => full_cost,
                (Step::Dcgd(s) | Step::Marina(s), RoundFlag::Compressed) => bits_per_client(s, true) as f64,
                (Step::MarinaComb(s), RoundFlag::Compressed) => s.expected_bits_per_client(problem.d())?,
                (Step::Gd, _) => full_cost,
            };
            if bits + planned > budget {
                break;
            }
            // Reservoir over the iterates a step is taken from.
            if output.uniform() * ((t + 1) as f64) < 1.0 {
                x_hat.clone_from(&x);
                x_hat_round = t;
                x_hat_gn = norm_sq(&full).as_f64();
            }
        }

        let round_rng = rounds.child(t as u64);
        let x_new = match step {
            Step::Gd => {
                bits += full_cost;
                axpy(&x, gamma, &full)
            }
            Step::Dcgd(spec) => {
                if !encodable(&grads) {
                    status = RunStatus::Diverged { round: t + 1 };
                    break;
                }
                let out = compress_round(spec, &grads, &round_rng)?;
                bits += out.total_bits() as f64 / n as f64;
                axpy(&x, gamma, &out.mean())
            }
            Step::Marina(_) | Step::MarinaComb(_) => axpy(&x, gamma, &g),
        };
        t += 1;
        if !all_finite(&x_new) || !encodable(std::slice::from_ref(&x_new)) {
            status = RunStatus::Diverged { round: t };
            break;
        }
        let new_grads = problem.client_gradients(&x_new)?;
        if new_grads.iter().any(|v| !all_finite(v)) {
            status = RunStatus::Diverged { round: t };
            break;
        }
        let new_full = mean_vector(&new_grads);
        match (&step, flag) {
            (Step::Marina(_) | Step::MarinaComb(_), RoundFlag::Full) => {
                g.clone_from(&new_full);
                bits += full_cost;
            }
            (Step::Marina(spec), RoundFlag::Compressed) => {
                let diffs: Vec<Vec<T>> = new_grads
                    .iter()
                    .zip(&grads)
                    .map(|(a, b)| a.iter().zip(b).map(|(&u, &v)| u - v).collect())
                    .collect();
                if !encodable(&diffs) {
                    status = RunStatus::Diverged { round: t };
                    break;
                }
                let out = compress_round(spec, &diffs, &round_rng)?;
                bits += out.total_bits() as f64 / n as f64;
                g.iter_mut().zip(out.mean()).for_each(|(a, b)| *a = *a + b);
            }
            (Step::MarinaComb(spec), RoundFlag::Compressed) => {
                let diffs: Vec<Vec<T>> = new_grads
                    .iter()
                    .zip(&grads)
                    .map(|(a, b)| a.iter().zip(b).map(|(&u, &v)| u - v).collect())
                    .collect();
                let est = spec.estimate(&diffs, &round_rng)?;
                bits += spec.expected_bits_per_client(problem.d())?;
                g.iter_mut().zip(est).for_each(|(a, b)| *a = *a + b);
            }
            _ => {}
        }
        if !all_finite(&g) {
            status = RunStatus::Diverged { round: t };
            break;
        }
        x = x_new;
        grads = new_grads;
        full = new_full;
        last_flag = flag;
        rec.maybe(t, flag, bits, &x, &full)?;
    }

    if rec.rows.last().map(|r| r.round) != Some(t) && status == RunStatus::Completed {
        rec.push(t, last_flag, bits, &x, &full)?;
    }
    Ok(Trajectory {
        rows: rec.rows,
        status,
        rounds: t,
        x_final: x,
        x_hat,
        x_hat_round,
        x_hat_grad_norm_sq: x_hat_gn,
    })
}

#[cfg(test)]
mod tests {
    use super::super::theoretical_stepsize;
    use super::*;
    use crate::combinatorial::ImportanceSampler;
    use crate::compressors::{ab_constants, CompressorKind};
    use crate::problems::{generate_quadratic_lpm, QuadraticProblem};

    fn problem(s: f64) -> QuadraticProblem<f64> {
        generate_quadratic_lpm(4, 8, 0.01, s, &RandomStream::new(1)).unwrap()
    }

    fn cfg(method: Method, kind: Option<CompressorKind>, p: f64, gamma: f64, horizon: Horizon) -> RunConfig {
        let compression = kind.map(|k| Compression::PerClient(CompressorSpec::new(k, 4, 8).unwrap()));
        RunConfig::new(method, compression, p, gamma, horizon, 11)
    }

    #[test]
    fn marina_with_p_one_is_gd() {
        let q = problem(0.5);
        let a = run(&q, &cfg(Method::Marina, Some(CompressorKind::Cq), 1.0, 0.5, Horizon::Rounds(50))).unwrap();
        let b = run(&q, &cfg(Method::Gd, None, 1.0, 0.5, Horizon::Rounds(50))).unwrap();
        assert_eq!(a.x_final, b.x_final);
        for (r, s) in a.rows.iter().zip(&b.rows) {
            assert_eq!(r.grad_norm_sq, s.grad_norm_sq);
        }
        // GD pays for x⁰'s gradient inside the first step.
        assert_eq!(a.rows[50].bits_cum, b.rows[50].bits_cum + 256.0);
    }

    #[test]
    fn identity_compression_tracks_gd() {
        let q = problem(1.0);
        let a = run(&q, &cfg(Method::Marina, Some(CompressorKind::Identity), 0.3, 0.5, Horizon::Rounds(40))).unwrap();
        let b = run(&q, &cfg(Method::Gd, None, 1.0, 0.5, Horizon::Rounds(40))).unwrap();
        for (u, v) in a.x_final.iter().zip(&b.x_final) {
            assert!((u - v).abs() < 1e-12);
        }
        let c = run(&q, &cfg(Method::Dcgd, Some(CompressorKind::Identity), 1.0, 0.5, Horizon::Rounds(40))).unwrap();
        assert_eq!(c.x_final, b.x_final);
    }

    #[test]
    fn bits_follow_flags() {
        let q = problem(0.0);
        let t = run(&q, &cfg(Method::Marina, Some(CompressorKind::Cq), 0.3, 0.5, Horizon::Rounds(100))).unwrap();
        assert_eq!(t.rows[0].bits_cum, 256.0);
        for w in t.rows.windows(2) {
            let inc = w[1].bits_cum - w[0].bits_cum;
            match w[1].flag {
                RoundFlag::Full => assert_eq!(inc, 256.0),
                RoundFlag::Compressed => assert_eq!(inc, 40.0),
                RoundFlag::Init => unreachable!(),
            }
        }
    }

    #[test]
    fn flags_do_not_depend_on_the_compressor() {
        let q = problem(0.5);
        let flags = |k| {
            run(&q, &cfg(Method::Marina, Some(k), 0.2, 0.3, Horizon::Rounds(60)))
                .unwrap()
                .rows
                .iter()
                .map(|r| r.flag)
                .collect::<Vec<_>>()
        };
        assert_eq!(flags(CompressorKind::Cq), flags(CompressorKind::Iq));
        assert_eq!(flags(CompressorKind::Cq), flags(CompressorKind::Identity));
    }

    #[test]
    fn gd_descends() {
        let q = problem(1.0);
        let l = q.smoothness(None).unwrap().l_minus;
        let t = run(&q, &cfg(Method::Gd, None, 1.0, 1.0 / l, Horizon::Rounds(200))).unwrap();
        for w in t.rows.windows(2) {
            assert!(w[1].fval <= w[0].fval + 1e-12);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let q = problem(0.0);
        let t = run(&q, &cfg(Method::Gd, None, 1.0, 1e3, Horizon::Rounds(5000))).unwrap();
        assert!(t.diverged());
        assert!(matches!(t.check(), Err(crate::Error::Divergence { .. })));
        assert!(!t.rows.is_empty());
    }

    #[test]
    fn compressed_divergence_is_reported_not_raised() {
        let q = problem(0.0);
        for (m, p) in [(Method::Marina, 0.1), (Method::Dcgd, 1.0)] {
            let t = run(&q, &cfg(m, Some(CompressorKind::Cq), p, 1e3, Horizon::Rounds(5000))).unwrap();
            assert!(t.diverged(), "{m}");
        }
    }

    #[test]
    fn budget_stops_before_overspending() {
        let q = problem(0.0);
        let t = run(&q, &cfg(Method::Marina, Some(CompressorKind::Iq), 0.1, 0.5, Horizon::BitBudget(5000.0))).unwrap();
        let last = t.last().unwrap();
        assert!(last.bits_cum <= 5000.0);
        assert!(last.bits_cum + 256.0 > 5000.0 || last.bits_cum + 40.0 > 5000.0);
        assert!(t.x_hat_round < t.rounds);
    }

    #[test]
    fn output_round_and_early_stop() {
        let q = problem(0.0);
        let mut c = cfg(Method::Marina, Some(CompressorKind::Cq), 0.2, 0.5, Horizon::Rounds(300));
        let full = run(&q, &c).unwrap();
        c.stop_at_output = true;
        let short = run(&q, &c).unwrap();
        assert_eq!(short.x_hat, full.x_hat);
        assert_eq!(short.x_hat_round, full.x_hat_round);
        assert_eq!(short.rounds, full.x_hat_round);
        assert!(full.x_hat_round < 300);
    }

    #[test]
    fn record_stride_keeps_first_and_last() {
        let q = problem(0.0);
        let mut c = cfg(Method::Gd, None, 1.0, 0.5, Horizon::Rounds(25));
        c.record_every = 10;
        let t = run(&q, &c).unwrap();
        let rounds: Vec<usize> = t.rows.iter().map(|r| r.round).collect();
        assert_eq!(rounds, vec![0, 10, 20, 25]);
    }

    #[test]
    fn comb_with_single_client_is_gd() {
        let q: QuadraticProblem<f64> = generate_quadratic_lpm(1, 6, 0.01, 0.0, &RandomStream::new(2)).unwrap();
        let spec = CombinatorialSpec::new(ImportanceSampler::uniform(1, 1).unwrap(), CompressorKind::Identity, None).unwrap();
        let c = RunConfig::new(Method::MarinaComb, Some(Compression::Combinatorial(spec)), 0.2, 0.5, Horizon::Rounds(30), 3);
        let a = run(&q, &c).unwrap();
        let b = run(&q, &RunConfig::new(Method::Gd, None, 1.0, 0.5, Horizon::Rounds(30), 3)).unwrap();
        for (u, v) in a.x_final.iter().zip(&b.x_final) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn theoretical_stepsize_converges() {
        let q = problem(0.0);
        let prof = q.smoothness(None).unwrap();
        let spec = CompressorSpec::new(CompressorKind::Cq, 4, 8).unwrap();
        let gamma = theoretical_stepsize(&prof, &ab_constants(&spec).unwrap(), 0.2).unwrap();
        let t = run(&q, &RunConfig::new(Method::Marina, Some(Compression::PerClient(spec)), 0.2, gamma, Horizon::Rounds(3000), 5)).unwrap();
        assert!(t.final_grad_norm_sq() < 1e-8 * t.rows[0].grad_norm_sq);
    }

    #[test]
    fn rejects_mismatched_configs() {
        let q = problem(0.0);
        assert!(run(&q, &cfg(Method::Gd, Some(CompressorKind::Cq), 1.0, 0.5, Horizon::Rounds(1))).is_err());
        assert!(run(&q, &cfg(Method::Marina, None, 0.5, 0.5, Horizon::Rounds(1))).is_err());
        assert!(run(&q, &cfg(Method::Marina, Some(CompressorKind::Cq), 0.0, 0.5, Horizon::Rounds(1))).is_err());
        assert!(gd(&q, &cfg(Method::Marina, Some(CompressorKind::Cq), 0.5, 0.5, Horizon::Rounds(1))).is_err());
        let wrong = Compression::PerClient(CompressorSpec::new(CompressorKind::Cq, 3, 8).unwrap());
        assert!(run(&q, &RunConfig::new(Method::Marina, Some(wrong), 0.5, 0.5, Horizon::Rounds(1), 0)).is_err());
    }
}
