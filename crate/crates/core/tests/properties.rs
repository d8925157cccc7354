//! Cross-module properties through the public API.

use cqmarina::compressors::{bits_per_client, compress_round, CompressedMessage, CompressorKind, CompressorSpec};
use cqmarina::mselab::heterogeneous_inputs;
use cqmarina::numkit::RandomStream;
use cqmarina::optimizers::{powers_of_two, run, tune_stepsize, Compression, Horizon, Method, RunConfig};
use cqmarina::problems::{generate_quadratic_lpm, Problem};
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = CompressorKind> {
    prop_oneof![
        Just(CompressorKind::Identity),
        Just(CompressorKind::Iq),
        Just(CompressorKind::Cq),
        Just(CompressorKind::Ternary),
        (1u32..5).prop_map(|k| CompressorKind::StdDither { q: cqmarina::compressors::NormIndex::Finite(2.0), k }),
        (1u32..5).prop_map(|k| CompressorKind::NatDither { q: cqmarina::compressors::NormIndex::Infinity, k }),
        Just(CompressorKind::PermK { tau: 2 }),
        Just(CompressorKind::PermKCq { tau: 2 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Wire bits match the accounting; bytes decode to the same vector.
    #[test]
    fn messages_are_bit_exact(kind in kinds(), half_n in 1usize..5, half_d in 1usize..9, seed in any::<u64>()) {
        let (n, d) = (2 * half_n, 2 * half_d);
        let spec = CompressorSpec::new(kind, n, d).unwrap();
        let mut rng = RandomStream::new(seed);
        let inputs: Vec<Vec<f64>> = heterogeneous_inputs(n, d, &mut rng);
        let out = compress_round(&spec, &inputs, &rng).unwrap();
        for (msg, decoded) in out.messages.iter().zip(&out.decoded) {
            let expected = bits_per_client(&spec, true);
            // Dithering a zero vector sends only its header.
            prop_assert!(msg.measured_bits() <= expected);
            let bytes = msg.to_bytes().unwrap();
            let back = CompressedMessage::<f64>::from_bytes(&bytes, msg.support.clone()).unwrap();
            prop_assert_eq!(&back.decode().unwrap(), decoded);
        }
    }

    /// Same seed, same stream; the round output is a pure function of it.
    #[test]
    fn rounds_replay(kind in kinds(), seed in any::<u64>()) {
        let spec = CompressorSpec::new(kind, 4, 8).unwrap();
        let mut rng = RandomStream::new(seed);
        let inputs: Vec<Vec<f64>> = heterogeneous_inputs(4, 8, &mut rng);
        let a = compress_round(&spec, &inputs, &RandomStream::at(seed, &[3])).unwrap();
        let b = compress_round(&spec, &inputs, &RandomStream::at(seed, &[3])).unwrap();
        prop_assert_eq!(a.decoded, b.decoded);
    }
}

#[test]
fn tuning_is_deterministic_per_seed() {
    let q = generate_quadratic_lpm::<f64>(4, 16, 0.001, 0.5, &RandomStream::new(3)).unwrap();
    let spec = CompressorSpec::new(CompressorKind::Cq, 4, 16).unwrap();
    let mults = powers_of_two(-2, 3);
    let pick = |seed| {
        let cfg = RunConfig::new(Method::Marina, Some(Compression::PerClient(spec)), 0.2, 0.5, Horizon::BitBudget(2e4), seed);
        let t = tune_stepsize(&q, &cfg, 2e4, &mults).unwrap();
        (t.multiplier, t.scores)
    };
    assert_eq!(pick(1), pick(1));
    assert_eq!(pick(2), pick(2));
}

#[test]
fn changed_seed_changes_the_trajectory_only() {
    let q = generate_quadratic_lpm::<f64>(4, 16, 0.001, 1.0, &RandomStream::new(3)).unwrap();
    let spec = CompressorSpec::new(CompressorKind::Cq, 4, 16).unwrap();
    let traj = |seed| {
        let cfg = RunConfig::new(Method::Marina, Some(Compression::PerClient(spec)), 0.2, 0.2, Horizon::Rounds(200), seed);
        let mut csv = Vec::new();
        run(&q, &cfg).unwrap().write_csv(&mut csv).unwrap();
        String::from_utf8(csv).unwrap()
    };
    let (a, b) = (traj(1), traj(2));
    assert_ne!(a, b);
    assert_eq!(a.lines().next(), Some("round,flag,bits_cum,grad_norm_sq,fval"));
    assert_eq!(a.lines().next(), b.lines().next());
    assert_eq!(a.lines().count(), b.lines().count());
}

#[test]
fn marina_beats_gd_per_bit_on_a_homogeneous_quadratic() {
    let q = generate_quadratic_lpm::<f64>(16, 64, 0.001, 0.0, &RandomStream::new(5)).unwrap();
    let budget = 3e5;
    let gd = RunConfig::new(Method::Gd, None, 1.0, 1.0, Horizon::BitBudget(budget), 0);
    let spec = CompressorSpec::new(CompressorKind::Cq, 16, 64).unwrap();
    let marina = RunConfig::new(Method::Marina, Some(Compression::PerClient(spec)), 0.05, 0.8, Horizon::BitBudget(budget), 0);
    let g = run(&q, &gd).unwrap();
    let m = run(&q, &marina).unwrap();
    assert!(m.final_grad_norm_sq() < g.final_grad_norm_sq());
    assert!(q.full_gradient(&m.x_final).is_ok());
}
