//! Human-readable list of every random stream an experiment consumes.

use std::fmt::Write;

use cqmarina::numkit::labels;
use cqmarina::numkit::rng::describe_path;

use crate::config::{ExperimentKind, MethodSpec, Resolved, StepChoice};
use crate::experiment::{cells, effective_seeds, MSE_BOUNDS_STREAM, MSE_EXACT_STREAM};

/// Derivation paths of all streams, one block per cell. Output depends only
/// on the config and the seed override.
pub fn seed_report(cfg: &Resolved, seed_override: Option<u64>) -> String {
    let seeds = effective_seeds(cfg, seed_override);
    let mut s = String::new();
    let _ = writeln!(s, "experiment {}", cfg.kind());
    match cfg.kind() {
        ExperimentKind::DnPlane => {
            let _ = writeln!(s, "closed-form analytics; no random streams");
        }
        ExperimentKind::MseSuite => {
            for &seed in &seeds {
                let bounds = describe_path(seed, &[MSE_BOUNDS_STREAM]);
                let exact = describe_path(seed, &[MSE_EXACT_STREAM]);
                let _ = writeln!(s, "seed {seed}");
                let _ = writeln!(s, "  bound suite inputs:  {bounds}/<case>/<input>");
                let _ = writeln!(s, "  bound suite trials:  {bounds}/<case>/<input>/trials/<block>");
                let _ = writeln!(s, "  exact suite trials:  {exact}/<n index>/<grid index>/<block>");
            }
        }
        kind => {
            if kind == ExperimentKind::Logistic {
                let _ = writeln!(s, "problem: dataset shards, no random streams");
            } else {
                for &seed in &seeds {
                    let _ = writeln!(
                        s,
                        "problem seed {seed}: {}/<client>",
                        describe_path(seed, &[labels::PROBLEM])
                    );
                }
            }
            for cell in cells(cfg, &seeds) {
                let seed = cell.seed;
                let _ = writeln!(s, "cell {}", cell.label());
                if cell.method == MethodSpec::Gd {
                    let _ = writeln!(s, "  deterministic method; output: {}", describe_path(seed, &[labels::OUTPUT]));
                    continue;
                }
                let rounds = describe_path(seed, &[labels::ROUNDS]);
                let _ = writeln!(s, "  flags:   {}", describe_path(seed, &[labels::FLAGS]));
                let _ = writeln!(s, "  output:  {}", describe_path(seed, &[labels::OUTPUT]));
                match cell.method {
                    MethodSpec::MarinaComb { .. } => {
                        let _ = writeln!(s, "  sampler: {rounds}/<t>/sampler");
                        let _ = writeln!(s, "  inner:   {rounds}/<t>/client/<i>");
                    }
                    _ => {
                        let _ = writeln!(s, "  shared:  {rounds}/<t>/shared");
                        let _ = writeln!(s, "  blocks:  {rounds}/<t>/blocks");
                        let _ = writeln!(s, "  clients: {rounds}/<t>/client/<i>");
                    }
                }
                if cfg.stepsize == StepChoice::Tune {
                    let _ = writeln!(s, "  tuning:  every multiplier replays these streams");
                }
            }
        }
    }
    s
}
