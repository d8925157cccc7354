use rayon::prelude::*;

use super::{run, Horizon, RunConfig, Trajectory};
use crate::error::{invalid, Result};
use crate::problems::Problem;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct TuningResult<T> {
    pub multiplier: f64,
    pub trajectory: Trajectory<T>,
    /// `(multiplier, final ‖∇f‖²)` for every candidate; infinite if diverged.
    pub scores: Vec<(f64, f64)>,
    pub all_diverged: bool,
}

/// Runs `template` with stepsize `template.stepsize · m` for every
/// multiplier up to the bit budget and keeps the smallest final `‖∇f‖²`.
/// Diverged runs rank last; if all diverge the smallest multiplier is kept.
pub fn tune_stepsize<T: Scalar, P: Problem<T> + ?Sized>(
    problem: &P,
    template: &RunConfig,
    bit_budget: f64,
    multipliers: &[f64],
) -> Result<TuningResult<T>> {
    if multipliers.is_empty() || multipliers.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(invalid("multipliers must be a nonempty set of positive reals"));
    }
    let runs: Vec<Result<(f64, Trajectory<T>)>> = multipliers
        .par_iter()
        .map(|&m| {
            let mut cfg = template.clone();
            cfg.stepsize = template.stepsize * m;
            cfg.horizon = Horizon::BitBudget(bit_budget);
            run(problem, &cfg).map(|t| (m, t))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let scores: Vec<(f64, f64)> = runs.iter().map(|(m, t)| (*m, t.final_grad_norm_sq())).collect();
    let all_diverged = scores.iter().all(|(_, s)| !s.is_finite());
    let best = if all_diverged {
        (0..runs.len()).min_by(|&i, &j| runs[i].0.total_cmp(&runs[j].0))
    } else {
        // Ties go to the smaller multiplier.
        (0..runs.len()).min_by(|&i, &j| scores[i].1.total_cmp(&scores[j].1).then(runs[i].0.total_cmp(&runs[j].0)))
    }
    .expect("nonempty");
    let (multiplier, trajectory) = runs.into_iter().nth(best).expect("index in range");
    Ok(TuningResult { multiplier, trajectory, scores, all_diverged })
}

/// `{2^lo, …, 2^hi}`.
pub fn powers_of_two(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k)).collect()
}
