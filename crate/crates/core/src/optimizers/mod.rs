//! MARINA (per-client or combinatorial compression), DCGD and GD, with the
//! theoretical stepsize rules and per-round bit telemetry.
//!
//! Randomness layout under the run seed: `[FLAGS]` yields the Bern(p)
//! round flags in order, `[ROUNDS, t]` is round `t`'s compression stream and
//! `[OUTPUT]` picks the returned iterate. Changing only the compressor leaves
//! the flag sequence unchanged.

mod run;
mod stepsize;
mod tune;

use std::fmt;

use crate::combinatorial::CombinatorialSpec;
use crate::compressors::CompressorSpec;
use crate::error::{invalid, Error, Result};

pub use run::{dcgd, gd, marina, marina_combinatorial, run};
pub use stepsize::{lemma2_stepsize, stepsize_from_constants, theorem3_stepsize, theoretical_stepsize, theoretical_stepsize_weighted};
pub use tune::{powers_of_two, tune_stepsize, TuningResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Marina,
    MarinaComb,
    Dcgd,
    Gd,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Marina => "marina",
            Method::MarinaComb => "marina_comb",
            Method::Dcgd => "dcgd",
            Method::Gd => "gd",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Compression {
    PerClient(CompressorSpec),
    Combinatorial(CombinatorialSpec),
}

/// When a run stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    /// Exactly `T` steps; the output is uniform over `x⁰..x^{T−1}`.
    Rounds(usize),
    /// Steps while the cumulative bits per client stay within the budget;
    /// the output is uniform over the iterates visited before the last step.
    BitBudget(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub compression: Option<Compression>,
    pub p: f64,
    pub stepsize: f64,
    pub horizon: Horizon,
    pub seed: u64,
    /// Telemetry stride: rows are kept for rounds divisible by it, plus the
    /// first and last round.
    pub record_every: usize,
    /// With a rounds horizon, stop once the pre-drawn output iterate is
    /// reached. The trajectory is then truncated at that round.
    pub stop_at_output: bool,
}

impl RunConfig {
    pub fn new(method: Method, compression: Option<Compression>, p: f64, stepsize: f64, horizon: Horizon, seed: u64) -> Self {
        Self { method, compression, p, stepsize, horizon, seed, record_every: 1, stop_at_output: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid(format!("p = {} must lie in (0, 1]", self.p)));
        }
        if !(self.stepsize > 0.0 && self.stepsize.is_finite()) {
            return Err(invalid(format!("stepsize {} must be positive and finite", self.stepsize)));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be at least 1"));
        }
        match self.horizon {
            Horizon::Rounds(_) => {}
            Horizon::BitBudget(b) if b > 0.0 && b.is_finite() => {}
            Horizon::BitBudget(b) => return Err(invalid(format!("bit budget {b} must be positive"))),
        }
        match (self.method, &self.compression) {
            (Method::Gd, None) => Ok(()),
            (Method::Gd, Some(_)) => Err(invalid("gd takes no compressor")),
            (Method::Marina | Method::Dcgd, Some(Compression::PerClient(_))) => Ok(()),
            (Method::MarinaComb, Some(Compression::Combinatorial(_))) => Ok(()),
            (m, _) => Err(invalid(format!("{m} needs a matching compressor"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoundFlag {
    Init,
    Full,
    Compressed,
}

impl RoundFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RoundFlag::Init => "init",
            RoundFlag::Full => "full",
            RoundFlag::Compressed => "compressed",
        }
    }
}

/// Telemetry after round `round`, describing `x^round`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub round: usize,
    pub flag: RoundFlag,
    /// Client-to-server bits per client so far.
    pub bits_cum: f64,
    pub grad_norm_sq: f64,
    pub fval: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// A non-finite iterate or estimator appeared while computing `x^round`.
    Diverged { round: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub rows: Vec<MetricsRow>,
    pub status: RunStatus,
    /// Steps taken.
    pub rounds: usize,
    pub x_final: Vec<T>,
    pub x_hat: Vec<T>,
    pub x_hat_round: usize,
    pub x_hat_grad_norm_sq: f64,
}

impl<T> Trajectory<T> {
    pub fn check(&self) -> Result<&Self> {
        match self.status {
            RunStatus::Completed => Ok(self),
            RunStatus::Diverged { round } => Err(Error::Divergence { round }),
        }
    }

    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    /// `‖∇f‖²` of the last iterate; infinite after divergence.
    pub fn final_grad_norm_sq(&self) -> f64 {
        if self.diverged() {
            f64::INFINITY
        } else {
            self.rows.last().map_or(f64::INFINITY, |r| r.grad_norm_sq)
        }
    }

    /// Writes `round,flag,bits_cum,grad_norm_sq,fval`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "flag", "bits_cum", "grad_norm_sq", "fval"])?;
        for r in &self.rows {
            w.write_record([
                r.round.to_string(),
                r.flag.as_str().to_string(),
                format!("{:e}", r.bits_cum),
                format!("{:e}", r.grad_norm_sq),
                format!("{:e}", r.fval),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
