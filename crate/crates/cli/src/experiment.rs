//! Experiment execution: one cell per (noise scale, method, seed), run in
//! parallel, each writing its own files; the summary is written after all
//! cells finish.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use cqmarina::analysis::{self, ComplexityInputs};
use cqmarina::compressors::{ab_constants, bits_per_client, omega, CompressorKind, CompressorSpec};
use cqmarina::mselab;
use cqmarina::numkit::RandomStream;
use cqmarina::optimizers::{
    powers_of_two, run, stepsize_from_constants, theorem3_stepsize, tune_stepsize, Compression, Horizon, Method,
    RunConfig, RunStatus,
};
use cqmarina::problems::{
    generate_quadratic_li, generate_quadratic_lpm, load_libsvm, shard, LogisticProblem, Problem, ProblemInstance,
};
use cqmarina::Trajectory;
use rayon::prelude::*;

use crate::config::{combinatorial_spec, ExperimentKind, MethodSpec, PChoice, Resolved, SamplerChoice, StepChoice};
use crate::error::CliError;

/// Header of `summary.csv`.
pub const SUMMARY_HEADER: [&str; 14] = [
    "noise_scale",
    "method",
    "seed",
    "p",
    "stepsize",
    "multiplier",
    "rounds",
    "bits_cum",
    "final_grad_norm_sq",
    "final_fval",
    "x_hat_round",
    "x_hat_grad_norm_sq",
    "status",
    "file",
];

/// Smoothness constants a cell needs to pick `p` and the stepsize.
#[derive(Clone, Debug)]
struct Constants {
    l_minus: f64,
    l_plus: f64,
    l_pm: f64,
    /// Per-client constants; empty for logistic problems.
    l_i: Vec<f64>,
    l_avg: f64,
}

struct Instance {
    problem: ProblemInstance<f64>,
    constants: Constants,
}

impl Instance {
    fn quadratic(q: cqmarina::QuadraticProblem) -> Result<Self, CliError> {
        let prof = q.smoothness(None)?;
        let constants = Constants {
            l_minus: prof.l_minus,
            l_plus: prof.l_plus,
            l_pm: prof.l_pm,
            l_i: prof.l_i,
            l_avg: prof.l_avg,
        };
        Ok(Self { problem: ProblemInstance::Quadratic(q), constants })
    }

    fn logistic(p: LogisticProblem<f64>) -> Result<Self, CliError> {
        // Every constant is bounded by the smoothness of f itself.
        let l = p.smoothness_upper_bound()?;
        let constants = Constants { l_minus: l, l_plus: l, l_pm: l, l_i: Vec::new(), l_avg: l };
        Ok(Self { problem: ProblemInstance::Logistic(p), constants })
    }
}

/// One (noise scale, method, seed) combination.
#[derive(Clone, Debug)]
pub struct Cell {
    /// Index into `problem.noise_scales`; `None` for logistic runs.
    pub noise: Option<(usize, f64)>,
    pub method: MethodSpec,
    pub seed: u64,
}

impl Cell {
    pub fn label(&self) -> String {
        let noise = match self.noise {
            Some((_, s)) => format!("s{s}_"),
            None => String::new(),
        };
        format!("{noise}{}_seed{}", self.method.slug(), self.seed)
    }
}

/// Cells in output order: noise scale, then method, then seed.
pub fn cells(cfg: &Resolved, seeds: &[u64]) -> Vec<Cell> {
    let noises: Vec<Option<(usize, f64)>> = if cfg.kind() == ExperimentKind::Logistic {
        vec![None]
    } else {
        cfg.raw.problem.noise_scales.iter().copied().enumerate().map(Some).collect()
    };
    let mut out = Vec::new();
    for noise in &noises {
        for method in &cfg.methods {
            for &seed in seeds {
                out.push(Cell { noise: *noise, method: method.clone(), seed });
            }
        }
    }
    out
}

/// Outcome of one cell, as written to the summary.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub cell_label: String,
    pub noise_scale: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub p: f64,
    pub stepsize: f64,
    pub multiplier: Option<f64>,
    pub rounds: usize,
    pub bits_cum: f64,
    pub final_grad_norm_sq: f64,
    pub final_fval: f64,
    pub x_hat_round: usize,
    pub x_hat_grad_norm_sq: f64,
    pub diverged: bool,
    pub file: String,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Replaces the configured seed list.
    pub seed_override: Option<u64>,
}

pub fn effective_seeds(cfg: &Resolved, opts_seed: Option<u64>) -> Vec<u64> {
    match opts_seed {
        Some(s) => vec![s],
        None => cfg.raw.seeds.clone(),
    }
}

/// Everything a finished experiment produced.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub cells: Vec<CellResult>,
}

/// Runs the configured experiment and writes its files under
/// `opts.out_dir`. Diverged final runs keep their outputs and turn into
/// [`CliError::Divergence`] after the summary is written.
pub fn execute(cfg: &Resolved, opts: &RunOptions) -> Result<RunReport, CliError> {
    let seeds = effective_seeds(cfg, opts.seed_override);
    create_dir(&opts.out_dir)?;
    match cfg.kind() {
        ExperimentKind::DnPlane => run_dn_plane(cfg, &opts.out_dir),
        ExperimentKind::MseSuite => run_mse(cfg, &seeds, &opts.out_dir),
        _ => run_optimization(cfg, &seeds, &opts.out_dir),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))
}

fn build_instances(cfg: &Resolved, seeds: &[u64]) -> Result<Vec<((usize, u64), Instance)>, CliError> {
    let pr = &cfg.raw.problem;
    if cfg.kind() == ExperimentKind::Logistic {
        let path = cfg.dataset.as_ref().expect("validated");
        let data = load_libsvm(path, pr.libsvm_dim).map_err(|e| match e {
            cqmarina::Error::Io(io) => CliError::Config(format!("problem.dataset: {}: {io}", path.display())),
            other => CliError::Library(other),
        })?;
        let shards = shard(&data, pr.n)?;
        let problem = LogisticProblem::new(shards, data.d, pr.lambda, None)?;
        let inst = Instance::logistic(problem)?;
        return Ok(vec![((0, 0), inst)]);
    }
    let keys: Vec<(usize, u64)> =
        (0..pr.noise_scales.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    keys.par_iter()
        .map(|&(i, seed)| {
            let s = pr.noise_scales[i];
            let rng = RandomStream::new(seed);
            let q = match cfg.kind() {
                ExperimentKind::Weighted => generate_quadratic_li(pr.n, pr.d, s, &rng)?,
                _ => generate_quadratic_lpm(pr.n, pr.d, pr.lambda, s, &rng)?,
            };
            Ok(((i, seed), Instance::quadratic(q)?))
        })
        .collect()
}

/// Resolved method parameters of one cell.
struct Plan {
    method: Method,
    compression: Option<Compression>,
    p: f64,
    /// Theoretical stepsize, or the GD rate `1/L₋` for GD and DCGD.
    base_stepsize: f64,
}

fn plan(cfg: &Resolved, method: &MethodSpec, inst: &Instance) -> Result<Plan, CliError> {
    let c = &inst.constants;
    let n = inst.problem.n();
    let d = inst.problem.d();
    let pick_p = |inputs: ComplexityInputs| -> Result<f64, CliError> {
        match cfg.p {
            PChoice::Fixed(p) => Ok(p),
            PChoice::Optimal => Ok(analysis::optimal_p(&inputs)?),
        }
    };
    let gd_rate = 1.0 / c.l_minus;
    match method {
        MethodSpec::Gd => Ok(Plan { method: Method::Gd, compression: None, p: 1.0, base_stepsize: gd_rate }),
        MethodSpec::Dcgd(kind) => {
            let spec = CompressorSpec::new(*kind, n, d)?;
            Ok(Plan { method: Method::Dcgd, compression: Some(Compression::PerClient(spec)), p: 1.0, base_stepsize: gd_rate })
        }
        MethodSpec::Marina(kind) => {
            let spec = CompressorSpec::new(*kind, n, d)?;
            let ab = ab_constants(&spec)?;
            let p = pick_p(ComplexityInputs {
                d,
                n,
                delta0: 1.0,
                eps: 1.0,
                l_minus: c.l_minus,
                l_plus: c.l_plus,
                l_pm: c.l_pm,
                a: ab.a,
                b: ab.b,
                alpha: bits_per_client(&spec, true) as f64,
            })?;
            let base = stepsize_from_constants(c.l_minus, c.l_plus, c.l_pm, ab.a, ab.b, p)?;
            Ok(Plan { method: Method::Marina, compression: Some(Compression::PerClient(spec)), p, base_stepsize: base })
        }
        MethodSpec::MarinaComb { sampler, inner } => {
            if c.l_i.is_empty() {
                return Err(CliError::Config("methods.list: marina_comb needs per-client smoothness (quadratic problems)".into()));
            }
            let spec = combinatorial_spec(*sampler, *inner, &c.l_i, cfg.raw.methods.beta)?;
            let w = if *inner == CompressorKind::Identity { 0.0 } else { omega(*inner, d)? };
            let ab = spec.weighted_ab(d)?;
            // Proportional sampling uses L_avg for both weighted constants.
            let (l_plus, l_pm) = match sampler {
                SamplerChoice::Lipschitz => (c.l_avg, c.l_avg),
                SamplerChoice::Uniform => (c.l_plus, c.l_pm),
            };
            let p = pick_p(ComplexityInputs {
                d,
                n,
                delta0: 1.0,
                eps: 1.0,
                l_minus: c.l_minus,
                l_plus,
                l_pm,
                a: ab.a,
                b: ab.b,
                alpha: spec.expected_bits_per_client(d)?,
            })?;
            let base = match sampler {
                SamplerChoice::Lipschitz => theorem3_stepsize(c.l_minus, c.l_avg, w, p)?,
                SamplerChoice::Uniform => stepsize_from_constants(c.l_minus, l_plus, l_pm, ab.a, ab.b, p)?,
            };
            Ok(Plan { method: Method::MarinaComb, compression: Some(Compression::Combinatorial(spec)), p, base_stepsize: base })
        }
    }
}

struct CellOutcome {
    result: CellResult,
    files: Vec<PathBuf>,
}

fn run_cell(cfg: &Resolved, cell: &Cell, inst: &Instance, out: &Path) -> Result<CellOutcome, CliError> {
    let m = &cfg.raw.methods;
    let plan = plan(cfg, &cell.method, inst)?;
    let final_horizon = match m.rounds {
        Some(r) => Horizon::Rounds(r),
        None => Horizon::BitBudget(cfg.raw.bit_budget),
    };
    let mut template = RunConfig::new(plan.method, plan.compression, plan.p, plan.base_stepsize, final_horizon, cell.seed);
    template.record_every = m.record_every;
    let label = cell.label();
    let mut files = Vec::new();

    let (trajectory, multiplier): (Trajectory, Option<f64>) = match cfg.stepsize {
        StepChoice::Theory => (run(&inst.problem, &template)?, None),
        StepChoice::Fixed(g) => {
            template.stepsize = g;
            (run(&inst.problem, &template)?, None)
        }
        StepChoice::Tune => {
            let mults = powers_of_two(m.tune_exponents[0], m.tune_exponents[1]);
            let tuned = tune_stepsize(&inst.problem, &template, cfg.raw.bit_budget, &mults)?;
            let path = out.join("tuning").join(format!("{label}.csv"));
            let mut w = csv::Writer::from_writer(create_file(&path)?);
            w.write_record(["multiplier", "stepsize", "final_grad_norm_sq"]).map_err(cqmarina::Error::from)?;
            for (mult, score) in &tuned.scores {
                w.write_record([format!("{mult:e}"), format!("{:e}", template.stepsize * mult), format!("{score:e}")])
                    .map_err(cqmarina::Error::from)?;
            }
            w.flush().map_err(|e| CliError::io(path.display().to_string(), e))?;
            files.push(path);
            template.stepsize *= tuned.multiplier;
            let traj = match final_horizon {
                Horizon::BitBudget(_) => tuned.trajectory,
                Horizon::Rounds(_) => run(&inst.problem, &template)?,
            };
            (traj, Some(tuned.multiplier))
        }
    };

    let path = out.join("trajectories").join(format!("{label}.csv"));
    trajectory.write_csv(create_file(&path)?)?;
    files.push(path.clone());
    let last = trajectory.last().copied();
    let result = CellResult {
        cell_label: label,
        noise_scale: cell.noise.map(|(_, s)| s),
        method: cell.method.to_string(),
        seed: cell.seed,
        p: template.p,
        stepsize: template.stepsize,
        multiplier,
        rounds: trajectory.rounds,
        bits_cum: last.map_or(0.0, |r| r.bits_cum),
        final_grad_norm_sq: trajectory.final_grad_norm_sq(),
        final_fval: last.map_or(f64::NAN, |r| r.fval),
        x_hat_round: trajectory.x_hat_round,
        x_hat_grad_norm_sq: trajectory.x_hat_grad_norm_sq,
        diverged: matches!(trajectory.status, RunStatus::Diverged { .. }),
        file: format!("trajectories/{}", path.file_name().expect("file").to_string_lossy()),
    };
    Ok(CellOutcome { result, files })
}

fn run_optimization(cfg: &Resolved, seeds: &[u64], out: &Path) -> Result<RunReport, CliError> {
    create_dir(&out.join("trajectories"))?;
    if cfg.stepsize == StepChoice::Tune {
        create_dir(&out.join("tuning"))?;
    }
    let instances = build_instances(cfg, seeds)?;
    let find = |cell: &Cell| -> &Instance {
        let key = match cell.noise {
            Some((i, _)) => (i, cell.seed),
            None => (0, 0),
        };
        &instances.iter().find(|(k, _)| *k == key).expect("instance built for every cell").1
    };
    let cells = cells(cfg, seeds);
    let outcomes: Vec<Result<CellOutcome, CliError>> =
        cells.par_iter().map(|cell| run_cell(cfg, cell, find(cell), out)).collect();

    // Join barrier: only now is the shared summary written.
    let mut report = RunReport::default();
    let mut first_error = None;
    for o in outcomes {
        match o {
            Ok(o) => {
                report.files.extend(o.files);
                report.cells.push(o.result);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let summary = out.join("summary.csv");
    write_summary(&summary, &report.cells)?;
    report.files.push(summary);
    if let Some(e) = first_error {
        return Err(e);
    }
    let diverged: Vec<String> = report.cells.iter().filter(|c| c.diverged).map(|c| c.cell_label.clone()).collect();
    if !diverged.is_empty() {
        return Err(CliError::Divergence(diverged));
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

pub fn write_summary(path: &Path, cells: &[CellResult]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create_file(path)?);
    let lib = |e: csv::Error| CliError::Library(e.into());
    w.write_record(SUMMARY_HEADER).map_err(lib)?;
    for c in cells {
        w.write_record([
            c.noise_scale.map_or(String::new(), |s| s.to_string()),
            c.method.clone(),
            c.seed.to_string(),
            format!("{:e}", c.p),
            format!("{:e}", c.stepsize),
            opt(c.multiplier),
            c.rounds.to_string(),
            format!("{:e}", c.bits_cum),
            format!("{:e}", c.final_grad_norm_sq),
            format!("{:e}", c.final_fval),
            c.x_hat_round.to_string(),
            format!("{:e}", c.x_hat_grad_norm_sq),
            if c.diverged { "diverged" } else { "completed" }.to_string(),
            c.file.clone(),
        ])
        .map_err(lib)?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))
}

fn run_dn_plane(cfg: &Resolved, out: &Path) -> Result<RunReport, CliError> {
    let dp = &cfg.raw.dn_plane;
    let exp = |key: &str, s: &crate::config::Size| -> Result<u32, CliError> { Ok(s.resolve(key)?.trailing_zeros()) };
    let ds = analysis::powers_of_two(exp("dn_plane.dmin", &dp.dmin)?, exp("dn_plane.dmax", &dp.dmax)?);
    let ns = analysis::powers_of_two(exp("dn_plane.nmin", &dp.nmin)?, exp("dn_plane.nmax", &dp.nmax)?);
    let mut report = RunReport::default();
    let mut planes = Vec::new();
    for scheme in &dp.schemes {
        let kind = CompressorKind::parse(scheme)?;
        let plane = analysis::dn_plane(&ds, &ns, kind)?;
        let path = out.join(format!("dn_plane_{scheme}.csv"));
        analysis::write_plane_csv(create_file(&path)?, &plane)?;
        report.files.push(path);
        planes.push((scheme.clone(), plane));
    }
    if let (Some((_, cq)), Some((_, iq))) =
        (planes.iter().find(|(s, _)| s == "cq"), planes.iter().find(|(s, _)| s == "iq"))
    {
        let diff = analysis::plane_difference(cq, iq)?;
        let path = out.join("dn_plane_cq_minus_iq.csv");
        analysis::write_plane_csv(create_file(&path)?, &diff)?;
        report.files.push(path);
    }
    Ok(report)
}

/// Label under the run seed for the bound suite.
pub const MSE_BOUNDS_STREAM: u64 = 1;
/// Label under the run seed for the exact CQ suite.
pub const MSE_EXACT_STREAM: u64 = 2;

fn run_mse(cfg: &Resolved, seeds: &[u64], out: &Path) -> Result<RunReport, CliError> {
    let ms = &cfg.raw.mse;
    let mut report = RunReport::default();
    let mut failures = 0usize;
    for &seed in seeds {
        let root = RandomStream::new(seed);
        let suffix = if seeds.len() > 1 { format!("_seed{seed}") } else { String::new() };
        if ms.suite == "default" || ms.suite == "bounds" {
            let reports = mselab::bound_suite(ms.trials, &root.child(MSE_BOUNDS_STREAM))?;
            failures += reports.iter().filter(|r| !r.pass()).count();
            let path = out.join(format!("mse_bounds{suffix}.csv"));
            mselab::write_reports(create_file(&path)?, &reports)?;
            report.files.push(path);
        }
        if ms.suite == "default" || ms.suite == "cq_exact" {
            let reports = mselab::cq_exact_suite(&ms.exact_clients, ms.trials, &root.child(MSE_EXACT_STREAM))?;
            failures += reports.iter().filter(|r| !r.pass()).count();
            let path = out.join(format!("mse_cq_exact{suffix}.csv"));
            mselab::write_reports(create_file(&path)?, &reports)?;
            report.files.push(path);
        }
    }
    if failures > 0 {
        eprintln!("warning: {failures} MSE report(s) exceed their bound or exact value");
    }
    Ok(report)
}
