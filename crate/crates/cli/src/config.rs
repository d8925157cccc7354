//! TOML experiment configuration.
//!
//! Unknown keys are rejected and every error names the offending key path,
//! e.g. `methods.p`.

use std::fmt;
use std::path::{Path, PathBuf};

use cqmarina::combinatorial::{CombinatorialSpec, ImportanceSampler};
use cqmarina::compressors::CompressorKind;
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_BIT_BUDGET: f64 = 4e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    QuadraticLpm,
    Logistic,
    PermkCq,
    DnPlane,
    Weighted,
    MseSuite,
}

impl ExperimentKind {
    /// Kinds that run optimizers and produce trajectories.
    pub fn is_optimization(self) -> bool {
        matches!(self, Self::QuadraticLpm | Self::Logistic | Self::PermkCq | Self::Weighted)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::QuadraticLpm => "quadratic_lpm",
            Self::Logistic => "logistic",
            Self::PermkCq => "permk_cq",
            Self::DnPlane => "dn_plane",
            Self::Weighted => "weighted",
            Self::MseSuite => "mse_suite",
        })
    }
}

/// A number, or a keyword such as `"optimal"` or `"tune"`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NumberOrWord {
    Number(f64),
    Word(String),
}

/// An integer, or `"2^k"`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Size {
    Int(usize),
    Text(String),
}

impl Size {
    pub fn resolve(&self, key: &str) -> Result<usize, CliError> {
        match self {
            Size::Int(v) => Ok(*v),
            Size::Text(s) => parse_size(s).ok_or_else(|| CliError::config(key, format!("{s:?} is neither an integer nor 2^k"))),
        }
    }
}

/// Parses `1024` or `2^10`.
pub fn parse_size(s: &str) -> Option<usize> {
    let s = s.trim();
    match s.split_once('^') {
        Some((base, exp)) => {
            let base: usize = base.trim().parse().ok()?;
            let exp: u32 = exp.trim().parse().ok()?;
            base.checked_pow(exp)
        }
        None => s.parse().ok(),
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_bit_budget")]
    pub bit_budget: f64,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub methods: MethodsSection,
    #[serde(default)]
    pub dn_plane: DnPlaneSection,
    #[serde(default)]
    pub mse: MseSection,
}

fn default_bit_budget() -> f64 {
    DEFAULT_BIT_BUDGET
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    pub noise_scales: Vec<f64>,
    /// LibSVM file; relative paths resolve against the config's directory.
    pub dataset: Option<PathBuf>,
    pub libsvm_dim: Option<usize>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { n: 128, d: 1024, lambda: 0.001, noise_scales: vec![0.0], dataset: None, libsvm_dim: None }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MethodsSection {
    pub list: Vec<String>,
    pub p: NumberOrWord,
    pub stepsize: NumberOrWord,
    /// Inclusive exponent range of the power-of-two tuning multipliers.
    pub tune_exponents: [i32; 2],
    pub record_every: usize,
    /// Fixed round count for the final runs instead of the bit budget.
    pub rounds: Option<usize>,
    /// Bits per coordinate of a sampled client in `marina_comb`.
    pub beta: Option<f64>,
}

impl Default for MethodsSection {
    fn default() -> Self {
        Self {
            list: Vec::new(),
            p: NumberOrWord::Word("optimal".into()),
            stepsize: NumberOrWord::Word("tune".into()),
            tune_exponents: [-4, 6],
            record_every: 1,
            rounds: None,
            beta: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DnPlaneSection {
    pub schemes: Vec<String>,
    pub dmin: Size,
    pub dmax: Size,
    pub nmin: Size,
    pub nmax: Size,
}

impl Default for DnPlaneSection {
    fn default() -> Self {
        Self {
            schemes: vec!["cq".into(), "iq".into()],
            dmin: Size::Text("2^4".into()),
            dmax: Size::Text("2^20".into()),
            nmin: Size::Text("2^4".into()),
            nmax: Size::Text("2^20".into()),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MseSection {
    /// `default` (bound suite and exact CQ law), `bounds` or `cq_exact`.
    pub suite: String,
    pub trials: usize,
    pub exact_clients: Vec<usize>,
}

impl Default for MseSection {
    fn default() -> Self {
        Self { suite: "default".into(), trials: 100_000, exact_clients: vec![2, 4, 8, 16] }
    }
}

/// How `p` is chosen for MARINA methods.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PChoice {
    Optimal,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepChoice {
    Theory,
    Tune,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplerChoice {
    Uniform,
    /// `qᵢ ∝ Lᵢ`.
    Lipschitz,
}

/// One entry of `methods.list`.
#[derive(Clone, Debug, PartialEq)]
pub enum MethodSpec {
    Gd,
    Dcgd(CompressorKind),
    Marina(CompressorKind),
    MarinaComb { sampler: SamplerChoice, inner: CompressorKind },
}

impl MethodSpec {
    /// Parses `gd`, `dcgd:<scheme>`, `marina:<scheme>` or
    /// `marina_comb:<uniform|lipschitz>[/<scheme>]`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h.trim(), Some(t.trim())),
            None => (s, None),
        };
        let kind = |t: &str| CompressorKind::parse(t).map_err(|e| e.to_string());
        match (head, tail) {
            ("gd", None) => Ok(Self::Gd),
            ("dcgd", Some(t)) => Ok(Self::Dcgd(kind(t)?)),
            ("marina", Some(t)) => Ok(Self::Marina(kind(t)?)),
            ("marina_comb", Some(t)) => {
                let (sampler, inner) = match t.split_once('/') {
                    Some((a, b)) => (a.trim(), kind(b)?),
                    None => (t, CompressorKind::Identity),
                };
                let sampler = match sampler {
                    "uniform" => SamplerChoice::Uniform,
                    "lipschitz" => SamplerChoice::Lipschitz,
                    other => return Err(format!("unknown sampler {other:?}")),
                };
                Ok(Self::MarinaComb { sampler, inner })
            }
            _ => Err(format!("unknown method {s:?}")),
        }
    }

    /// File-name friendly label.
    pub fn slug(&self) -> String {
        self.to_string().chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gd => f.write_str("gd"),
            Self::Dcgd(k) => write!(f, "dcgd:{k}"),
            Self::Marina(k) => write!(f, "marina:{k}"),
            Self::MarinaComb { sampler, inner } => {
                let s = match sampler {
                    SamplerChoice::Uniform => "uniform",
                    SamplerChoice::Lipschitz => "lipschitz",
                };
                if *inner == CompressorKind::Identity {
                    write!(f, "marina_comb:{s}")
                } else {
                    write!(f, "marina_comb:{s}/{inner}")
                }
            }
        }
    }
}

/// Builds the combinatorial compressor of a `marina_comb` method.
pub fn combinatorial_spec(
    sampler: SamplerChoice,
    inner: CompressorKind,
    l_i: &[f64],
    beta: Option<f64>,
) -> cqmarina::Result<CombinatorialSpec> {
    let sampler = match sampler {
        SamplerChoice::Uniform => ImportanceSampler::uniform(l_i.len(), 1)?,
        SamplerChoice::Lipschitz => ImportanceSampler::proportional(l_i, 1)?,
    };
    CombinatorialSpec::new(sampler, inner, beta)
}

/// A parsed and validated configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub raw: ExperimentConfig,
    pub methods: Vec<MethodSpec>,
    pub p: PChoice,
    pub stepsize: StepChoice,
    /// Absolute or config-relative dataset path, checked to exist.
    pub dataset: Option<PathBuf>,
}

impl Resolved {
    pub fn kind(&self) -> ExperimentKind {
        self.raw.kind
    }
}

/// Reads, parses and validates a config file.
pub fn load(path: &Path) -> Result<Resolved, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse(&text, base)
}

/// Parses config text; relative dataset paths resolve against `base`.
pub fn parse(text: &str, base: &Path) -> Result<Resolved, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(format!("config syntax: {e}")))?;
    let raw: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::config(&path, inner.message().trim().to_string())
    })?;
    validate(raw, base)
}

pub fn validate(raw: ExperimentConfig, base: &Path) -> Result<Resolved, CliError> {
    let kind = raw.kind;
    if kind != ExperimentKind::DnPlane && raw.seeds.is_empty() {
        return Err(CliError::config("seeds", "must list at least one seed"));
    }
    if !(raw.bit_budget > 0.0 && raw.bit_budget.is_finite()) {
        return Err(CliError::config("bit_budget", "must be positive and finite"));
    }

    let mut methods = Vec::new();
    let mut p = PChoice::Optimal;
    let mut stepsize = StepChoice::Tune;
    let mut dataset = None;
    if kind.is_optimization() {
        let pr = &raw.problem;
        if pr.n == 0 {
            return Err(CliError::config("problem.n", "must be positive"));
        }
        if kind != ExperimentKind::Logistic && pr.d == 0 {
            return Err(CliError::config("problem.d", "must be positive"));
        }
        if !(pr.lambda > 0.0 && pr.lambda.is_finite()) {
            return Err(CliError::config("problem.lambda", "must be positive"));
        }
        if kind != ExperimentKind::Logistic {
            if pr.noise_scales.is_empty() {
                return Err(CliError::config("problem.noise_scales", "must be nonempty"));
            }
            if pr.noise_scales.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
                return Err(CliError::config("problem.noise_scales", "must be nonnegative"));
            }
        }
        if kind == ExperimentKind::Logistic {
            let rel = pr
                .dataset
                .as_ref()
                .ok_or_else(|| CliError::config("problem.dataset", "is required for logistic experiments"))?;
            let full = if rel.is_absolute() { rel.clone() } else { base.join(rel) };
            if !full.is_file() {
                return Err(CliError::config("problem.dataset", format!("file {} does not exist", full.display())));
            }
            dataset = Some(full);
        }

        let m = &raw.methods;
        if m.list.is_empty() {
            return Err(CliError::config("methods.list", "must name at least one method"));
        }
        for (i, s) in m.list.iter().enumerate() {
            let spec = MethodSpec::parse(s).map_err(|e| CliError::config(&format!("methods.list[{i}]"), e))?;
            // Logistic dimensions are known only once the dataset is read.
            let d = if kind == ExperimentKind::Logistic { pr.libsvm_dim } else { Some(pr.d) };
            if let (MethodSpec::Dcgd(k) | MethodSpec::Marina(k), Some(d)) = (&spec, d) {
                cqmarina::compressors::CompressorSpec::new(*k, pr.n, d)
                    .map_err(|e| CliError::config(&format!("methods.list[{i}]"), e.to_string()))?;
            }
            if kind == ExperimentKind::Logistic && matches!(spec, MethodSpec::MarinaComb { .. }) {
                return Err(CliError::config(&format!("methods.list[{i}]"), "marina_comb needs a quadratic problem"));
            }
            if methods.contains(&spec) {
                return Err(CliError::config(&format!("methods.list[{i}]"), format!("duplicate method {spec}")));
            }
            methods.push(spec);
        }
        p = match &m.p {
            NumberOrWord::Word(w) if w == "optimal" => PChoice::Optimal,
            NumberOrWord::Number(v) if *v > 0.0 && *v <= 1.0 => PChoice::Fixed(*v),
            other => return Err(CliError::config("methods.p", format!("expected \"optimal\" or a number in (0, 1], got {other:?}"))),
        };
        stepsize = match &m.stepsize {
            NumberOrWord::Word(w) if w == "theory" => StepChoice::Theory,
            NumberOrWord::Word(w) if w == "tune" => StepChoice::Tune,
            NumberOrWord::Number(v) if *v > 0.0 && v.is_finite() => StepChoice::Fixed(*v),
            other => {
                return Err(CliError::config(
                    "methods.stepsize",
                    format!("expected \"theory\", \"tune\" or a positive number, got {other:?}"),
                ))
            }
        };
        if m.tune_exponents[0] > m.tune_exponents[1] {
            return Err(CliError::config("methods.tune_exponents", "lower exponent exceeds upper"));
        }
        if m.record_every == 0 {
            return Err(CliError::config("methods.record_every", "must be at least 1"));
        }
        if m.rounds == Some(0) {
            return Err(CliError::config("methods.rounds", "must be at least 1"));
        }
        if let Some(b) = m.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(CliError::config("methods.beta", "must be positive"));
            }
        }
    }

    if kind == ExperimentKind::DnPlane {
        let dp = &raw.dn_plane;
        if dp.schemes.is_empty() {
            return Err(CliError::config("dn_plane.schemes", "must be nonempty"));
        }
        for (i, s) in dp.schemes.iter().enumerate() {
            if s != "cq" && s != "iq" {
                return Err(CliError::config(&format!("dn_plane.schemes[{i}]"), format!("{s:?} is not cq or iq")));
            }
        }
        for (key, size) in [("dmin", &dp.dmin), ("dmax", &dp.dmax), ("nmin", &dp.nmin), ("nmax", &dp.nmax)] {
            let v = size.resolve(&format!("dn_plane.{key}"))?;
            if !v.is_power_of_two() {
                return Err(CliError::config(&format!("dn_plane.{key}"), format!("{v} is not a power of two")));
            }
        }
        if dp.dmin.resolve("dn_plane.dmin")? > dp.dmax.resolve("dn_plane.dmax")? {
            return Err(CliError::config("dn_plane.dmin", "exceeds dmax"));
        }
        if dp.nmin.resolve("dn_plane.nmin")? > dp.nmax.resolve("dn_plane.nmax")? {
            return Err(CliError::config("dn_plane.nmin", "exceeds nmax"));
        }
    }

    if kind == ExperimentKind::MseSuite {
        let ms = &raw.mse;
        if !matches!(ms.suite.as_str(), "default" | "bounds" | "cq_exact") {
            return Err(CliError::config("mse.suite", format!("{:?} is not default, bounds or cq_exact", ms.suite)));
        }
        if ms.trials < cqmarina::mselab::MIN_TRIALS {
            return Err(CliError::config("mse.trials", format!("must be at least {}", cqmarina::mselab::MIN_TRIALS)));
        }
        if ms.exact_clients.is_empty() || ms.exact_clients.contains(&0) {
            return Err(CliError::config("mse.exact_clients", "must be a nonempty list of positive counts"));
        }
    }

    Ok(Resolved { raw, methods, p, stepsize, dataset })
}
