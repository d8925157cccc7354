use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cqmarina_cli::config::{self, DnPlaneSection, ExperimentConfig, MseSection, Size};
use cqmarina_cli::{execute, output_dir, seed_report, CliError, ExperimentKind, Resolved, RunOptions};

#[derive(Parser)]
#[command(name = "cqmarina", version, about = "Compressed distributed optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the configured seed list by this single seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Validate the config and print the seed report without writing files.
        #[arg(long)]
        dry_run: bool,
    },
    /// Closed-form communication-complexity analytics.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
    /// Monte-Carlo MSE suites.
    Mse {
        #[arg(long, default_value = "default")]
        suite: String,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Cq,
    Iq,
}

#[derive(Subcommand)]
enum Analysis {
    /// log2 speedup over GD on a power-of-two (d, n) grid.
    DnPlane {
        #[arg(long, value_enum)]
        scheme: Vec<Scheme>,
        #[arg(long, default_value = "2^4")]
        dmin: String,
        #[arg(long, default_value = "2^20")]
        dmax: String,
        #[arg(long, default_value = "2^4")]
        nmin: String,
        #[arg(long, default_value = "2^20")]
        nmax: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn env_output_dir() -> Option<String> {
    std::env::var("OUTPUT_DIR").ok()
}

fn synthetic(kind: ExperimentKind, seeds: Vec<u64>) -> ExperimentConfig {
    let mut cfg: ExperimentConfig = toml::from_str(&format!("kind = \"{kind}\"")).expect("minimal config parses");
    cfg.seeds = seeds;
    cfg
}

fn finish(cfg: &Resolved, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let out_dir = output_dir(out.as_deref(), env_output_dir().as_deref(), cfg);
    let report = execute(cfg, &RunOptions { out_dir: out_dir.clone(), seed_override: seed })?;
    println!("wrote {} file(s) under {}", report.files.len(), out_dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config: path, seed, out, dry_run } => {
            let cfg = config::load(&path)?;
            print!("{}", seed_report(&cfg, seed));
            if dry_run {
                println!("config ok");
                return Ok(());
            }
            let out_dir = output_dir(out.as_deref(), env_output_dir().as_deref(), &cfg);
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| CliError::io(format!("cannot create {}", out_dir.display()), e))?;
            let report_path = out_dir.join("seeds.txt");
            std::fs::write(&report_path, seed_report(&cfg, seed))
                .map_err(|e| CliError::io(format!("cannot write {}", report_path.display()), e))?;
            finish(&cfg, Some(out_dir), seed)
        }
        Command::Analyze { what: Analysis::DnPlane { scheme, dmin, dmax, nmin, nmax, out } } => {
            let mut raw = synthetic(ExperimentKind::DnPlane, Vec::new());
            let schemes = if scheme.is_empty() { vec![Scheme::Cq, Scheme::Iq] } else { scheme };
            raw.dn_plane = DnPlaneSection {
                schemes: schemes
                    .iter()
                    .map(|s| match s {
                        Scheme::Cq => "cq".to_string(),
                        Scheme::Iq => "iq".to_string(),
                    })
                    .collect(),
                dmin: Size::Text(dmin),
                dmax: Size::Text(dmax),
                nmin: Size::Text(nmin),
                nmax: Size::Text(nmax),
            };
            let cfg = config::validate(raw, std::path::Path::new("."))?;
            finish(&cfg, out, None)
        }
        Command::Mse { suite, trials, seed, out } => {
            let mut raw = synthetic(ExperimentKind::MseSuite, vec![seed]);
            raw.mse = MseSection { suite, trials, ..MseSection::default() };
            let cfg = config::validate(raw, std::path::Path::new("."))?;
            finish(&cfg, out, None)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(&e)
        }
    }
}
